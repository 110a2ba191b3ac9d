"""Exception hierarchy. Every error carries the pipeline stage that raised it."""


class ExpFrameError(Exception):
    stage = "general"


class InputError(ExpFrameError, ValueError):
    stage = "input"


class BadInterval(InputError):
    stage = "spectrum"


class EmptySpectrum(InputError):
    stage = "spectrum"


class IndexOutOfRange(InputError):
    stage = "matrix"


class ProblemTooLarge(InputError):
    stage = "matrix"


class DeltaOutOfRange(InputError):
    stage = "schedule"


class GridTooCoarse(ExpFrameError):
    stage = "grid-cover"


class NotHermitian(ExpFrameError):
    stage = "eigensolver"


class SingularOperator(ExpFrameError):
    stage = "whitening"


class TruncationTooSevere(ExpFrameError):
    stage = "verification"


class NoCertifiedPartition(ExpFrameError):
    """No partition met the target bounds.

    ``best`` holds the best partition seen as ``(S1, S2)`` and ``best_bounds``
    its ``((lo1, hi1), (lo2, hi2))`` extreme eigenvalues; ``trace`` is filled
    in by the halving driver.
    """

    stage = "partition"

    def __init__(self, message, best=None, best_bounds=None, trace=None):
        super().__init__(message)
        self.best = best
        self.best_bounds = best_bounds
        self.trace = trace
