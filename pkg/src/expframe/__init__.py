"""Exponential frames on grid spectra with exact partial-Fourier certificates."""

from expframe.errors import (
    BadInterval,
    DeltaOutOfRange,
    EmptySpectrum,
    ExpFrameError,
    GridTooCoarse,
    IndexOutOfRange,
    NoCertifiedPartition,
    NotHermitian,
    ProblemTooLarge,
    SingularOperator,
    TruncationTooSevere,
)
from expframe.matrix_core import (
    FrameCertificate,
    FrequencySet,
    build_submatrix,
    eigen_extremes,
    enumerate_lambda,
    frame_certificate,
    gram,
    inverse_sqrt,
)
from expframe.selection import (
    HalvingSchedule,
    SelectionConfig,
    SelectionTrace,
    compute_schedule,
    iterated_halving,
    partition_step,
    select_rows,
)
from expframe.spectrum import (
    GridSpectrum,
    IntervalUnion,
    grid_cover,
    measure,
    normalize_to_window,
    validate,
)

__version__ = "0.1.0"
