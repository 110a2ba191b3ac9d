"""Partial Fourier matrices, Gram spectra and frame certificates.

With the unitary transform ``f(x) = (2*pi)**-0.5 * int exp(-i t x) F(t) dt``,
for a grid spectrum (m, I, d) and residues J the set
``Lambda = {(j + k*m)/d}`` satisfies, for every F in L^2(Omega),

    sum_lambda |<F, e_lambda>|^2 = (2*pi*d/m) * int |B^- F_vec(t)|^2 dt

where ``B = F_I(J)`` and ``F_vec(t) = (F(t + 2*pi*d*r/m))_{r in I}``. Hence the
frame bounds of E(Lambda) on L^2(Omega) are ``2*pi*d*lambda_{min,max}(B* B)/m``
and the sampling constants for PW_Omega are those divided by ``2*pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from expframe.errors import IndexOutOfRange, InputError, NotHermitian, ProblemTooLarge, SingularOperator
from expframe.spectrum import TWO_PI, GridSpectrum

MAX_ORDER = 4096
HERMITIAN_TOL = 1e-8
CLAMP_TOL = 1e-9


def _index_set(idx: Iterable[int], m: int, name: str) -> np.ndarray:
    arr = np.array(sorted({int(i) for i in idx}), dtype=np.int64)
    if arr.size == 0:
        raise InputError(f"index set {name} is empty")
    if arr[0] < 0 or arr[-1] >= m:
        raise IndexOutOfRange(f"index set {name} has entries outside [0, {m - 1}]")
    return arr


@dataclass(frozen=True)
class RowSelection:
    J: tuple[int, ...]

    def __post_init__(self):
        J = tuple(sorted({int(j) for j in self.J}))
        if not J:
            raise InputError("row selection J is empty")
        if J[0] < 0:
            raise IndexOutOfRange("row selection has negative entries")
        object.__setattr__(self, "J", J)

    def __len__(self):
        return len(self.J)

    def __iter__(self):
        return iter(self.J)


@dataclass(frozen=True)
class FrequencySet:
    """``Lambda = {(j + k*m)/d : j in J, k in Z}``."""

    J: tuple[int, ...]
    m: int
    d: float = 1.0

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise InputError(f"modulus must be positive, got {self.m}")
        J = tuple(_index_set(self.J, m, "J").tolist())
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "d", float(self.d))

    @property
    def separation(self) -> float:
        """Smallest gap between distinct points of Lambda."""
        J = self.J
        gaps = [b - a for a, b in zip(J, J[1:])] + [J[0] + self.m - J[-1]]
        return min(gaps) / self.d

    @property
    def density(self) -> float:
        return len(self.J) * self.d / self.m

    def to_json(self) -> dict:
        return {"J": list(self.J), "m": self.m, "d": self.d}


@dataclass(frozen=True)
class FrameCertificate:
    lambda_min: float
    lambda_max: float
    m: int
    n: int
    J_size: int
    d: float

    @property
    def a_sampling(self) -> float:
        return self.d * self.lambda_min / self.m

    @property
    def A_sampling(self) -> float:
        return self.d * self.lambda_max / self.m

    @property
    def a_frame(self) -> float:
        return TWO_PI * self.d * self.lambda_min / self.m

    @property
    def A_frame(self) -> float:
        return TWO_PI * self.d * self.lambda_max / self.m

    @property
    def normalized_lower(self) -> float:
        return self.lambda_min / self.n

    @property
    def normalized_upper(self) -> float:
        return self.lambda_max / self.n

    @property
    def is_frame(self) -> bool:
        return self.lambda_min > 0

    @property
    def ratio(self) -> float:
        """Condition number ``A/a`` of the frame; ``inf`` when not a frame."""
        return self.lambda_max / self.lambda_min if self.lambda_min > 0 else math.inf

    def to_json(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "a_sampling": self.a_sampling,
            "A_sampling": self.A_sampling,
            "a_frame": self.a_frame,
            "A_frame": self.A_frame,
            "normalized_lower": self.normalized_lower,
            "normalized_upper": self.normalized_upper,
            "is_frame": self.is_frame,
            "m": self.m,
            "n": self.n,
            "J_size": self.J_size,
            "d": self.d,
        }


def build_submatrix(m: int, I: Iterable[int], J: Iterable[int]) -> np.ndarray:
    """Rows ``J`` and columns ``I`` of the order-``m`` Fourier matrix.

    Entry ``(j, r)`` is ``exp(2*pi*i*j*r/m)``; the phase is reduced mod ``m``
    in integer arithmetic first so entries are accurate for large ``m``.
    """
    if m < 1:
        raise InputError(f"order must be positive, got {m}")
    if m > MAX_ORDER:
        raise ProblemTooLarge(f"order {m} exceeds the dense limit {MAX_ORDER}")
    cols = _index_set(I, m, "I")
    rows = _index_set(J, m, "J")
    phase = np.outer(rows, cols) % m
    return np.exp(2j * np.pi * phase / m)


def gram(B: np.ndarray) -> np.ndarray:
    B = np.asarray(B, dtype=complex)
    G = B.conj().T @ B
    return 0.5 * (G + G.conj().T)


def _check_hermitian(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {G.shape}")
    scale = np.linalg.norm(G)
    if np.linalg.norm(G - G.conj().T) > HERMITIAN_TOL * max(scale, 1e-300):
        raise NotHermitian("matrix asymmetry exceeds tolerance")
    return G


def eigen_extremes(G: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a Hermitian PSD matrix.

    A smallest eigenvalue within ``1e-9 * lambda_max`` of zero is reported as 0.
    """
    G = _check_hermitian(G)
    w = np.linalg.eigvalsh(G)
    lo, hi = float(w[0]), float(w[-1])
    if abs(lo) <= CLAMP_TOL * abs(hi):
        lo = 0.0
    return lo, hi


def gram_spectrum(G: GridSpectrum, J: Iterable[int]) -> np.ndarray:
    """All Gram eigenvalues, ascending."""
    return np.linalg.eigvalsh(gram(build_submatrix(G.m, G.I, J)))


def frame_certificate(G: GridSpectrum, J: RowSelection | Iterable[int]) -> FrameCertificate:
    rows = J.J if isinstance(J, RowSelection) else tuple(J)
    B = build_submatrix(G.m, G.I, rows)
    lo, hi = eigen_extremes(gram(B))
    return FrameCertificate(
        lambda_min=lo, lambda_max=hi, m=G.m, n=G.n, J_size=B.shape[0], d=G.d
    )


def enumerate_lambda(F: FrequencySet, window: Sequence[float]) -> list[float]:
    """All points of Lambda in ``[x0, x1)``, ascending.

    Membership is decided in exact rational arithmetic on the double inputs.
    """
    x0, x1 = window
    if not x0 < x1:
        raise InputError(f"empty window [{x0}, {x1})")
    d = Fraction(F.d)
    lo, hi = Fraction(x0) * d, Fraction(x1) * d
    out = []
    for j in F.J:
        k0 = math.ceil((lo - j) / F.m)
        k1 = math.ceil((hi - j) / F.m)
        out.extend((j + k * F.m) / F.d for k in range(k0, k1))
    out.sort()
    return out


def count_in_window(F: FrequencySet, x0: Fraction, x1: Fraction) -> int:
    """Exact ``#(Lambda & [x0, x1))`` for rational endpoints."""
    d = Fraction(F.d)
    lo, hi = Fraction(x0) * d, Fraction(x1) * d
    return sum(math.ceil((hi - j) / F.m) - math.ceil((lo - j) / F.m) for j in F.J)


def inverse_sqrt(M: np.ndarray) -> np.ndarray:
    """``M^{-1/2}`` for Hermitian positive definite ``M`` via its eigendecomposition."""
    M = _check_hermitian(M)
    w, V = np.linalg.eigh(M)
    if not w[0] > 1e-10 * w[-1]:
        raise SingularOperator(
            f"operator is singular to working precision (eigenvalues {w[0]:.3g} .. {w[-1]:.3g})"
        )
    R = (V / np.sqrt(w)) @ V.conj().T
    return 0.5 * (R + R.conj().T)
