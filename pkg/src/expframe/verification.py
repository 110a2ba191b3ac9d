"""Independent checks of frame certificates.

Paley-Wiener test functions are built cell by cell: on cell ``r`` the
spectrum is the trigonometric polynomial ``sum_k s[r, k] exp(i k (m/d) t)``.
Its norm follows from orthogonality on the cell, and its samples are finite
sums of closed-form cell integrals, so the only inexact quantity in a sampling
ratio is the truncation of the sum over Lambda to ``|lambda| <= R``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from expframe.errors import InputError, TruncationTooSevere
from expframe.matrix_core import (
    FrameCertificate,
    FrequencySet,
    RowSelection,
    build_submatrix,
    count_in_window,
    enumerate_lambda,
    frame_certificate,
    gram,
)
from expframe.selection import default_threads
from expframe.spectrum import TWO_PI, GridSpectrum

SQRT_2PI = math.sqrt(TWO_PI)


def _rows(J) -> tuple[int, ...]:
    return J.J if isinstance(J, RowSelection) else tuple(sorted({int(j) for j in J}))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


def _cell_integrals(omega: np.ndarray, a: np.ndarray, T: float) -> np.ndarray:
    """``int_a^{a+T} exp(i omega t) dt`` broadcast over ``omega`` and ``a``."""
    return T * np.exp(1j * omega * (a + T / 2)) * np.sinc(omega * T / TWO_PI)


@dataclass
class PWTestFunction:
    """Element of PW over a grid spectrum given by per-cell Fourier coefficients.

    ``coefficients[r_pos, k + K]`` multiplies ``exp(i k (m/d) t)`` on the cell
    ``grid.I[r_pos]``.
    """

    grid: GridSpectrum
    coefficients: np.ndarray
    K: int

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.grid.n, 2 * self.K + 1):
            raise InputError(
                f"coefficients must have shape {(self.grid.n, 2 * self.K + 1)}, "
                f"got {self.coefficients.shape}"
            )

    @classmethod
    def random(cls, grid: GridSpectrum, K: int, rng: np.random.Generator) -> "PWTestFunction":
        shape = (grid.n, 2 * K + 1)
        s = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
        return cls(grid, s, K)

    @classmethod
    def from_vector(
        cls, grid: GridSpectrum, w: np.ndarray, K: int, rng: np.random.Generator
    ) -> "PWTestFunction":
        """Function whose cell profiles are all proportional to ``conj(w)``.

        If ``w`` is an eigenvector of ``B* B`` the sampling ratio equals
        ``d * eigenvalue / m`` exactly.
        """
        c = (rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1)) / math.sqrt(2)
        return cls(grid, np.outer(np.conj(np.asarray(w, dtype=complex)), c), K)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1) * self.grid.m / self.grid.d

    def norm_sq(self) -> float:
        return self.grid.cell_width * float(np.sum(np.abs(self.coefficients) ** 2))

    def spectrum_values(self, t: np.ndarray) -> np.ndarray:
        """The Fourier transform F at points ``t`` (zero off the spectrum)."""
        t = np.asarray(t, dtype=float)
        g = self.grid
        cell = np.floor(t * g.m / (TWO_PI * g.d)).astype(np.int64)
        pos = {r: i for i, r in enumerate(g.I)}
        out = np.zeros(t.shape, dtype=complex)
        waves = np.exp(1j * t[..., None] * self.frequencies)
        for r, i in pos.items():
            sel = cell == r
            out[sel] = waves[sel] @ self.coefficients[i]
        return out

    def evaluate(self, x, chunk: int = 8192) -> np.ndarray:
        # exp(i k (m/d) a_r) = 1 at every cell edge, so each cell integral is a
        # phase exp(-i x a_r) times an integral over [0, T] shared by all cells
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a = self.grid.cell_edges()
        T = self.grid.cell_width
        out = np.empty(x.shape, dtype=complex)
        for s in range(0, x.size, chunk):
            xs = x[s : s + chunk]
            base = _cell_integrals(self.frequencies[None, :] - xs[:, None], 0.0, T)
            per_cell = base @ self.coefficients.T
            out[s : s + chunk] = np.sum(np.exp(-1j * np.outer(xs, a)) * per_cell, axis=1)
        return out / SQRT_2PI

    def jumps(self) -> dict[int, complex]:
        """Jumps ``F(t+) - F(t-)`` at cell boundaries, keyed by grid position."""
        g = self.grid
        edge_value = {r: complex(self.coefficients[i].sum()) for i, r in enumerate(g.I)}
        out = {}
        for p in sorted(set(g.I) | {r + 1 for r in g.I}):
            jump = edge_value.get(p, 0.0) - edge_value.get(p - 1, 0.0)
            if jump != 0:
                out[p] = jump
        return out

    def sample_sum(self, F: FrequencySet, R: float) -> float:
        pts = np.asarray(enumerate_lambda(F, (-R, math.nextafter(R, math.inf))))
        return float(np.sum(np.abs(self.evaluate(pts)) ** 2))

    def tail_estimate(self, F: FrequencySet, R: float) -> float:
        """Leading-order estimate of ``sum_{|lambda| > R} |f(lambda)|^2 / ||f||^2``.

        For large ``|x|``, ``f(x) ~ sum_p jump_p exp(-i x t_p) / (i sqrt(2 pi) x)``
        over the boundary points ``t_p``. On ``(j + mZ)/d`` the phases depend only
        on ``j``, and ``sum 1/lambda^2`` over one residue class beyond ``R`` on
        both sides is about ``2d/(m R)``. ``R`` is reduced by ``(K+1) m/d`` to
        absorb the spread of the cell frequencies.
        """
        g = self.grid
        r_eff = R - (self.K + 1) * g.m / g.d
        if r_eff <= 0:
            return math.inf
        jumps = self.jumps()
        if not jumps:
            return 0.0
        pos = np.array(list(jumps))
        amp = np.array(list(jumps.values()))
        J = np.asarray(F.J)
        phase = np.exp(-2j * np.pi * (np.outer(J, pos) % g.m) / g.m)
        energy = float(np.sum(np.abs(phase @ amp) ** 2))
        return energy * 2.0 * g.d / (g.m * r_eff) / TWO_PI / self.norm_sq()


@dataclass
class MonteCarloReport:
    ratios: list[float]
    tails: list[float]
    certified: tuple[float, float]
    tol: float
    R: float
    K: int

    @property
    def min_ratio(self) -> float:
        return min(self.ratios)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def tail_bound(self) -> float:
        return max(self.tails)

    @property
    def passed(self) -> bool:
        a, A = self.certified
        return all(
            a * (1 - self.tol) - t <= q <= A * (1 + self.tol)
            for q, t in zip(self.ratios, self.tails)
        )

    def to_json(self) -> dict:
        return {
            "ratios": self.ratios,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "certified": list(self.certified),
            "tail_bound": self.tail_bound,
            "tol": self.tol,
            "R": self.R,
            "K": self.K,
            "pass": self.passed,
        }


def rayleigh_matrix_samples(G: GridSpectrum, J, count: int, seed: int = 0) -> list[float]:
    """``||B w||^2`` for ``count`` random unit vectors ``w``."""
    if count < 1:
        raise InputError("count must be positive")
    B = build_submatrix(G.m, G.I, _rows(J))
    rng = _rng(seed)
    W = rng.standard_normal((count, G.n)) + 1j * rng.standard_normal((count, G.n))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    return np.sum(np.abs(W @ B.T) ** 2, axis=1).tolist()


def extremal_witness(G: GridSpectrum, J, side: str = "min") -> tuple[np.ndarray, float]:
    """Unit eigenvector of the Gram for its smallest or largest eigenvalue."""
    if side not in ("min", "max"):
        raise InputError(f"side must be 'min' or 'max', got {side!r}")
    B = build_submatrix(G.m, G.I, _rows(J))
    _, vecs = np.linalg.eigh(gram(B))
    w = vecs[:, 0] if side == "min" else vecs[:, -1]
    return w, float(np.linalg.norm(B @ w) ** 2)


def pw_monte_carlo(
    G: GridSpectrum,
    J,
    count: int = 200,
    K: int = 4,
    R: float | None = None,
    seed: int = 0,
    tol: float = 0.02,
    threads: int | None = None,
) -> MonteCarloReport:
    """Sampling ratios ``sum |f(lambda)|^2 / ||f||^2`` for random PW functions.

    Trial ``i`` draws its coefficients from a generator keyed by ``(seed, i)``,
    so the report does not depend on ``threads``.
    """
    if K < 1 or count < 1:
        raise InputError("K and count must be positive")
    R = 50.0 * G.m / G.d if R is None else float(R)
    if R < 10.0 * G.m / G.d:
        raise InputError(f"truncation radius R={R} is below 10*m/d = {10.0 * G.m / G.d}")
    cert = frame_certificate(G, _rows(J))
    F = FrequencySet(_rows(J), G.m, G.d)

    def trial(i):
        fn = PWTestFunction.random(G, K, _rng(seed, i))
        return fn.sample_sum(F, R) / fn.norm_sq(), fn.tail_estimate(F, R)

    threads = default_threads() if threads is None else max(1, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(trial, range(count)))
    report = MonteCarloReport(
        ratios=[q for q, _ in results],
        tails=[t for _, t in results],
        certified=(cert.a_sampling, cert.A_sampling),
        tol=tol,
        R=R,
        K=K,
    )
    if cert.a_sampling > 0 and report.tail_bound > tol * cert.a_sampling:
        raise TruncationTooSevere(
            f"estimated tail {report.tail_bound:.3g} exceeds tol*a_sampling = "
            f"{tol * cert.a_sampling:.3g}; increase R"
        )
    return report


def witness_ratio(
    G: GridSpectrum, J, side: str, K: int = 4, R: float | None = None, seed: int = 0
) -> tuple[float, float]:
    """Sampling ratio and tail estimate of a PW function built on an extremal eigenvector."""
    R = 50.0 * G.m / G.d if R is None else float(R)
    w, _ = extremal_witness(G, J, side)
    fn = PWTestFunction.from_vector(G, w, K, _rng(seed))
    F = FrequencySet(_rows(J), G.m, G.d)
    return fn.sample_sum(F, R) / fn.norm_sq(), fn.tail_estimate(F, R)


# --------------------------------------------------------------------------
# density diagnostics


def indicator_transform(G: GridSpectrum, x) -> np.ndarray:
    """Unitary Fourier transform of the indicator of the grid spectrum."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = _cell_integrals(-x[:, None], G.cell_edges()[None, :], G.cell_width)
    return vals.sum(axis=1) / SQRT_2PI


def window_eta(G: GridSpectrum, iterations: int = 48) -> tuple[float, float]:
    """Window length on which ``|h| > |Omega|/3``, with ``h`` the transform of 1_Omega.

    The condition is tested on 1025 equispaced points of ``[-eta/2, eta/2]``.
    Bisection runs on dyadic rationals starting from 1, so the result is the
    largest passing dyadic value at the final resolution. Returns ``(eta, h(0))``.
    """
    level = G.measure / 3.0
    h0 = float(abs(indicator_transform(G, [0.0])[0]))

    def holds(eta):
        xs = np.linspace(-eta / 2, eta / 2, 1025)
        return bool(np.min(np.abs(indicator_transform(G, xs))) > level)

    lo = hi = 1.0
    if holds(1.0):
        while holds(hi):
            lo, hi = hi, 2 * hi
    else:
        while not holds(lo):
            hi, lo = lo, lo / 2
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo, h0


def max_window_count(F: FrequencySet, length: float) -> int:
    """Largest ``#(Lambda & [x, x + length))`` over all ``x``."""
    # an extremal window can be slid right until it starts at a point of Lambda
    L = Fraction(length)
    return max(count_in_window(F, Fraction(j) / Fraction(F.d), Fraction(j) / Fraction(F.d) + L) for j in F.J)


@dataclass
class DensityReport:
    window: float
    offsets: list[float]
    counts: list[int]
    landau_floor: float
    periodic_window: bool
    J_size: int
    n: int | None = None
    upper_density_bound: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def min_count(self) -> int:
        return min(self.counts)

    @property
    def max_count(self) -> int:
        return max(self.counts)

    @property
    def densities(self) -> list[float]:
        return [c / self.window for c in self.counts]

    @property
    def min_density(self) -> float:
        return self.min_count / self.window

    @property
    def max_density(self) -> float:
        return self.max_count / self.window

    @property
    def landau_ok(self) -> bool | None:
        """Lower density meets ``|Omega|/(2 pi)``; decided only on period-multiple windows."""
        if not self.periodic_window:
            return None
        return self.min_density >= self.landau_floor * (1 - 1e-9)

    @property
    def J_covers_n(self) -> bool | None:
        return None if self.n is None else self.J_size >= self.n

    @property
    def upper_ok(self) -> bool | None:
        if self.upper_density_bound is None:
            return None
        return self.max_density <= self.upper_density_bound

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "offsets": self.offsets,
            "counts": self.counts,
            "min_count": self.min_count,
            "max_count": self.max_count,
            "min_density": self.min_density,
            "max_density": self.max_density,
            "landau_floor": self.landau_floor,
            "periodic_window": self.periodic_window,
            "landau_ok": self.landau_ok,
            "J_size": self.J_size,
            "n": self.n,
            "J_covers_n": self.J_covers_n,
            "upper_density_bound": self.upper_density_bound,
            "upper_ok": self.upper_ok,
            **self.extra,
        }


def density_report(
    F: FrequencySet,
    Omega_measure: float,
    window: float,
    scan: Sequence[float],
    n: int | None = None,
    certificate: FrameCertificate | None = None,
) -> DensityReport:
    """Counts of Lambda in windows of length ``window`` sliding by ``window/4``.

    A window within 1e-12 of a whole number of periods ``m/d`` is snapped to
    that exact multiple, and all counting is in rational arithmetic. With a
    certificate the long-window upper bound ``4 * A_sampling`` is attached.
    """
    if not window > 0:
        raise InputError("window must be positive")
    x0, x1 = scan
    if x1 - x0 < 10 * window * (1 - 1e-12):
        raise InputError("scan range must cover at least 10 windows")
    q = window * F.d / F.m
    periodic = round(q) >= 1 and abs(q - round(q)) <= 1e-12 * max(1.0, q)
    W = Fraction(round(q) * F.m) / Fraction(F.d) if periodic else Fraction(window)
    step = W / 4
    start, stop = Fraction(x0), Fraction(x1)
    offsets, counts = [], []
    x = start
    while x + W <= stop:
        offsets.append(float(x))
        counts.append(count_in_window(F, x, x + W))
        x += step
    return DensityReport(
        window=float(W),
        offsets=offsets,
        counts=counts,
        landau_floor=Omega_measure / TWO_PI,
        periodic_window=periodic,
        J_size=len(F.J),
        n=n,
        upper_density_bound=None if certificate is None else 4.0 * certificate.A_sampling,
    )


def window_count_check(G: GridSpectrum, J) -> dict:
    """Compare the most points of Lambda in any eta-window with ``9 * A / |Omega|``.

    Both the sampling-normalized constant and the frame-normalized one (larger
    by ``2 pi``) are reported.
    """
    cert = frame_certificate(G, _rows(J))
    F = FrequencySet(_rows(J), G.m, G.d)
    eta, h0 = window_eta(G)
    count = max_window_count(F, eta)
    bound_s = 9.0 * cert.A_sampling / G.measure
    bound_f = 9.0 * cert.A_frame / G.measure
    return {
        "eta": eta,
        "h0": h0,
        "max_count": count,
        "bound_sampling": bound_s,
        "bound_frame": bound_f,
        "ok_sampling": count <= bound_s,
        "ok_frame": count <= bound_f,
    }
