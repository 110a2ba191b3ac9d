"""Certified row-subset selection by iterated two-way partitioning.

Each halving step whitens the current vectors into a Parseval system, searches
partitions of the whitened vectors, and certifies the candidate parts on the
original vectors against the two-sided target bounds

    lower = alpha * (1 - 5*sqrt(delta/alpha)) / 2
    upper = beta  * (1 + 5*sqrt(delta/alpha)) / 2

No polynomial-time construction of such partitions is known, so every search
strategy here is a heuristic whose output is checked; failure raises
:class:`NoCertifiedPartition` instead of returning an uncertified set.

Randomness comes from numpy's Philox4x64 counter-based generator, keyed per
attempt by ``SeedSequence([seed, step, attempt])``, so every attempt is
reproducible on its own and results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from expframe.errors import DeltaOutOfRange, InputError, NoCertifiedPartition
from expframe.matrix_core import (
    CLAMP_TOL,
    FrameCertificate,
    RowSelection,
    build_submatrix,
    eigen_extremes,
    frame_certificate,
    gram,
    inverse_sqrt,
)
from expframe.spectrum import GridSpectrum

METHODS = ("exhaustive", "random_certified", "greedy_swap")
EXHAUSTIVE_PARTITION_LIMIT = 24
EXHAUSTIVE_SUBSET_LIMIT = 20
TRIVIAL_RATIO = 0.01
PRECONDITION_TOL = 1e-9
_CHUNK = 1 << 15


def default_threads() -> int:
    raw = os.environ.get("EXPFRAME_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def attempt_rng(seed: int, step: int, attempt: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, step, attempt])
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# schedule


def _limit_constant(rtol: float = 1e-12) -> float:
    prod, j = 1.0, 0
    while True:
        t = 2.0 ** (-1.0 - j / 2.0)
        new = prod * (1.0 + t) / (1.0 - t)
        if abs(new / prod - 1.0) < rtol:
            return new
        prod, j = new, j + 1


@dataclass(frozen=True)
class HalvingSchedule:
    """Worst-case lower/upper bounds after each halving step.

    ``alphas`` and ``betas`` run from index 0 through ``L + 1``.
    """

    delta: float
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    L: int
    C_product: float

    @property
    def gammas(self) -> tuple[float, ...]:
        return tuple(5.0 * math.sqrt(self.delta / a) for a in self.alphas[: self.L + 1])

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "L": self.L,
            "C_product": self.C_product,
            "alphas": list(self.alphas),
            "betas": list(self.betas),
        }


def compute_schedule(delta: float) -> HalvingSchedule:
    """Iterate the bound recursion until the lower bound drops below ``100*delta``.

    ``L`` is the last index with ``alpha_L >= 100*delta``; ``L = 0`` happens
    when ``delta`` is close to 1/100.
    """
    if not 0.0 < delta < 0.01:
        raise DeltaOutOfRange(f"delta must lie in (0, 1/100), got {delta}")
    alphas, betas = [1.0], [1.0]
    while alphas[-1] >= 100.0 * delta:
        a = alphas[-1]
        g = 5.0 * math.sqrt(delta / a)
        alphas.append(a * (1.0 - g) / 2.0)
        betas.append(betas[-1] * (1.0 + g) / 2.0)
    return HalvingSchedule(
        delta=delta,
        alphas=tuple(alphas),
        betas=tuple(betas),
        L=len(alphas) - 2,
        C_product=_limit_constant(),
    )


def split_bound(eps: float) -> float:
    """Upper bound ``(1 + sqrt(2*eps))**2 / 2`` on both parts of a Parseval split."""
    return (1.0 + math.sqrt(2.0 * eps)) ** 2 / 2.0


# --------------------------------------------------------------------------
# configuration and trace


@dataclass(frozen=True)
class SelectionConfig:
    method: str = "random_certified"
    seed: int = 0
    max_attempts: int = 1000
    slack: float = 0.05

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.max_attempts < 1:
            raise InputError("max_attempts must be positive")
        if self.slack < 0:
            raise InputError("slack must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "SelectionConfig":
        known = {k: obj[k] for k in ("method", "seed", "max_attempts", "slack") if k in obj}
        return cls(**known)


@dataclass(frozen=True)
class TraceStep:
    subset: tuple[int, ...]
    alpha_target: float
    beta_target: float
    achieved_min: float
    achieved_max: float
    schedule_alpha: float
    schedule_beta: float
    strategy: str
    attempt: int

    def to_json(self) -> dict:
        out = asdict(self)
        out["subset"] = list(self.subset)
        return out


@dataclass
class SelectionTrace:
    """Audit record of a selection run.

    Achieved and target bounds are on the Gram of the normalized rows
    ``B / sqrt(m)``, i.e. the raw Gram eigenvalues divided by ``m``.
    """

    m: int
    I: tuple[int, ...]
    mode: str
    slack: float
    steps: list[TraceStep] = field(default_factory=list)
    final_J: tuple[int, ...] = ()
    schedule: HalvingSchedule | None = None

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "I": list(self.I),
            "mode": self.mode,
            "slack": self.slack,
            "schedule": None if self.schedule is None else self.schedule.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "final_J": list(self.final_J),
        }


# --------------------------------------------------------------------------
# partition search


@dataclass(frozen=True)
class PartitionResult:
    S1: tuple[int, ...]
    S2: tuple[int, ...]
    bounds1: tuple[float, float]
    bounds2: tuple[float, float]
    lower_target: float
    upper_target: float
    strategy: str
    attempt: int


def _part_extremes(V: np.ndarray, S: np.ndarray) -> tuple[float, float]:
    if len(S) == 0:
        return 0.0, 0.0
    return eigen_extremes(gram(V[S]))


def _batched_extremes(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.linalg.eigvalsh(G)
    return w[..., 0], w[..., -1]


def _outer_rows(V: np.ndarray) -> np.ndarray:
    """Row ``i`` is the flattened contribution ``conj(v_i) v_i^T`` to ``V^H V``."""
    k, n = V.shape
    return (V.conj()[:, :, None] * V[:, None, :]).reshape(k, n * n)


class _Certifier:
    def __init__(self, V, lo_req, hi_req):
        self.V = V
        self.lo_req = lo_req
        self.hi_req = hi_req

    def violation(self, b1, b2) -> float:
        """Largest relative shortfall against the targets; <= 0 means certified."""
        worst = -math.inf
        for lo, hi in (b1, b2):
            worst = max(worst, (self.lo_req - lo) / max(abs(self.lo_req), 1e-300))
            worst = max(worst, (hi - self.hi_req) / self.hi_req)
        return worst

    def check(self, S1, S2):
        b1 = _part_extremes(self.V, S1)
        b2 = _part_extremes(self.V, S2)
        return b1, b2, self.violation(b1, b2)


def _random_split(k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(k)
    return np.sort(perm[: k // 2]), np.sort(perm[k // 2 :])


def _greedy_descent(U: np.ndarray, S1: np.ndarray, max_iter: int) -> np.ndarray:
    """Single-element moves that decrease ``max(lmax(G1), lmax(I - G1))``."""
    k, n = U.shape
    P = _outer_rows(U).reshape(k, n, n)
    in1 = np.zeros(k, dtype=bool)
    in1[S1] = True
    G = P[in1].sum(axis=0)
    lo, hi = _batched_extremes(G)
    current = max(hi, 1.0 - lo)
    for _ in range(max_iter):
        sign = np.where(in1, -1.0, 1.0)
        cand = G[None] + sign[:, None, None] * P
        clo, chi = _batched_extremes(cand)
        obj = np.maximum(chi, 1.0 - clo)
        size1 = in1.sum()
        # never empty either side
        if size1 == 1:
            obj[in1] = np.inf
        if size1 == k - 1:
            obj[~in1] = np.inf
        i = int(np.argmin(obj))
        if not obj[i] < current - 1e-14:
            break
        G = cand[i]
        in1[i] = not in1[i]
        current = obj[i]
    return np.flatnonzero(in1)


def _search_attempt(method, V, U, cert, seed, step, attempt):
    k = V.shape[0]
    rng = attempt_rng(seed, step, attempt)
    S1, S2 = _random_split(k, rng)
    if method == "greedy_swap":
        S1 = _greedy_descent(U, S1, max_iter=4 * k)
        S2 = np.setdiff1d(np.arange(k), S1)
    b1, b2, viol = cert.check(S1, S2)
    return S1, S2, b1, b2, viol


def _exhaustive_partition(V, U, cert):
    """Scan every split with element 0 in the first part and both parts nonempty.

    Among certified splits the one with the most balanced whitened parts wins,
    ties going to the lowest enumeration index.
    """
    k, n = V.shape
    ov, ou = _outer_rows(V), _outer_rows(U)
    Mv = ov.sum(axis=0)
    eye = np.eye(n).reshape(-1)
    total = 1 << (k - 1)
    bits = 1 << np.arange(k - 1, dtype=np.int64)
    best_cert = (math.inf, -1)
    best_any = (math.inf, -1)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        masks = np.ones((len(codes), k), dtype=float)
        masks[:, 1:] = (codes[:, None] & bits) != 0
        keep = masks.sum(axis=1) < k
        G1v = (masks @ ov).reshape(-1, n, n)
        G2v = (Mv - masks @ ov).reshape(-1, n, n)
        G1u = (masks @ ou).reshape(-1, n, n)
        lo1, hi1 = _batched_extremes(G1v)
        lo2, hi2 = _batched_extremes(G2v)
        ulo, uhi = _batched_extremes(G1u)
        balance = np.maximum(uhi, 1.0 - ulo)
        viol = np.maximum.reduce(
            [
                (cert.lo_req - lo1) / max(abs(cert.lo_req), 1e-300),
                (cert.lo_req - lo2) / max(abs(cert.lo_req), 1e-300),
                (hi1 - cert.hi_req) / cert.hi_req,
                (hi2 - cert.hi_req) / cert.hi_req,
            ]
        )
        viol[~keep] = np.inf
        ok = keep & (viol <= 0)
        if ok.any():
            score = np.where(ok, balance, np.inf)
            i = int(np.argmin(score))
            if score[i] < best_cert[0]:
                best_cert = (float(score[i]), int(codes[i]))
        i = int(np.argmin(viol))
        if viol[i] < best_any[0]:
            best_any = (float(viol[i]), int(codes[i]))

    def split(code):
        mask = np.ones(k, dtype=bool)
        mask[1:] = (code & (1 << np.arange(k - 1))) != 0
        return np.flatnonzero(mask), np.flatnonzero(~mask)

    if best_cert[1] >= 0:
        return split(best_cert[1]), True
    return split(best_any[1]), False


def partition_step(
    vectors,
    alpha: float,
    beta: float,
    cfg: SelectionConfig,
    delta: float | None = None,
    step: int = 0,
    threads: int | None = None,
) -> PartitionResult:
    """Split ``vectors`` into two parts that both satisfy the relaxed target bounds.

    ``vectors`` is ``k x n``; its frame operator must have spectrum inside
    ``[alpha, beta]``. ``delta`` bounds the squared vector norms and defaults to
    the largest one. Targets are relaxed to ``lower/(1+slack)`` and
    ``upper*(1+slack)``; the returned bounds are exact extreme eigenvalues of
    each part's Gram on the original vectors.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=complex))
    k, n = V.shape
    delta_eff = float(np.max(np.sum(np.abs(V) ** 2, axis=1)))
    if delta is None:
        delta = delta_eff
    elif delta < delta_eff * (1 - PRECONDITION_TOL):
        raise InputError(f"delta={delta} is below the largest squared norm {delta_eff}")
    if not alpha > delta:
        raise NoCertifiedPartition(
            f"lower bound alpha={alpha:.6g} does not exceed the squared-norm bound "
            f"delta={delta:.6g}; no split can be certified"
        )
    M = gram(V)
    mlo, mhi = eigen_extremes(M)
    if mlo < alpha * (1 - PRECONDITION_TOL) or mhi > beta * (1 + PRECONDITION_TOL):
        raise InputError(
            f"frame operator spectrum [{mlo:.6g}, {mhi:.6g}] is not inside "
            f"[alpha, beta] = [{alpha:.6g}, {beta:.6g}]"
        )
    gamma = 5.0 * math.sqrt(delta / alpha)
    lower = alpha * (1.0 - gamma) / 2.0
    upper = beta * (1.0 + gamma) / 2.0
    lo_req = lower / (1.0 + cfg.slack) if lower > 0 else lower
    cert = _Certifier(V, lo_req, upper * (1.0 + cfg.slack))
    U = V @ inverse_sqrt(M)

    def result(S1, S2, b1, b2, strategy, attempt):
        return PartitionResult(
            tuple(int(i) for i in S1), tuple(int(i) for i in S2),
            b1, b2, lower, upper, strategy, attempt,
        )

    if k < 2:
        raise NoCertifiedPartition("a single vector cannot be split into two nonempty parts")

    method = cfg.method
    if method == "exhaustive":
        if k > EXHAUSTIVE_PARTITION_LIMIT:
            raise InputError(
                f"exhaustive partition search is limited to {EXHAUSTIVE_PARTITION_LIMIT} "
                f"vectors, got {k}"
            )
        (S1, S2), ok = _exhaustive_partition(V, U, cert)
        b1, b2 = _part_extremes(V, S1), _part_extremes(V, S2)
        if ok:
            return result(S1, S2, b1, b2, "exhaustive", 0)
        raise NoCertifiedPartition(
            f"no split of {k} vectors meets [{cert.lo_req:.6g}, {cert.hi_req:.6g}] "
            f"(full enumeration); best parts have bounds {b1} and {b2}",
            best=(tuple(S1.tolist()), tuple(S2.tolist())),
            best_bounds=(b1, b2),
        )

    threads = default_threads() if threads is None else max(1, threads)
    batch = max(8, 4 * threads)
    best = None
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, cfg.max_attempts, batch):
            attempts = range(start, min(start + batch, cfg.max_attempts))
            outs = list(
                pool.map(
                    lambda a: _search_attempt(method, V, U, cert, cfg.seed, step, a),
                    attempts,
                )
            )
            for a, (S1, S2, b1, b2, viol) in zip(attempts, outs):
                if viol <= 0:
                    return result(S1, S2, b1, b2, method, a)
                if best is None or viol < best[0]:
                    best = (viol, S1, S2, b1, b2)
    _, S1, S2, b1, b2 = best
    raise NoCertifiedPartition(
        f"no certified split of {k} vectors in {cfg.max_attempts} {method} attempts "
        f"(targets [{cert.lo_req:.6g}, {cert.hi_req:.6g}]); best parts have bounds {b1} and {b2}",
        best=(tuple(S1.tolist()), tuple(S2.tolist())),
        best_bounds=(b1, b2),
    )


# --------------------------------------------------------------------------
# drivers


def _pick_part(res: PartitionResult) -> tuple[tuple[int, ...], tuple[float, float]]:
    parts = [(res.S1, res.bounds1), (res.S2, res.bounds2)]
    parts.sort(key=lambda p: (len(p[0]), p[0]))
    return parts[0]


def iterated_halving(
    m: int, I: Sequence[int], cfg: SelectionConfig, threads: int | None = None
) -> tuple[RowSelection, SelectionTrace]:
    """Shrink the full row set by certified halving steps.

    When ``n/m >= 1/100`` all rows are kept. Otherwise the schedule for
    ``delta = n/m`` fixes the number of steps ``L + 1``; each step partitions the
    current rows of ``B/sqrt(m)`` and keeps the smaller certified part. Step
    targets are computed from the bounds actually achieved by the previous step.
    With ``method='exhaustive'`` levels with more than 24 rows use
    ``random_certified`` instead.
    """
    grid = GridSpectrum(m, tuple(I))
    m, I, n = grid.m, grid.I, grid.n
    if n / m >= TRIVIAL_RATIO:
        trace = SelectionTrace(m, I, "trivial", cfg.slack, final_J=tuple(range(m)))
        return RowSelection(tuple(range(m))), trace

    schedule = compute_schedule(n / m)
    trace = SelectionTrace(m, I, "halving", cfg.slack, schedule=schedule)
    V = build_submatrix(m, I, range(m)) / math.sqrt(m)
    current = np.arange(m)
    alpha, beta = eigen_extremes(gram(V))
    for step in range(schedule.L + 1):
        step_cfg = cfg
        if cfg.method == "exhaustive" and len(current) > EXHAUSTIVE_PARTITION_LIMIT:
            step_cfg = SelectionConfig("random_certified", cfg.seed, cfg.max_attempts, cfg.slack)
        try:
            res = partition_step(
                V[current], alpha, beta, step_cfg, delta=n / m, step=step, threads=threads
            )
        except NoCertifiedPartition as exc:
            trace.final_J = tuple(int(i) for i in current)
            exc.trace = trace
            raise
        part, (alpha, beta) = _pick_part(res)
        current = current[list(part)]
        trace.steps.append(
            TraceStep(
                subset=tuple(int(i) for i in current),
                alpha_target=res.lower_target,
                beta_target=res.upper_target,
                achieved_min=alpha,
                achieved_max=beta,
                schedule_alpha=schedule.alphas[step + 1],
                schedule_beta=schedule.betas[step + 1],
                strategy=res.strategy,
                attempt=res.attempt,
            )
        )
    trace.final_J = tuple(int(i) for i in current)
    return RowSelection(trace.final_J), trace


def _subset_ratios(B: np.ndarray, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, n = B.shape
    ob = _outer_rows(B)
    masks = ((codes[:, None] >> np.arange(m)) & 1).astype(float)
    lo, hi = _batched_extremes((masks @ ob).reshape(-1, n, n))
    lo = np.where(np.abs(lo) <= CLAMP_TOL * np.abs(hi), 0.0, lo)
    with np.errstate(divide="ignore"):
        ratio = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    return ratio, masks.sum(axis=1)


def exhaustive_subset(G: GridSpectrum) -> tuple[int, ...]:
    """Nonempty row set with the smallest ``lambda_max/lambda_min``.

    Near-ties (relative 1e-12) go to the smallest set, then lexicographic order.
    """
    if G.m > EXHAUSTIVE_SUBSET_LIMIT:
        raise InputError(f"exhaustive subset search is limited to m <= {EXHAUSTIVE_SUBSET_LIMIT}")
    B = build_submatrix(G.m, G.I, range(G.m))
    total = 1 << G.m
    ratios, sizes = [], []
    for start in range(1, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        r, s = _subset_ratios(B, codes)
        ratios.append(r)
        sizes.append(s)
    ratio = np.concatenate(ratios)
    size = np.concatenate(sizes)
    best = ratio.min()
    if not np.isfinite(best):
        raise NoCertifiedPartition("no row subset yields a frame")
    tied = np.flatnonzero(ratio <= best * (1 + 1e-12))
    tied = tied[size[tied] == size[tied].min()]
    codes = tied + 1
    sets = [tuple(int(i) for i in range(G.m) if (c >> i) & 1) for c in codes]
    return min(sets)


def select_rows(
    G: GridSpectrum, cfg: SelectionConfig, threads: int | None = None
) -> tuple[RowSelection, FrameCertificate, SelectionTrace]:
    """Pick residues ``J`` for the grid spectrum and certify ``(J + mZ)/d``.

    ``exhaustive`` with ``m <= 20`` returns the global optimum over all row
    subsets; everything else goes through :func:`iterated_halving`. The
    certificate is always recomputed from scratch.
    """
    if cfg.method == "exhaustive" and G.m <= EXHAUSTIVE_SUBSET_LIMIT:
        J = RowSelection(exhaustive_subset(G))
        trace = SelectionTrace(G.m, G.I, "exhaustive_global", cfg.slack, final_J=J.J)
    else:
        J, trace = iterated_halving(G.m, G.I, cfg, threads=threads)
    return J, frame_certificate(G, J), trace
