"""Spectra as finite interval unions and their grid-aligned outer covers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from expframe.errors import BadInterval, EmptySpectrum, GridTooCoarse, InputError

TWO_PI = 2.0 * math.pi

DEFAULT_START_ORDER = 64
MAX_GRID_ORDER = 4096


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint union of nonempty intervals on the frequency axis."""

    intervals: tuple[tuple[float, float], ...]

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    @property
    def inf(self) -> float:
        return self.intervals[0][0]

    @property
    def sup(self) -> float:
        return self.intervals[-1][1]

    def to_json(self) -> dict:
        return {"intervals": [[a, b] for a, b in self.intervals]}


@dataclass(frozen=True)
class GridSpectrum:
    """Union of cells ``[2*pi*d*r/m, 2*pi*d*(r+1)/m)`` for ``r`` in ``I``."""

    m: int
    I: tuple[int, ...]
    d: float = 1.0

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise InputError(f"grid order must be positive, got {self.m}")
        idx = tuple(sorted({int(r) for r in self.I}))
        if not idx:
            raise EmptySpectrum("grid spectrum needs at least one cell")
        if idx[0] < 0 or idx[-1] >= m:
            raise InputError(f"cell indices must lie in [0, {m - 1}], got {list(self.I)}")
        d = float(self.d)
        if not (d > 0 and math.isfinite(d)):
            raise InputError(f"scale d must be positive and finite, got {self.d}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "I", idx)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.I)

    @property
    def cell_width(self) -> float:
        return TWO_PI * self.d / self.m

    @property
    def measure(self) -> float:
        return measure(self)

    def cell_edges(self) -> np.ndarray:
        """Left endpoints of the cells, in the order of ``I``."""
        return TWO_PI * self.d * np.asarray(self.I, dtype=float) / self.m

    def to_json(self) -> dict:
        return {"m": self.m, "I": list(self.I), "d": self.d}


def validate(raw: IntervalUnion | Iterable[Sequence[float]]) -> IntervalUnion:
    """Canonical form: sorted, overlapping or touching intervals merged.

    >>> validate([(0, 1), (1, 2)]).intervals
    ((0.0, 2.0),)
    """
    pairs = raw.intervals if isinstance(raw, IntervalUnion) else raw
    items = []
    for pair in pairs:
        try:
            a, b = (float(x) for x in pair)
        except (TypeError, ValueError) as exc:
            raise BadInterval(f"interval must be a pair of numbers, got {pair!r}") from exc
        if not (math.isfinite(a) and math.isfinite(b)):
            raise BadInterval(f"interval endpoints must be finite, got ({a}, {b})")
        if a >= b:
            raise BadInterval(f"interval ({a}, {b}) is empty or reversed")
        items.append((a, b))
    if not items:
        raise EmptySpectrum("spectrum has no intervals")
    items.sort()
    merged = [items[0]]
    for a, b in items[1:]:
        last_a, last_b = merged[-1]
        if a <= last_b:
            merged[-1] = (last_a, max(last_b, b))
        else:
            merged.append((a, b))
    union = IntervalUnion(tuple(merged))
    if not union.measure > 0:
        raise EmptySpectrum("spectrum has zero measure")
    return union


def normalize_to_window(U: IntervalUnion) -> tuple[IntervalUnion, float, float]:
    """Translate ``U`` so its infimum is 0 and return ``(U', shift, d)``.

    ``U'`` lies in ``[0, 2*pi*d]``. Translating the spectrum only changes phases
    of the samples, so a certificate for ``U'`` holds for ``U`` with the same
    frequency set.
    """
    U = validate(U)
    shift = U.inf
    moved = tuple((a - shift, b - shift) for a, b in U.intervals)
    top = moved[-1][1]
    d = top / TWO_PI
    # keep the exact containment U' <= 2*pi*d despite rounding
    while TWO_PI * d < top:
        d = math.nextafter(d, math.inf)
    return IntervalUnion(moved), shift, d


def _cover_indices(U: IntervalUnion, d: float, m: int) -> list[int]:
    scale = TWO_PI * d
    cells: set[int] = set()
    for a, b in U.intervals:
        lo = math.floor(a * m / scale)
        hi = math.ceil(b * m / scale)
        lo = max(lo, 0)
        hi = min(hi, m)
        cells.update(range(lo, hi))
    return sorted(cells)


def grid_cover(
    U: IntervalUnion, d: float, m: int, tolerance: float | None = None
) -> tuple[GridSpectrum, float]:
    """Minimal outer cover of ``U`` by grid cells of order ``m``.

    Returns the covering :class:`GridSpectrum` and its excess measure
    ``|cover| - |U| >= 0``. Raises :class:`GridTooCoarse` when ``tolerance``
    is given and the excess is larger.
    """
    U = validate(U)
    if d <= 0:
        raise InputError(f"scale d must be positive, got {d}")
    if m < 1:
        raise InputError(f"grid order must be positive, got {m}")
    if U.inf < 0 or U.sup > TWO_PI * d:
        raise InputError(
            f"spectrum [{U.inf}, {U.sup}] does not lie in the window [0, {TWO_PI * d}]"
        )
    grid = GridSpectrum(m, tuple(_cover_indices(U, d, m)), d)
    excess = max(grid.measure - U.measure, 0.0)
    if tolerance is not None and excess > tolerance:
        raise GridTooCoarse(
            f"grid order {m} leaves excess {excess:.6g} above tolerance {tolerance:.6g}"
        )
    return grid, excess


def search_grid_cover(
    U: IntervalUnion,
    d: float,
    epsilon_cover: float | None = None,
    start: int = DEFAULT_START_ORDER,
    max_order: int = MAX_GRID_ORDER,
) -> tuple[GridSpectrum, float]:
    """Double the grid order from ``start`` until the excess is at most ``epsilon_cover``.

    ``epsilon_cover`` defaults to 1% of ``|U|``.
    """
    U = validate(U)
    tol = 0.01 * U.measure if epsilon_cover is None else epsilon_cover
    m = start
    while True:
        grid, excess = grid_cover(U, d, m)
        if excess <= tol:
            return grid, excess
        if 2 * m > max_order:
            raise GridTooCoarse(
                f"excess {excess:.6g} still above {tol:.6g} at the largest grid order {m}"
            )
        m *= 2


def measure(G: GridSpectrum) -> float:
    return TWO_PI * G.d * G.n / G.m


def spectrum_from_json(obj: dict) -> IntervalUnion | GridSpectrum:
    """Parse ``{"intervals": [[a, b], ...]}`` or ``{"grid": {"m", "I", "d"}}``."""
    if "grid" in obj:
        g = obj["grid"]
        try:
            return GridSpectrum(int(g["m"]), tuple(g["I"]), float(g.get("d", 1.0)))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed grid spectrum: {g!r}") from exc
    if "intervals" in obj:
        return validate(obj["intervals"])
    raise InputError("spectrum JSON needs an 'intervals' or a 'grid' key")
