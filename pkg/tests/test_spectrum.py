import math

import pytest
from hypothesis import given, strategies as st

from expframe.errors import BadInterval, EmptySpectrum, GridTooCoarse
from expframe.spectrum import (
    GridSpectrum,
    grid_cover,
    measure,
    normalize_to_window,
    search_grid_cover,
    spectrum_from_json,
    validate,
)

PI = math.pi


def test_validate_merges_touching():
    assert validate([(0, 1), (1, 2)]).intervals == ((0.0, 2.0),)


def test_validate_sorts():
    assert validate([(3, 4), (0, 1)]).intervals == ((0.0, 1.0), (3.0, 4.0))


def test_validate_merges_overlap():
    assert validate([(0, 2), (1, 3), (5, 6)]).intervals == ((0.0, 3.0), (5.0, 6.0))


@pytest.mark.parametrize("bad", [[(0, 0)], [(2, 1)], [(0, math.inf)], [(0,)]])
def test_validate_rejects_bad_interval(bad):
    with pytest.raises(BadInterval):
        validate(bad)


def test_validate_rejects_empty():
    with pytest.raises(EmptySpectrum):
        validate([])


def test_normalize_translates_and_scales():
    U, shift, d = normalize_to_window(validate([(5, 5 + 4 * PI)]))
    assert shift == 5
    assert d == pytest.approx(2.0, rel=1e-15)
    assert U.intervals[0][0] == 0
    assert U.intervals[0][1] == pytest.approx(4 * PI, rel=1e-15)
    assert U.sup <= 2 * PI * d


def test_normalize_identity():
    U, shift, d = normalize_to_window(validate([(0, 2 * PI)]))
    assert (U.intervals, shift, d) == (((0.0, 2 * PI),), 0.0, 1.0)


def test_normalize_two_pieces():
    U, shift, d = normalize_to_window(validate([(-PI, 0), (PI, 2 * PI)]))
    assert shift == -PI
    assert d == pytest.approx(1.5, rel=1e-15)
    assert U.intervals == ((0.0, PI), (2 * PI, 3 * PI))


def test_grid_cover_exact_alignment():
    G, excess = grid_cover(validate([(0, PI)]), 1.0, 4)
    assert G.I == (0, 1)
    assert excess == 0


def test_grid_cover_partial_cell():
    G, excess = grid_cover(validate([(0, 1)]), 1.0, 4)
    assert G.I == (0,)
    # one cell of width pi/2 covers [0, 1)
    assert excess == pytest.approx(PI / 2 - 1, abs=1e-15)
    assert excess == pytest.approx(0.5707963267948966, abs=1e-12)


def test_grid_cover_two_cells():
    G, excess = grid_cover(validate([(0, PI / 2), (PI, 3 * PI / 2)]), 1.0, 4)
    assert G.I == (0, 2)
    assert excess == 0


def test_grid_cover_tolerance():
    with pytest.raises(GridTooCoarse):
        grid_cover(validate([(0, 1)]), 1.0, 4, tolerance=0.1)


def test_shared_endpoint_adds_no_cell():
    G, _ = grid_cover(validate([(PI / 2, PI)]), 1.0, 4)
    assert G.I == (1,)


def test_search_grid_cover_default_tolerance():
    U = validate([(0.1, 2.3), (4.0, 5.5)])
    G, excess = search_grid_cover(U, 1.0)
    assert excess <= 0.01 * U.measure
    assert G.m >= 64 and G.m & (G.m - 1) == 0


@pytest.mark.parametrize(
    "m, I, d, expected",
    [(4, (0, 2), 1.0, PI), (1, (0,), 1.0, 2 * PI), (8, (0, 1, 2), 2.0, 3 * PI / 2)],
)
def test_measure(m, I, d, expected):
    assert measure(GridSpectrum(m, I, d)) == pytest.approx(expected, rel=1e-15)


def test_grid_spectrum_canonical():
    G = GridSpectrum(8, (3, 1, 3))
    assert G.I == (1, 3) and G.n == 2


def test_spectrum_from_json():
    assert spectrum_from_json({"grid": {"m": 4, "I": [2, 0], "d": 1}}) == GridSpectrum(4, (0, 2))
    assert spectrum_from_json({"intervals": [[0, 1]]}).intervals == ((0.0, 1.0),)


intervals = st.lists(
    st.tuples(
        st.floats(-50, 50, allow_nan=False), st.floats(1e-3, 10, allow_nan=False)
    ).map(lambda p: (p[0], p[0] + p[1])),
    min_size=1,
    max_size=6,
)


@given(intervals)
def test_validate_is_fixed_point(raw):
    once = validate(raw)
    assert validate(once) == once
    for (a, b), (c, _) in zip(once.intervals, once.intervals[1:]):
        assert a < b < c


@given(intervals)
def test_normalize_idempotent(raw):
    U1, _, d1 = normalize_to_window(validate(raw))
    U2, shift2, d2 = normalize_to_window(U1)
    assert U2 == U1 and shift2 == 0 and d2 == d1


@given(intervals, st.integers(0, 6))
def test_cover_excess_nonincreasing_under_doubling(raw, k):
    U, _, d = normalize_to_window(validate(raw))
    m = 4 * 2**k
    G1, e1 = grid_cover(U, d, m)
    G2, e2 = grid_cover(U, d, 2 * m)
    assert G1.measure >= U.measure * (1 - 1e-12)
    assert e2 <= e1 + 1e-12
    # the finer cover sits inside the coarser one
    assert {r // 2 for r in G2.I} <= set(G1.I)
