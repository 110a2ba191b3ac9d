import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from expframe.errors import IndexOutOfRange, NotHermitian, ProblemTooLarge, SingularOperator
from expframe.matrix_core import (
    FrequencySet,
    build_submatrix,
    eigen_extremes,
    enumerate_lambda,
    frame_certificate,
    gram,
    inverse_sqrt,
)
from expframe.spectrum import GridSpectrum

PI = math.pi


def test_submatrix_trivial():
    assert np.allclose(build_submatrix(1, [0], [0]), [[1]])


def test_submatrix_hand_values():
    B = build_submatrix(4, [0, 2], [0, 1])
    expected = [[cmath.exp(2j * PI * j * r / 4) for r in (0, 2)] for j in (0, 1)]
    assert np.allclose(B, expected, atol=1e-15)
    assert np.allclose(B, [[1, 1], [1, -1]], atol=1e-15)


def test_submatrix_two_point_dft():
    assert np.allclose(build_submatrix(2, [0, 1], [0, 1]), [[1, 1], [1, -1]], atol=1e-15)


def test_submatrix_index_errors():
    with pytest.raises(IndexOutOfRange):
        build_submatrix(4, [0, 4], [0])
    with pytest.raises(ProblemTooLarge):
        build_submatrix(4097, [0], [0])


def test_gram_examples():
    assert np.allclose(gram(np.array([[1, 1], [1, -1]])), 2 * np.eye(2))
    assert np.allclose(gram(np.array([[1, 1]])), [[1, 1], [1, 1]])
    assert np.allclose(gram(build_submatrix(4, range(4), range(4))), 4 * np.eye(4), atol=1e-12)


def test_gram_is_hermitian():
    B = np.random.default_rng(0).standard_normal((5, 3)) * (1 + 2j)
    G = gram(B)
    assert np.array_equal(G, G.conj().T)


@pytest.mark.parametrize(
    "G, expected", [(np.eye(3), (1, 1)), (np.diag([2.0, 5.0]), (2, 5)), (np.ones((2, 2)), (0, 2))]
)
def test_eigen_extremes(G, expected):
    assert eigen_extremes(G) == pytest.approx(expected, abs=1e-12)


def test_eigen_extremes_clamps_rank_deficient():
    lo, _ = eigen_extremes(gram(build_submatrix(2, [0, 1], [0])))
    assert lo == 0.0


def test_not_hermitian():
    with pytest.raises(NotHermitian):
        eigen_extremes(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_certificate_tight_pair():
    c = frame_certificate(GridSpectrum(4, (0, 2)), [0, 1])
    assert c.lambda_min == pytest.approx(2, rel=1e-12)
    assert c.lambda_max == pytest.approx(2, rel=1e-12)
    assert c.a_sampling == pytest.approx(0.5, rel=1e-12)
    assert c.a_frame == pytest.approx(PI, rel=1e-12)
    assert c.A_frame == pytest.approx(PI, rel=1e-12)
    assert c.is_frame


@pytest.mark.parametrize("m", [1, 3, 8])
@pytest.mark.parametrize("d", [0.5, 1.0, 2.5])
def test_certificate_orthonormal_anchor(m, d):
    G = GridSpectrum(m, tuple(range(m)), d)
    c = frame_certificate(G, range(m))
    assert c.a_frame == pytest.approx(G.measure, rel=1e-12)
    assert c.A_frame == pytest.approx(2 * PI * d, rel=1e-12)


def test_certificate_not_frame():
    c = frame_certificate(GridSpectrum(2, (0, 1)), [0])
    assert c.lambda_min == 0 and not c.is_frame and c.ratio == math.inf


def test_certificate_json_fields():
    keys = set(frame_certificate(GridSpectrum(4, (0, 2)), [0, 1]).to_json())
    assert keys == {
        "lambda_min", "lambda_max", "a_sampling", "A_sampling", "a_frame", "A_frame",
        "normalized_lower", "normalized_upper", "is_frame", "m", "n", "J_size", "d",
    }


def test_enumerate_lambda_examples():
    assert enumerate_lambda(FrequencySet((0,), 1, 1.0), (0, 5)) == [0, 1, 2, 3, 4]
    assert enumerate_lambda(FrequencySet((0, 1), 4, 1.0), (0, 8)) == [0, 1, 4, 5]
    assert enumerate_lambda(FrequencySet((0,), 2, 2.0), (0, 2)) == [0, 1]


def test_enumerate_lambda_negative_window():
    assert enumerate_lambda(FrequencySet((1, 3), 4, 2.0), (-4, 0)) == [-3.5, -2.5, -1.5, -0.5]


def test_separation():
    assert FrequencySet((0, 1, 5), 8, 2.0).separation == 0.5
    assert FrequencySet((0,), 3, 1.0).separation == 3


def test_inverse_sqrt_examples():
    assert np.allclose(inverse_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(inverse_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]))


def test_inverse_sqrt_two_by_two():
    # eigenvalues 3 on (1,1)/sqrt2 and 1 on (1,-1)/sqrt2
    p = np.array([1, 1]) / math.sqrt(2)
    q = np.array([1, -1]) / math.sqrt(2)
    expected = np.outer(p, p) / math.sqrt(3) + np.outer(q, q)
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    R = inverse_sqrt(M)
    assert np.allclose(R, expected, atol=1e-14)
    assert np.linalg.norm(R @ M @ R - np.eye(2)) <= 1e-8


def test_inverse_sqrt_singular():
    with pytest.raises(SingularOperator):
        inverse_sqrt(np.ones((2, 2)))


# -- properties ------------------------------------------------------------

grids = st.integers(1, 24).flatmap(
    lambda m: st.tuples(
        st.just(m),
        st.sets(st.integers(0, m - 1), min_size=1),
        st.sets(st.integers(0, m - 1), min_size=1),
    )
)


@given(grids)
def test_trace_identity(g):
    m, I, J = g
    G = gram(build_submatrix(m, I, J))
    assert np.trace(G).real == pytest.approx(len(I) * len(J), rel=1e-9)
    lo, hi = eigen_extremes(G)
    assert 0 <= lo <= hi <= len(I) * len(J) * (1 + 1e-12)
    assert hi <= m * len(I) * (1 + 1e-12)


@given(grids)
def test_full_rows_are_tight(g):
    m, I, _ = g
    c = frame_certificate(GridSpectrum(m, tuple(I)), range(m))
    assert c.lambda_min == pytest.approx(m, rel=1e-9)
    assert c.lambda_max == pytest.approx(m, rel=1e-9)


@given(grids, st.integers(0, 50), st.integers(0, 50))
def test_cyclic_shift_invariance(g, s, t):
    m, I, J = g
    base = frame_certificate(GridSpectrum(m, tuple(I)), J)
    shifted = frame_certificate(
        GridSpectrum(m, tuple((r + s) % m for r in I)), [(j + t) % m for j in J]
    )
    scale = max(base.lambda_max, 1.0)
    assert shifted.lambda_min == pytest.approx(base.lambda_min, abs=1e-9 * scale)
    assert shifted.lambda_max == pytest.approx(base.lambda_max, rel=1e-9)


@given(grids, st.data())
def test_monotone_in_rows(g, data):
    m, I, J = g
    extra = data.draw(st.sets(st.integers(0, m - 1)))
    G = GridSpectrum(m, tuple(I))
    small, big = frame_certificate(G, J), frame_certificate(G, J | extra)
    assert small.lambda_min <= big.lambda_min + 1e-9 * m
    assert small.lambda_max <= big.lambda_max + 1e-9 * m


@given(grids, st.floats(0.1, 10))
def test_scale_covariance(g, d):
    m, I, J = g
    c1 = frame_certificate(GridSpectrum(m, tuple(I), 1.0), J)
    cd = frame_certificate(GridSpectrum(m, tuple(I), d), J)
    assert cd.a_frame == pytest.approx(d * c1.a_frame, rel=1e-12, abs=1e-300)
    assert cd.A_frame == pytest.approx(d * c1.A_frame, rel=1e-12)
    assert cd.normalized_lower == c1.normalized_lower
    assert cd.normalized_upper == c1.normalized_upper


def _quadratic_extremes_brute(B):
    """Extremes of ||B w||^2 over unit w in C^n, n <= 2, by grid search then polish."""
    n = B.shape[1]
    if n == 1:
        v = float(np.sum(np.abs(B) ** 2))
        return v, v

    def q(p):
        th, ph = p
        w = np.array([math.cos(th), math.sin(th) * cmath.exp(1j * ph)])
        return float(np.sum(np.abs(B @ w) ** 2))

    th = np.linspace(0, PI / 2, 41)[:, None]
    ph = np.linspace(0, 2 * PI, 81)[None, :]
    W = np.stack(np.broadcast_arrays(np.cos(th), np.sin(th) * np.exp(1j * ph)), axis=-1)
    vals = np.sum(np.abs(W @ B.T) ** 2, axis=-1)
    th, ph = th[:, 0], ph[0]
    out = []
    for sign in (1, -1):
        i, j = np.unravel_index(np.argmin(sign * vals), vals.shape)
        res = minimize(lambda p: sign * q(p), [th[i], ph[j]], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        out.append(sign * res.fun)
    return out[0], out[1]


@settings(max_examples=25, deadline=None)
@given(
    st.integers(2, 8).flatmap(
        lambda m: st.tuples(
            st.just(m),
            st.sets(st.integers(0, m - 1), min_size=1, max_size=2),
            st.sets(st.integers(0, m - 1), min_size=1),
        )
    )
)
def test_bounds_match_brute_force(g):
    m, I, J = g
    c = frame_certificate(GridSpectrum(m, tuple(I)), J)
    lo, hi = _quadratic_extremes_brute(build_submatrix(m, I, J))
    assert c.a_sampling == pytest.approx(lo / m, abs=1e-6)
    assert c.A_sampling == pytest.approx(hi / m, abs=1e-6)


def test_brute_force_small_exhaustive_sweep():
    for m in range(2, 5):
        for I in itertools.combinations(range(m), 2):
            for J in itertools.combinations(range(m), 2):
                c = frame_certificate(GridSpectrum(m, I), J)
                lo, hi = _quadratic_extremes_brute(build_submatrix(m, I, J))
                assert abs(c.lambda_min - lo) <= 1e-6 * m
                assert abs(c.lambda_max - hi) <= 1e-6 * m
