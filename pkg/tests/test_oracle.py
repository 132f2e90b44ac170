import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisorlicz.envelope import build_minorant_pair, product_grid
from anisorlicz.oracle import (almost_convex_bruteforce, caratheodory_envelope,
                               caratheodory_representation, largest_bruteforce_beta,
                               norm_dense_scan)
from anisorlicz.phi_core import (INF, Box, Constant, DoublePhase, FrozenSpatial, FunctionPhi,
                                 HolderBump, MinOf, PowerNorm, QuadraticForm, VariableDoublePhase,
                                 VectorField, luxemburg_norm)

MIN_SQ = MinOf((QuadraticForm((1.0, 0.0)), QuadraticForm((0.0, 1.0))))
ALPHAS = (0.5, 0.25, 0.75)
UNIT = Box.cube(2)


def _min_t_t2(t):
    return np.minimum(np.abs(t), t ** 2)


def test_min_of_squares_combination_of_corners():
    support = np.array([[0, 0], [2, 0], [-2, 0], [0, 2], [0, -2],
                        [2, 2], [2, -2], [-2, 2], [-2, -2]], dtype=float)
    rep = caratheodory_representation(support, MIN_SQ.values(support), np.array([1.0, 1.0]))
    assert rep.value == 0.0 and rep.in_hull
    assert abs(sum(rep.weights) - 1.0) < 1e-12


def test_support_point_returns_own_value():
    support = product_grid(1.0, 4, 2)[0]
    vals = PowerNorm(2).values(support)
    assert caratheodory_envelope(support, vals, support[5]) == pytest.approx(vals[5], abs=1e-12)


def test_outside_hull_flagged():
    support = product_grid(1.0, 3, 2)[0]
    rep = caratheodory_representation(support, PowerNorm(2).values(support), np.array([2.0, 0.0]))
    assert rep.value == INF and not rep.in_hull


def test_truncation_effect_in_one_dimension():
    t = np.arange(0.0, 5.01, 0.5)[:, None]
    first = caratheodory_envelope(t, _min_t_t2(t[:, 0]), np.array([1.0]))
    assert first == pytest.approx(7 / 9, abs=1e-12)
    wider = [caratheodory_envelope(s, _min_t_t2(s[:, 0]), np.array([1.0]))
             for s in (np.arange(0.0, 20.01, 0.5)[:, None], np.arange(0.0, 200.01, 0.5)[:, None])]
    assert first > wider[0] > wider[1] > 0.75


def test_enumeration_cap():
    with pytest.raises(ValueError):
        caratheodory_envelope(np.zeros((401, 2)), np.zeros(401), np.zeros(2))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_extra_point_never_helps(seed):
    rng = np.random.default_rng(seed)
    support = rng.uniform(-1, 1, size=(9, 2))
    vals = rng.uniform(0, 2, 9)
    q = rng.uniform(-0.3, 0.3, size=(6, 2))
    base = caratheodory_envelope(support, vals, q)
    more = caratheodory_envelope(support, vals, q, subset_size=3)
    assert np.all(more >= base - 1e-9)


def test_brute_force_min_of_squares_witness():
    grid = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [-1.0, 0.0], [0.0, -1.0]])
    for b in (1.0, 0.5, 2.0 ** -19):
        res = almost_convex_bruteforce(MIN_SQ, grid, (0.5,), b)
        assert not res.passed
        assert res.witness["xi"] == [1.0, 0.0] and res.witness["xi2"] == [0.0, 1.0]
        assert res.witness["lhs"] == pytest.approx(b * b / 4, rel=1e-12)
        assert res.witness["rhs"] == 0.0


def test_brute_force_convex_passes():
    grid = product_grid(2.0, 7, 2)[0]
    assert almost_convex_bruteforce(DoublePhase(2, 2.0, 3.0), grid, ALPHAS, 1.0).passed


def test_brute_force_truncated_minorant_square():
    pair = build_minorant_pair(PowerNorm(2, 2.0), 4.0, 1.0)
    grid = product_grid(8.0, 17, 2)[0]
    assert almost_convex_bruteforce(pair.Ms, grid, ALPHAS, 0.125).passed


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_brute_force_monotone_in_beta(seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 3.0, size=2)
    phi = MinOf((QuadraticForm((w[0], 0.1)), QuadraticForm((0.1, w[1]))))
    grid = product_grid(1.5, 5, 2)[0]
    betas = [1.0, 0.5, 0.25, 0.125]
    res = [almost_convex_bruteforce(phi, grid, ALPHAS, b).passed for b in betas]
    first = res.index(True) if True in res else len(res)
    assert all(res[first:])


def test_largest_beta_scan():
    grid = product_grid(1.0, 5, 2)[0]
    phi = FunctionPhi(2, lambda x: MIN_SQ.values(x) + 0.25 * np.sum(x ** 2, axis=-1))
    b = largest_bruteforce_beta(phi, grid, ALPHAS, [1.0, 0.5, 0.25])
    assert b is not None
    assert almost_convex_bruteforce(phi, grid, ALPHAS, b).passed


def test_dense_scan_trivial_cases():
    Phi = FrozenSpatial(PowerNorm(2, 2.0), UNIT)
    lam = np.exp(np.linspace(-3, 3, 6001))
    assert norm_dense_scan(Phi, VectorField.constant(UNIT, [0.0, 0.0]), lam) == 0.0
    v = norm_dense_scan(Phi, VectorField.constant(UNIT, [2.0, 0.0]), lam)
    assert 2.0 <= v <= 2.0 * np.exp(0.001) * (1 + 1e-12)


def test_dense_scan_matches_bisection_on_double_phase():
    Phi = VariableDoublePhase(UNIT, 2, Constant(2.0), Constant(3.0), HolderBump(1.0, 1.0, (0.0, 0.0)))
    f = VectorField.piecewise_constant(UNIT, np.random.default_rng(4).normal(size=(4, 4, 2)))
    lam = luxemburg_norm(Phi, f)
    step = 1e-3
    grid = lam * np.exp(np.arange(-50, 51) * step)
    scan = norm_dense_scan(Phi, f, grid)
    assert abs(scan - lam) <= lam * (np.exp(step) - 1)
