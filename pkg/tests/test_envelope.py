import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from anisorlicz.envelope import (EnvelopeError, EnvelopeWindowError, GaugeSet, GaugeSetError,
                                 GridFunction, MultiscaleEnvelope, build_minorant_pair,
                                 convex_minorant_eval, convex_minorant_grid, minkowski_gauge,
                                 product_grid, tangent_lower_bound, unit_ball_gauge_set,
                                 write_envelope_csv)
from anisorlicz.oracle import caratheodory_envelope
from anisorlicz.phi_core import (INF, DoublePhase, FunctionPhi, LinftyIndicator, MinOf,
                                 PowerNorm, QuadraticForm)

MIN_SQ = MinOf((QuadraticForm((1.0, 0.0)), QuadraticForm((0.0, 1.0))))
MIN_T_T2 = FunctionPhi(1, lambda x: np.minimum(np.abs(x[..., 0]), x[..., 0] ** 2))


def _affine_minorant_value(t, vals, at, lo, hi):
    # sup over slopes a of a·at + min_k (v_k − a·t_k), a concave function of a
    res = minimize_scalar(lambda a: -(a * at + np.min(vals - a * t)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    return -float(res.fun)


# grid envelope ---------------------------------------------------------------

def test_min_of_squares_envelope_vanishes():
    env = convex_minorant_grid(GridFunction.sample(MIN_SQ, 2.0, 33))
    assert np.max(env.values) <= 4.0
    inner = np.max(np.abs(env.points), axis=1) <= 1.0
    assert np.max(env.values[inner]) <= 1e-9


def test_convex_input_reproduced():
    g = GridFunction.sample(DoublePhase(2, 2.0, 3.0), 2.0, 17)
    env = convex_minorant_grid(g)
    np.testing.assert_allclose(env.values, g.values, rtol=1e-9, atol=1e-12)


def test_min_t_t2_at_one_against_affine_minorants():
    g = GridFunction.from_points(MIN_T_T2, np.linspace(0.0, 50.0, 5001)[:, None])
    env = convex_minorant_grid(g)
    k = int(np.argmin(np.abs(g.points[:, 0] - 1.0)))
    oracle = _affine_minorant_value(g.points[:, 0], g.values, 1.0, 0.0, 2.0)
    assert env.values[k] == pytest.approx(oracle, abs=1e-6)
    # the binding line is t − 1/4; the window [0, 50] adds a small truncation bias
    assert abs(env.values[k] - 0.75) <= 0.01


def test_eval_at_vertex_midpoint_and_outside():
    g = GridFunction.sample(MIN_SQ, 1.0, 9)
    env = convex_minorant_grid(g)
    assert convex_minorant_eval(env, g.points[10]) == pytest.approx(env.values[10], abs=1e-12)
    mid = 0.5 * (g.points[3] + g.points[50])
    assert convex_minorant_eval(env, mid) <= 0.5 * (env.values[3] + env.values[50]) + 1e-12
    assert convex_minorant_eval(env, np.array([3.0, 0.0])) == INF


def test_infinite_values_outside_effective_domain():
    g = GridFunction.sample(LinftyIndicator(2, 1.0), 2.0, 9)
    env = convex_minorant_grid(g)
    np.testing.assert_array_equal(env.values, g.values)


def test_all_infinite_rejected():
    g = GridFunction(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), np.full(3, INF))
    with pytest.raises(EnvelopeError):
        convex_minorant_grid(g)


def test_eval_needs_envelope():
    with pytest.raises(EnvelopeError):
        convex_minorant_eval(GridFunction.sample(MIN_SQ, 1.0, 5), np.zeros(2))


def test_csv_literal_inf(tmp_path):
    g = GridFunction.sample(LinftyIndicator(2, 0.5), 1.0, 5)
    env = convex_minorant_grid(g)
    path = tmp_path / "env.csv"
    write_envelope_csv(path, g, env)
    rows = path.read_text().splitlines()
    assert rows[0] == "xi1,xi2,value,envelope"
    assert rows[1].endswith("inf,inf")
    assert len(rows) == 26


def _random_grid(seed, count, m=2):
    rng = np.random.default_rng(seed)
    pts, axes = product_grid(1.0, count, m)
    vals = rng.uniform(0.0, 3.0, len(pts))
    vals[rng.random(len(pts)) < 0.1] = INF
    vals[len(pts) // 2] = 0.0
    return GridFunction(pts, vals, axes)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 20), st.integers(3, 7))
def test_minorant_and_idempotent(seed, count):
    g = _random_grid(seed, count)
    env = convex_minorant_grid(g)
    assert np.all(env.values <= g.values)
    again = convex_minorant_grid(GridFunction(g.points, env.values, g.axes))
    np.testing.assert_allclose(again.values, env.values, rtol=1e-9, atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_facet_interpolant_convex(seed):
    g = _random_grid(seed, 5)
    env = convex_minorant_grid(g)
    fin = np.flatnonzero(np.isfinite(env.values))
    i, j = np.meshgrid(fin, fin, indexing="ij")
    i, j = i.ravel(), j.ravel()
    for a in (0.25, 0.5, 0.75):
        q = a * g.points[i] + (1 - a) * g.points[j]
        lhs = convex_minorant_eval(env, q)
        assert np.all(lhs <= a * env.values[i] + (1 - a) * env.values[j] + 1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20), st.integers(3, 6))
def test_agrees_with_caratheodory(seed, count):
    g = _random_grid(seed, count)
    env = convex_minorant_grid(g)
    ref = caratheodory_envelope(g.points, g.values, g.points)
    np.testing.assert_allclose(env.values, ref, rtol=0, atol=1e-7)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_one_dimensional_agrees_with_caratheodory(seed):
    g = _random_grid(seed, 15, m=1)
    env = convex_minorant_grid(g)
    np.testing.assert_allclose(env.values, caratheodory_envelope(g.points, g.values, g.points),
                               atol=1e-9)


# envelope lower bounds -------------------------------------------------------

def test_tangent_bound_below_convex_function():
    phi = DoublePhase(2, 2.0, 3.0)
    env = convex_minorant_grid(GridFunction.sample(phi, 2.0, 33))
    q = np.random.default_rng(5).uniform(-1.0, 1.0, size=(500, 2))
    lo = tangent_lower_bound(env, q)
    assert np.all(lo <= phi.values(q) + 1e-12)
    assert np.max(phi.values(q) - lo) < 0.1


def test_multiscale_lower_below_upper_and_exact_function():
    env = MultiscaleEnvelope(PowerNorm(2, 2.0), 8.0, 17, min_radius=0.01)
    q = np.random.default_rng(2).normal(size=(300, 2))
    q *= np.exp(np.random.default_rng(3).uniform(-4, 1, 300))[:, None]
    lo, up = env.lower(q), env.upper(q)
    assert np.all(lo <= up + 1e-12)
    assert np.all(lo <= PowerNorm(2, 2.0).values(q) + 1e-12)
    # relative accuracy does not degrade for small queries
    exact = PowerNorm(2, 2.0).values(q)
    assert np.max((exact - lo) / np.maximum(exact, 1e-300)) < 0.5
    np.testing.assert_allclose(env.slack(q), up - lo)


def test_multiscale_window_error():
    env = MultiscaleEnvelope(PowerNorm(2), 1.0, 9)
    with pytest.raises(EnvelopeWindowError):
        env.upper(np.array([[2.0, 0.0]]))


# gauges ----------------------------------------------------------------------

def test_gauge_of_unit_ball():
    K = unit_ball_gauge_set(2)
    assert minkowski_gauge(K, np.array([2.0, 0.0]), 1e-12) == pytest.approx(2.0, rel=1e-10)
    assert minkowski_gauge(K, np.zeros(2)) == 0.0


def test_gauge_of_level_set():
    K = GaugeSet(PowerNorm(2, 2.0), 4.0)
    assert minkowski_gauge(K, np.array([0.0, 6.0]), 1e-12) == pytest.approx(3.0, rel=1e-10)
    assert K.bounding_radius == pytest.approx(2.0, rel=1e-5)


def test_gauge_set_without_interior_point():
    with pytest.raises(GaugeSetError):
        GaugeSet(FunctionPhi(2, lambda x: 1.0 + np.sum(x ** 2, axis=-1)), 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-3, 3), st.floats(-3, 3))
def test_gauge_homogeneity(lam, a, b):
    K = GaugeSet(DoublePhase(2, 2.0, 3.0), 4.0, 0.5)
    xi = np.array([a, b])
    g = minkowski_gauge(K, xi)
    assert abs(minkowski_gauge(K, lam * xi) - lam * g) <= 1e-7 * lam * g + 1e-300


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_gauge_level_set_consistency(a, b):
    K = GaugeSet(QuadraticForm((1.0, 4.0)), 2.0)
    xi = np.array([a, b])
    g = minkowski_gauge(K, xi)
    if abs(g - 1.0) > 1e-6:
        assert (g <= 1.0) == bool(K.contains(xi))


def test_minorant_pair_forced_value():
    pair = build_minorant_pair(PowerNorm(2, 2.0), 4.0, 1.0)
    assert pair.Ns(np.array([6.0, 0.0])) == pytest.approx(12.0, rel=1e-9)
    assert pair.Ms(np.array([6.0, 0.0])) == pytest.approx(12.0, rel=1e-9)


def test_minorant_pair_boundary_and_interior():
    phi = DoublePhase(2, 2.0, 3.0)
    pair = build_minorant_pair(phi, 5.0, 0.5)
    u = np.array([[math.cos(t), math.sin(t)] for t in np.linspace(0, 2 * math.pi, 13)])
    r = pair.K.boundary_radius(u)
    edge = r[:, None] * u
    np.testing.assert_allclose(pair.Ns.values(edge), 5.0, rtol=1e-9)
    np.testing.assert_allclose(pair.Ms.values(edge), 5.0, rtol=1e-9)
    inside = 0.7 * edge
    np.testing.assert_allclose(pair.Ms.values(inside), phi.values(0.5 * inside))
    assert np.all(pair.Ns.values(inside) >= pair.Ms.values(inside))
    assert np.all(pair.Ns.values(inside) == 5.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(0, 2 * math.pi))
def test_minorant_sandwich_on_rays(t, ang):
    phi = QuadraticForm((1.0, 4.0))
    pair = build_minorant_pair(phi, 4.0, 1.0)
    xi = t * np.array([math.cos(ang), math.sin(ang)])
    inner, ns, ms = float(phi(xi)), float(pair.Ns(xi)), float(pair.Ms(xi))
    if pair.K.contains(xi):
        assert ms == inner and inner <= ns * (1 + 1e-9)
    else:
        assert ms == pytest.approx(ns, rel=1e-9) and ns <= inner * (1 + 1e-9)


def test_minorant_needs_convex_and_large_s():
    with pytest.raises(ValueError):
        build_minorant_pair(MIN_SQ, 4.0)
    with pytest.raises(ValueError):
        build_minorant_pair(PowerNorm(2), 0.5)
