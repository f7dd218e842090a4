from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

import oracle_values as ov
from conftest import gaussian_points
from digflow import gaussian as gs
from digflow.errors import ChartBoundaryError, ConvergenceError, StationaryCurveError
from digflow.geodesic import (
    Curve,
    exp_map,
    geodesic_bvp,
    geodesic_ivp,
    inverse_exp,
    project_structure,
    rk4,
)
from digflow.manifold import DUAL, LEVI_CIVITA, PRIMAL, ChartPoint, TangentVector

P1, P2 = np.array(ov.P1), np.array(ov.P2)


def test_rk4_exponential():
    ts, ys = rk4(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 64)
    assert ys[-1, 0] == pytest.approx(np.e, rel=1e-8)
    assert ts[0] == 0.0 and ts[-1] == 1.0


def test_curve_finite_difference_derivatives():
    c = Curve(lambda t: np.array([np.sin(t), t**3]))
    for t in (0.0, 0.4, 1.0):
        assert np.allclose(c.velocity(t), [np.cos(t), 3 * t**2], atol=1e-8)
        assert np.allclose(c.acceleration(t), [-np.sin(t), 6 * t], atol=1e-5)


def test_curve_reparametrize_and_reverse():
    c = Curve.line([0.0, 0.0], [3.0, 4.0])
    r = c.reparametrize(lambda s: s * s, lambda s: 2 * s, lambda s: 2.0)
    assert np.allclose(r.at(0.5), [0.75, 1.0])
    assert np.allclose(r.velocity(0.5), [3.0, 4.0])
    assert np.allclose(r.acceleration(0.5), [6.0, 8.0])
    rev = c.reversed()
    assert np.allclose(rev.at(0.0), [3.0, 4.0]) and np.allclose(rev.velocity(0.3), [-3.0, -4.0])


def test_curve_from_samples():
    ts = np.linspace(0, 1, 41)
    c = Curve.from_samples(ts, np.column_stack([ts**2, np.sin(ts)]))
    assert np.allclose(c.at(0.33), [0.33**2, np.sin(0.33)], atol=1e-5)


def test_ivp_euclidean(flat2):
    path = geodesic_ivp(flat2, [0.0, 0.0], [3.0, 4.0])
    assert np.allclose(path.points[-1], [3.0, 4.0], atol=1e-14)
    mid = path.points[len(path.t) // 2]
    assert np.allclose(mid, [1.5, 2.0], atol=1e-14)


@pytest.mark.parametrize("t_end, expected", [(1.0, P2), (0.5, ov.MIDPOINT)])
def test_ivp_gaussian_closed_form(gauss, t_end, expected):
    path = geodesic_ivp(gauss, P1, ov.VELOCITY_T0, PRIMAL, t_end)
    assert np.allclose(path.points[-1], expected, atol=1e-6)
    assert path.residual < 1e-6


def test_ivp_accepts_tangent_vector(gauss):
    base = ChartPoint(P1, gs.MU_SIGMA)
    path = geodesic_ivp(gauss, base, TangentVector(base, ov.VELOCITY_T0))
    assert path.p == base


def test_ivp_leaves_chart(gauss):
    with pytest.raises(ChartBoundaryError):
        geodesic_ivp(gauss, [0.0, 1.0], [0.0, -5.0], DUAL)


def test_ivp_rejects_too_few_steps(gauss):
    with pytest.raises(ValueError):
        geodesic_ivp(gauss, P1, [1.0, 0.0], steps=1)


@settings(max_examples=15)
@given(gaussian_points, st.tuples(st.floats(-1, 1), st.floats(-0.4, 0.4)), st.sampled_from([PRIMAL, DUAL, LEVI_CIVITA]))
def test_ivp_agrees_with_adaptive_integrator(x, v, conn):
    model = gs.gaussian_model()
    v = np.array(v) * x[1]

    def rhs(_t, y):
        return np.concatenate([y[2:], model.acceleration(y[:2], y[2:], conn)])

    ref = solve_ivp(rhs, (0.0, 1.0), np.concatenate([x, v]), rtol=1e-12, atol=1e-12, method="DOP853")
    if not ref.success or ref.y[1].min() <= 0.05:
        return
    path = geodesic_ivp(model, x, v, conn)
    assert np.allclose(path.points[-1], ref.y[:2, -1], rtol=1e-8, atol=1e-8)


def test_bvp_constant_path(gauss):
    path = geodesic_bvp(gauss, P1, P1)
    assert np.all(path.velocities == 0.0)
    assert np.all(path.points == P1)


@pytest.mark.parametrize("method", ["affine", "shooting"])
def test_bvp_matches_closed_form(gauss, method):
    path = geodesic_bvp(gauss, P1, P2, method=method)
    ts = np.linspace(0, 1, 51)
    pts, vels = path.resample(ts)
    exact = np.array([gs.e_geodesic(P1, P2, t).coords for t in ts])
    assert np.max(np.abs(pts - exact)) < 1e-6
    assert np.allclose(vels[0], ov.VELOCITY_T0, atol=1e-6)
    assert path.residual < 1e-6


def test_bvp_dual_matches_m_geodesic(gauss):
    path = geodesic_bvp(gauss, P1, P2, DUAL, method="shooting")
    for t in np.linspace(0, 1, 11):
        assert np.allclose(path.point_at(t), gs.m_geodesic(P1, P2, t).coords, atol=1e-6)


def test_bvp_euclidean(flat2):
    path = geodesic_bvp(flat2, [0.0, 0.0], [3.0, 4.0])
    assert np.allclose(path.velocities[0], [3.0, 4.0])
    assert np.allclose(path.point_at(0.25), [0.75, 1.0])


def test_bvp_affine_unavailable(flat2):
    with pytest.raises(ValueError):
        geodesic_bvp(flat2, [0.0, 0.0], [1.0, 1.0], LEVI_CIVITA, method="affine")


def test_bvp_shooting_failure_reports_residual(gauss):
    with pytest.raises(ConvergenceError) as info:
        geodesic_bvp(gauss, [0.0, 0.6], [40.0, 0.6], DUAL, method="shooting", steps=16)
    assert info.value.residual > 0
    assert "affine" in str(info.value)


def test_bvp_stiff_pair_converges(gauss):
    p, q = np.array([0.5, 0.5]), np.array([-1.0, 4.0])
    path = geodesic_bvp(gauss, p, q, method="shooting")
    assert np.allclose(path.points[-1], q, atol=1e-8)
    assert np.allclose(path.point_at(0.5), gs.e_geodesic(p, q, 0.5).coords, atol=1e-6)


def test_exp_map_examples(gauss, flat2):
    assert np.array_equal(exp_map(gauss, P1, [0.0, 0.0]).coords, P1)
    assert np.allclose(exp_map(flat2, [1.0, 1.0], [1.0, 2.0]).coords, [2.0, 3.0])
    assert np.allclose(exp_map(gauss, P1, ov.VELOCITY_T0).coords, P2, atol=1e-8)


def test_inverse_exp_examples(gauss, flat2):
    assert np.allclose(inverse_exp(flat2, [1.0, 1.0], [4.0, -1.0]).components, [3.0, -2.0])
    assert np.allclose(inverse_exp(gauss, P1, P2).components, ov.VELOCITY_T0, atol=1e-8)
    assert np.array_equal(inverse_exp(gauss, P1, P1).components, [0.0, 0.0])


@settings(max_examples=15)
@given(gaussian_points, gaussian_points, st.sampled_from([PRIMAL, DUAL]))
def test_exp_log_inverse_pair(q, p, conn):
    model = gs.gaussian_model()
    v = inverse_exp(model, q, p, conn)
    assert np.linalg.norm(exp_map(model, q, v, conn).coords - p) < 1e-6


def test_project_structure_line(flat2):
    proj = project_structure(flat2, Curve.line([0.0, 0.0], [3.0, 4.0]), 0.3)
    assert proj.g_gamma == pytest.approx(25.0)
    assert proj.gamma_symbol == 0.0 and proj.dual_gamma_symbol == 0.0


def test_project_structure_duality(gauss):
    # g_gamma' = Gamma_gamma + Gamma*_gamma along any curve
    path = geodesic_bvp(gauss, P1, P2)
    curve = path.as_curve()
    t, h = 0.4, 1e-5
    proj = project_structure(gauss, curve, t)
    g = lambda s: project_structure(gauss, curve, s).g_gamma
    dg = (g(t + h) - g(t - h)) / (2 * h)
    assert dg == pytest.approx(proj.g_gamma * (proj.gamma_symbol + proj.dual_gamma_symbol), rel=1e-5)


def test_project_structure_stationary(flat2):
    with pytest.raises(StationaryCurveError):
        project_structure(flat2, Curve(lambda t: np.array([1.0, 2.0]), lambda t: np.zeros(2)), 0.5)


def test_geodesic_path_samples_and_repr(gauss):
    path = geodesic_bvp(gauss, P1, P2)
    t, x, v = path.samples[0]
    assert t == 0.0 and x == ChartPoint(P1, gs.MU_SIGMA)
    assert "GeodesicPath" in repr(path) and len(repr(path)) < 400
    assert path.solver_info["method"] == "affine"
