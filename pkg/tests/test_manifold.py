from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gaussian_points
from digflow import gaussian as gs
from digflow.errors import (
    ChartBoundaryError,
    ChartMismatchError,
    ConvergenceError,
    DegenerateMetricError,
    FlatDirectionError,
)
from digflow.manifold import (
    DUAL,
    LEVI_CIVITA,
    PRIMAL,
    ChartPoint,
    DuallyFlatModel,
    ManifoldModel,
    TangentVector,
    connection_tag,
    duality_residual,
    euclidean_model,
    invert_dual_coordinates,
    legendre_dual,
    metric_at,
    other_connection,
    quadratic_potential,
    recover_structure_from_divergence,
)


def test_chart_point_is_immutable_and_hashable():
    a = ChartPoint([1.0, 2.0], "c")
    with pytest.raises(ValueError):
        a.coords[0] = 5.0
    assert a == ChartPoint(np.array([1.0, 2.0]), "c")
    assert a != ChartPoint([1.0, 2.0], "other")
    assert len({a, ChartPoint([1.0, 2.0], "c")}) == 1


def test_chart_point_rejects_non_finite():
    with pytest.raises(ValueError):
        ChartPoint([np.nan, 1.0], "c")


def test_tangent_vector_dimension_must_match_base():
    base = ChartPoint([0.0, 1.0], "c")
    with pytest.raises(ValueError):
        TangentVector(base, [1.0, 2.0, 3.0])
    assert TangentVector(base, [1, 2]).chart_id == "c"


def test_connection_aliases():
    assert connection_tag("e") == PRIMAL
    assert connection_tag("m") == DUAL
    assert connection_tag("LC") == LEVI_CIVITA
    assert other_connection("primal") == DUAL
    assert other_connection("lc") == LEVI_CIVITA
    with pytest.raises(ValueError):
        connection_tag("alpha")


def test_chart_mismatch_is_refused(gauss):
    with pytest.raises(ChartMismatchError):
        metric_at(gauss, ChartPoint([0.0, 1.0], "natural"))
    with pytest.raises(ChartMismatchError):
        gauss.components(TangentVector(ChartPoint([0.0, -0.5], "natural"), [1.0, 0.0]))


def test_chart_boundary_is_refused(gauss):
    with pytest.raises(ChartBoundaryError):
        metric_at(gauss, [0.0, -1.0])


def test_metric_euclidean_identity(flat2):
    assert np.array_equal(metric_at(flat2, [3.0, -7.0]), np.eye(2))


@pytest.mark.parametrize(
    "x, expected",
    [((0.0, 1.0), np.diag([1.0, 2.0])), ((3.0, 2.0), np.diag([0.25, 0.5]))],
)
def test_metric_gaussian(gauss, x, expected):
    assert np.allclose(metric_at(gauss, x), expected, rtol=0, atol=1e-15)


def test_metric_degenerate_raises():
    bad = ManifoldModel(2, lambda c: np.diag([1.0, -1.0]), lambda c, conn: np.zeros((2, 2, 2)), "bad")
    with pytest.raises(DegenerateMetricError, match=r"\[0.5, 0.5\]"):
        metric_at(bad, [0.5, 0.5])


def test_metric_is_symmetrised():
    skew = ManifoldModel(2, lambda c: np.array([[2.0, 1.0], [0.0, 2.0]]), lambda c, conn: np.zeros((2, 2, 2)), "s")
    G = metric_at(skew, [0.0, 0.0])
    assert np.array_equal(G, G.T)


def test_duality_residual_euclidean(flat2):
    assert duality_residual(flat2, [1.0, 2.0]) == 0.0


def test_duality_residual_gaussian_hand_check(gauss):
    # d_sigma g_11 = -2/sigma^3 = Gamma^e_{21,1} + Gamma^m_{21,1} = -2 + 0 at sigma = 1
    e = gs.connection_symbols([0.0, 1.0], "e")
    m = gs.connection_symbols([0.0, 1.0], "m")
    assert e[1, 0, 0] + m[1, 0, 0] == pytest.approx(-2.0)
    assert duality_residual(gauss, [0.0, 1.0]) < 1e-14


def test_duality_residual_finite_differences(gauss):
    assert duality_residual(gauss, [0.0, 1.0], h=1e-3) < 1e-6


def test_duality_residual_rejects_bad_step(gauss):
    with pytest.raises(ValueError):
        duality_residual(gauss, [0.0, 1.0], h=0.0)


@given(gaussian_points)
def test_duality_residual_property(x):
    assert duality_residual(gs.gaussian_model(), x) < 1e-8


@given(gaussian_points)
def test_duality_in_affine_charts(x):
    for chart, to in ((gs.NATURAL, gs.natural_coords), (gs.EXPECTATION, gs.expectation_coords)):
        model = gs.gaussian_model(chart)
        y = to(x).coords
        scale = 1.0 + np.max(np.abs(model.metric_gradient(y)))
        assert duality_residual(model, y) < 1e-8 * scale


def test_potential_charts_are_flat():
    pot = gs.gaussian_potential()
    theta = gs.natural_coords([0.3, 1.7]).coords
    assert np.all(pot.theta_chart().lower_symbols(theta, PRIMAL) == 0.0)
    eta = gs.expectation_coords([0.3, 1.7]).coords
    assert np.all(pot.eta_chart().lower_symbols(eta, DUAL) == 0.0)


def test_legendre_quadratic():
    eta, phi = legendre_dual(quadratic_potential(2), [3.0, 4.0])
    assert np.array_equal(eta.coords, [3.0, 4.0])
    assert phi == 12.5
    eta0, phi0 = legendre_dual(quadratic_potential(2), [0.0, 0.0])
    assert np.array_equal(eta0.coords, [0.0, 0.0]) and phi0 == 0.0


def test_legendre_gaussian():
    eta, phi = legendre_dual(gs.gaussian_potential(), gs.natural_coords([0.0, 2.0]))
    assert np.allclose(eta.coords, [0.0, 4.0], atol=1e-14)
    # negative entropy of N(0, 4): -(1/2) ln(2 pi e 4)
    assert phi == pytest.approx(-0.5 * np.log(2 * np.pi * np.e * 4.0), abs=1e-12)


def test_legendre_flat_direction():
    singular = DuallyFlatModel(
        2,
        lambda t: 0.5 * t[0] ** 2,
        lambda t: np.array([t[0], 0.0]),
        lambda t: np.diag([1.0, 0.0]),
    )
    with pytest.raises(FlatDirectionError):
        legendre_dual(singular, [1.0, 1.0])


@given(gaussian_points)
def test_legendre_identity_property(x):
    pot = gs.gaussian_potential()
    theta = gs.natural_coords(x).coords
    eta, phi = legendre_dual(pot, theta)
    assert abs(phi + pot.potential(theta) - theta @ eta.coords) < 1e-10


def test_invert_dual_quadratic():
    assert np.allclose(invert_dual_coordinates(quadratic_potential(2), [3.0, 4.0]).coords, [3.0, 4.0])


def test_invert_dual_gaussian_numeric():
    from dataclasses import replace

    pot = replace(gs.gaussian_potential(), gradient_inverse=None)
    theta = invert_dual_coordinates(pot, [0.0, 4.0]).coords
    assert np.allclose(theta, [0.0, -0.125], atol=1e-10)


def test_invert_dual_out_of_range():
    from dataclasses import replace

    pot = replace(gs.gaussian_potential(), gradient_inverse=None)
    with pytest.raises(ConvergenceError) as info:
        invert_dual_coordinates(pot, [2.0, 1.0])  # eta2 < eta1^2: no variance
    assert np.isfinite(info.value.residual)


@given(gaussian_points)
def test_invert_dual_roundtrip_property(x):
    from dataclasses import replace

    pot = replace(gs.gaussian_potential(), gradient_inverse=None)
    theta = gs.natural_coords(x).coords
    eta, _ = legendre_dual(pot, theta)
    back = invert_dual_coordinates(pot, eta).coords
    assert np.allclose(back, theta, rtol=1e-8, atol=1e-10)


def test_recovery_euclidean():
    rec = recover_structure_from_divergence(lambda p, q: 0.5 * np.sum((p - q) ** 2), [0.3, -0.2])
    assert np.allclose(rec.metric_est, np.eye(2), atol=1e-8)
    assert np.max(np.abs(rec.symbols_est)) < 1e-5
    assert np.max(np.abs(rec.dual_symbols_est)) < 1e-5


def test_recovery_gaussian_closed_form():
    rec = recover_structure_from_divergence(gs.closed_form_divergence, [0.0, 1.0], h=1e-3)
    assert np.allclose(rec.metric_est, np.diag([1.0, 2.0]), atol=1e-4)
    assert rec.symbols_est[1, 1, 1] == pytest.approx(-6.0, abs=1e-2)
    assert np.allclose(rec.symbols_est, gs.connection_symbols([0.0, 1.0], "e"), atol=1e-2)
    assert np.allclose(rec.dual_symbols_est, gs.connection_symbols([0.0, 1.0], "m"), atol=1e-2)
    assert rec.error_estimate < 1e-3


def test_recovery_rejects_bad_step():
    with pytest.raises(ValueError):
        recover_structure_from_divergence(gs.closed_form_divergence, [0.0, 1.0], h=-1.0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_euclidean_model_symbols_vanish(a, b):
    m = euclidean_model(2)
    assert np.all(m.lower_symbols(np.array([a, b]), PRIMAL) == 0.0)
    assert np.all(m.acceleration(np.array([a, b]), np.array([1.0, 2.0])) == 0.0)


def test_invert_dual_converges_when_objective_is_flat_to_rounding():
    from dataclasses import replace

    pot = replace(gs.gaussian_potential(), gradient_inverse=None)
    eta = np.array([-2.5088314571273718, 21.339883696936685])
    theta = invert_dual_coordinates(pot, eta).coords
    assert np.allclose(pot.potential_gradient(theta), eta, rtol=0, atol=1e-10)
