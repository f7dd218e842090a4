"""Divergence functionals: curve divergence, canonical divergence (energy and
vector forms), its dual, and the Bregman form of a dually flat model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DigflowError, StationaryCurveError
from .geodesic import Curve, GeodesicPath, geodesic_bvp, terminal_velocity
from .manifold import (
    DUAL,
    PRIMAL,
    ChartPoint,
    DuallyFlatModel,
    ManifoldModel,
    PointLike,
    connection_tag,
)

DEFAULT_NODES = 129
MAX_NODES = 16385

CURVE = "curve-double-integral"
ENERGY = "weighted-energy"
VECTOR = "vector-form"
BREGMAN = "bregman"


@dataclass(frozen=True, eq=False)
class DivergenceReport:
    """Value of a divergence functional with its quadrature-error estimate."""

    value: float
    method: str
    quadrature_error: float = 0.0
    path_used: Optional[GeodesicPath] = None
    connection: str = PRIMAL

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "quadrature_error": self.quadrature_error,
            "connection": self.connection,
        }


def _check_nodes(nodes: int) -> int:
    if nodes < 5 or nodes % 2 == 0:
        raise ValueError(f"quadrature needs an odd node count >= 5, got {nodes}")
    return nodes


def _richardson(fine: float, coarse: float) -> float:
    # Simpson-type rules: error of the fine result is about |fine - coarse| / 15
    return abs(fine - coarse) / 15.0


def _as_curve(gamma: Union[Curve, GeodesicPath]) -> Curve:
    return gamma.as_curve() if isinstance(gamma, GeodesicPath) else gamma


# ---------------------------------------------------------------------------
# curve divergence


def _curve_samples(model: ManifoldModel, curve: Curve, ts: np.ndarray, sign: float):
    """Speed ``sqrt(g_gamma)`` and the skew rate ``kappa`` at the nodes.

    ``kappa = sign * (Gamma - Gamma*)(v, v, v) / (2 g_gamma)`` is the part of the
    induced connection coefficient that is not ``(ln sqrt g_gamma)'``.
    """
    speed = np.empty(ts.size)
    kappa = np.empty(ts.size)
    for i, t in enumerate(ts):
        x = curve.at(t)
        model.check_domain(x)
        v = curve.velocity(t)
        g = float(v @ model.metric(x) @ v)
        speed[i] = np.sqrt(max(g, 0.0))
        if g > 0.0:
            skew = model.lower_symbols(x, PRIMAL) - model.lower_symbols(x, DUAL)
            kappa[i] = sign * 0.5 * float(np.einsum("ijk,i,j,k->", skew, v, v, v)) / g
        else:
            kappa[i] = 0.0
    return speed, kappa


def _double_integral(ts: np.ndarray, speed: np.ndarray, kappa: np.ndarray) -> float:
    """``int_t a(t) e^{K(t)} int_0^t a(s) e^{-K(s)} ds dt`` with ``K`` the prefix integral of ``kappa``."""
    K = CubicSpline(ts, kappa).antiderivative()(ts)
    K -= K[0]
    inner = CubicSpline(ts, speed * np.exp(-K)).antiderivative()(ts)
    inner -= inner[0]
    return float(simpson(speed * np.exp(K) * inner, x=ts))


def curve_divergence(
    model: ManifoldModel,
    gamma: Union[Curve, GeodesicPath],
    connection: str = PRIMAL,
    nodes: int = DEFAULT_NODES,
) -> DivergenceReport:
    """Curve divergence ``D(gamma)`` (or its dual with ``connection="dual"``).

    The weight ``mu(t) / mu(s) = exp(int_s^t Gamma_gamma)`` is split into
    ``sqrt(g(t) / g(s))`` and ``exp(K(t) - K(s))``, where ``K`` integrates only
    the skew part of the induced connection.  The double integral over
    ``s <= t`` then factorises into one prefix integral and one outer integral,
    and needs no acceleration of the curve.
    """
    _check_nodes(nodes)
    conn = connection_tag(connection)
    if conn not in (PRIMAL, DUAL):
        raise ValueError("curve divergence is defined for 'primal' or 'dual'")
    curve = _as_curve(gamma)
    sign = 1.0 if conn == PRIMAL else -1.0
    ts = np.linspace(curve.t0, curve.t1, nodes)
    speed, kappa = _curve_samples(model, curve, ts, sign)

    scale = float(np.max(speed)) if speed.size else 0.0
    if scale == 0.0:
        raise StationaryCurveError("stationary curve: g_gamma vanishes on the whole curve")
    still = speed <= 1e-7 * scale
    pair = np.flatnonzero(still[:-1] & still[1:])
    if pair.size:
        i = int(pair[0])
        raise StationaryCurveError(f"stationary curve segment on [{ts[i]:.6g}, {ts[i + 1]:.6g}]: g_gamma = 0")

    fine = _double_integral(ts, speed, kappa)
    coarse = _double_integral(ts[::2], speed[::2], kappa[::2])
    path = gamma if isinstance(gamma, GeodesicPath) else None
    return DivergenceReport(fine, CURVE, _richardson(fine, coarse), path, conn)


# ---------------------------------------------------------------------------
# canonical divergence


def _weighted_energy(model: ManifoldModel, path: GeodesicPath, ts: np.ndarray) -> np.ndarray:
    vals = np.empty(ts.size)
    for i, t in enumerate(ts):
        x, v = path.state_at(t)
        vals[i] = t * float(v @ model.metric(x) @ v)
    return vals


def canonical_divergence(
    model: ManifoldModel,
    p: PointLike,
    q: PointLike,
    nodes: int = DEFAULT_NODES,
    connection: str = PRIMAL,
    bvp_method: str = "auto",
    rtol: Optional[float] = None,
    max_nodes: int = MAX_NODES,
) -> DivergenceReport:
    """``D(p, q) = int_0^1 t <v, v> dt`` along the geodesic from ``p`` to ``q``.

    ``connection="dual"`` gives the dual divergence ``D*(p, q)`` in the same form.
    With ``rtol`` set, the node count doubles until the error estimate drops
    below ``rtol * max(1, |D|)`` or ``max_nodes`` is reached.
    """
    _check_nodes(nodes)
    conn = connection_tag(connection)
    path = geodesic_bvp(model, p, q, conn, method=bvp_method)
    ts = np.linspace(0.0, 1.0, nodes)
    vals = _weighted_energy(model, path, ts)
    while True:
        fine = float(simpson(vals, x=ts))
        coarse = float(simpson(vals[::2], x=ts[::2]))
        err = _richardson(fine, coarse)
        if rtol is None or err <= rtol * max(1.0, abs(fine)) or 2 * ts.size - 1 > max_nodes:
            return DivergenceReport(fine, ENERGY, err, path, conn)
        mids = 0.5 * (ts[:-1] + ts[1:])
        merged = np.empty(2 * ts.size - 1)
        merged[::2], merged[1::2] = vals, _weighted_energy(model, path, mids)
        vals = merged
        ts = np.linspace(0.0, 1.0, vals.size)


def _inner_terminal_velocity(model, pc, x, conn, bvp_method, warm):
    if np.array_equal(pc, x):
        return np.zeros_like(x), warm
    if bvp_method in ("auto", "affine") and model.flat is not None and conn in (PRIMAL, DUAL):
        return terminal_velocity(model, pc, x, conn), warm
    path = geodesic_bvp(model, pc, x, conn, method="shooting", v_guess=warm)
    return path.velocities[-1], path.velocities[0]


def canonical_divergence_vector_form(
    model: ManifoldModel,
    p: PointLike,
    q: PointLike,
    gamma: Optional[Union[Curve, GeodesicPath]] = None,
    connection: str = PRIMAL,
    nodes: int = DEFAULT_NODES,
    bvp_method: str = "auto",
) -> DivergenceReport:
    """``int_0^1 <v_t(1), gamma'(t)> dt`` where ``v_t(1)`` is the terminal velocity
    of the geodesic from ``p`` to ``gamma(t)``.

    ``gamma`` defaults to the geodesic from ``p`` to ``q``; any curve from ``p``
    to ``q`` gives the same value on a dually flat model.  Inner shooting
    problems are warm-started from the previous node's initial velocity.
    """
    _check_nodes(nodes)
    conn = connection_tag(connection)
    pc, qc = model.coords(p), model.coords(q)
    path_used = None
    if gamma is None:
        path_used = geodesic_bvp(model, pc, qc, conn, method=bvp_method)
        curve = path_used.as_curve()
    else:
        curve = _as_curve(gamma)
        path_used = gamma if isinstance(gamma, GeodesicPath) else None
    tol = 1e-8 * (1.0 + np.linalg.norm(qc))
    if np.linalg.norm(curve.at(curve.t0) - pc) > tol or np.linalg.norm(curve.at(curve.t1) - qc) > tol:
        raise ValueError("the curve must start at p and end at q")

    ts = np.linspace(curve.t0, curve.t1, nodes)
    vals = np.empty(nodes)
    warm = qc - pc
    for i, t in enumerate(ts):
        x = curve.at(t)
        try:
            vt, warm = _inner_terminal_velocity(model, pc, x, conn, bvp_method, warm)
        except DigflowError as exc:
            raise ConvergenceError(f"inner geodesic failed at node {i} (t={t:.6g}): {exc}") from exc
        vals[i] = float(vt @ model.metric(x) @ curve.velocity(t))
    fine = float(simpson(vals, x=ts))
    coarse = float(simpson(vals[::2], x=ts[::2]))
    return DivergenceReport(fine, VECTOR, _richardson(fine, coarse), path_used, conn)


def dual_canonical_divergence(
    model: ManifoldModel,
    p: PointLike,
    q: PointLike,
    gamma: Optional[Union[Curve, GeodesicPath]] = None,
    nodes: int = DEFAULT_NODES,
    bvp_method: str = "auto",
) -> DivergenceReport:
    """``D*(p, q)``: the vector form with dual geodesics throughout."""
    return canonical_divergence_vector_form(model, p, q, gamma, DUAL, nodes, bvp_method)


# ---------------------------------------------------------------------------
# Bregman form


def _theta_of(model: Union[DuallyFlatModel, ManifoldModel], x: PointLike) -> np.ndarray:
    if isinstance(model, DuallyFlatModel):
        return model.theta(x)
    if model.flat is None:
        raise ValueError(f"model in chart {model.chart_id!r} has no dually flat structure")
    return np.asarray(model.flat.to_theta(model.coords(x)), dtype=float)


def bregman_divergence(
    model: Union[DuallyFlatModel, ManifoldModel], p: PointLike, q: PointLike
) -> DivergenceReport:
    """``Psi(theta_p) + Phi(eta_q) - theta_p . eta_q``, exact.

    For a :class:`DuallyFlatModel` the points are natural coordinates; for a
    chart model with a flat structure they are converted first.  The value
    equals the canonical divergence ``D(p, q)``.
    """
    potential = model if isinstance(model, DuallyFlatModel) else model.flat.potential if model.flat else None
    tp, tq = _theta_of(model, p), _theta_of(model, q)
    if potential.domain is not None and not (potential.domain(tp) and potential.domain(tq)):
        raise ValueError("points outside the potential domain")
    eta_q = np.asarray(potential.potential_gradient(tq), dtype=float)
    phi_q = float(tq @ eta_q - potential.potential(tq))
    value = float(potential.potential(tp) + phi_q - tp @ eta_q)
    return DivergenceReport(value, BREGMAN, 0.0, None, PRIMAL)
