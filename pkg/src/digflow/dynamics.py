"""Weighted kinetic energy, its Hamiltonian picture, and divergence-gradient flows.

The Lagrangian is ``L(t, x, v) = (t / 2) <v, v>_x``.  Its Euler-Lagrange
system, written with the primal symbols in a chart where the dual connection
is affine, is ``t x'' + (t / 2) Gamma(x', x') + x' = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import SingularTimeError
from .geodesic import (
    Curve,
    GeodesicPath,
    geodesic_bvp,
    rk4,
    sample_derivative,
    terminal_velocity,
)
from .manifold import (
    DUAL,
    LEVI_CIVITA,
    PRIMAL,
    ChartPoint,
    ManifoldModel,
    PointLike,
    TangentVector,
    VectorLike,
    connection_tag,
)


def _check_time(t: float) -> float:
    t = float(t)
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return t


def lagrangian(model: ManifoldModel, t: float, x: PointLike, v: VectorLike, which: str = PRIMAL) -> float:
    """``(t / 2) v^T G(x) v``.

    ``which`` only records the chart contract (dual-affine chart for the primal
    system, primal-affine for the dual); the formula is the same in any chart.
    """
    connection_tag(which)
    t = _check_time(t)
    xc, vc = model.coords(x), model.components(v)
    return 0.5 * t * float(vc @ model.metric(xc) @ vc)


def momentum(model: ManifoldModel, t: float, x: PointLike, v: VectorLike) -> np.ndarray:
    """Conjugate momentum ``zeta = t G(x) v`` (a covector)."""
    t = _check_time(t)
    xc, vc = model.coords(x), model.components(v)
    return t * (model.metric(xc) @ vc)


def velocity_from_momentum(model: ManifoldModel, t: float, x: PointLike, zeta: ArrayLike) -> np.ndarray:
    """Inverse fibre map ``v = G(x)^{-1} zeta / t``; undefined at ``t = 0``."""
    if not t > 0:
        raise SingularTimeError(f"singular time: the momentum map is not invertible at t={t}")
    xc = model.coords(x)
    return np.linalg.solve(model.metric(xc), np.asarray(zeta, dtype=float)) / t


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Point ``(t, x, zeta)`` of the time-dependent phase space (``t > 0``)."""

    t: float
    position: ChartPoint
    momentum: np.ndarray

    def __post_init__(self):
        if not self.t > 0:
            raise SingularTimeError(f"singular time: phase states need t > 0, got {self.t}")
        z = np.array(self.momentum, dtype=float).reshape(-1)
        if z.shape != self.position.coords.shape:
            raise ValueError("momentum and position dimensions differ")
        object.__setattr__(self, "momentum", z)


def hamiltonian(model: ManifoldModel, state: PhaseState) -> float:
    """``H = zeta G^{-1} zeta^T / (2 t)``."""
    x = model.coords(state.position)
    z = state.momentum
    return float(z @ np.linalg.solve(model.metric(x), z)) / (2.0 * state.t)


def euler_lagrange_residual(
    model: ManifoldModel, curve: Curve, t: float, which: str = PRIMAL
) -> np.ndarray:
    """``t x'' + (t / 2) Gamma^h_ij x'^i x'^j + x'`` at ``t``.

    ``Gamma`` are the raised symbols of ``which`` in the model's chart.  The
    system is the Euler-Lagrange system of :func:`lagrangian` when the chart is
    affine for the other connection.
    """
    conn = connection_tag(which)
    if conn not in (PRIMAL, DUAL):
        raise ValueError("which must be 'primal' or 'dual'")
    x = curve.at(t)
    model.check_domain(x)
    v = curve.velocity(t)
    a = curve.acceleration(t)
    half_gamma = -0.5 * model.acceleration(x, v, conn)
    return t * a + t * half_gamma + v


# ---------------------------------------------------------------------------
# gradient field and flow


def _gradient(model: ManifoldModel, pc: np.ndarray, x: np.ndarray, conn: str, bvp_method: str, warm=None):
    if np.array_equal(pc, x):
        return np.zeros_like(x), warm
    if bvp_method in ("auto", "affine") and model.flat is not None:
        return terminal_velocity(model, pc, x, conn), warm
    path = geodesic_bvp(model, pc, x, conn, method="shooting", v_guess=warm)
    return path.velocities[-1], path.velocities[0]


def divergence_gradient(
    model: ManifoldModel, p: PointLike, x: PointLike, connection: str = PRIMAL, bvp_method: str = "auto"
) -> TangentVector:
    """Riemannian gradient of ``D_p = D(p, .)`` at ``x``.

    It is the terminal velocity of the geodesic from ``p`` to ``x``; with
    ``connection="dual"`` the same construction gives the gradient of ``D*_p``.
    """
    conn = connection_tag(connection)
    pc, xc = model.coords(p), model.coords(x)
    grad, _ = _gradient(model, pc, xc, conn, bvp_method)
    return TangentVector(ChartPoint(xc, model.chart_id), grad)


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    """Sampled solution of ``x' = grad D_p(x) / t`` on ``[t0, 1]`` with diagnostics."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    p: ChartPoint
    q: ChartPoint
    connection: str
    steps: int
    max_geodesic_deviation: float
    terminal_miss: float
    gradient_residual: np.ndarray
    flagged: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def chart_id(self) -> str:
        return self.p.chart_id

    @property
    def samples(self) -> List[Tuple[float, ChartPoint, TangentVector]]:
        out = []
        for t, x, v in zip(self.t, self.points, self.velocities):
            base = ChartPoint(x, self.chart_id)
            out.append((float(t), base, TangentVector(base, v)))
        return out

    def __repr__(self):
        return (
            f"FlowTrajectory(connection={self.connection!r}, p={self.p.coords.tolist()}, "
            f"q={self.q.coords.tolist()}, samples={len(self.t)}, terminal_miss={self.terminal_miss:.3e}, "
            f"max_geodesic_deviation={self.max_geodesic_deviation:.3e})"
        )


def gradient_flow(
    model: ManifoldModel,
    p: PointLike,
    q: PointLike,
    t0: float = 1e-3,
    steps: int = 1024,
    dual: bool = False,
    bvp_method: str = "auto",
) -> FlowTrajectory:
    """Integrate the divergence-gradient flow from ``t0`` to ``1``.

    The flow is singular at ``t = 0`` and also admits ``x = p``, so ``x(t0)`` is
    seeded on the geodesic from ``p`` to ``q``.  In log time ``s = ln t`` the
    equation becomes the autonomous ``dx/ds = grad D_p(x)``, which is integrated
    with RK4 on a uniform ``s`` grid.
    """
    if not t0 > 0:
        raise SingularTimeError(f"singular time: t0 must be positive, got {t0}")
    if not t0 < 1:
        raise ValueError(f"t0 must be below 1, got {t0}")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    conn = DUAL if dual else PRIMAL
    pc, qc = model.coords(p), model.coords(q)
    path = geodesic_bvp(model, pc, qc, conn, method=bvp_method)
    seed = path.point_at(t0)

    warm = [qc - pc]

    def rhs(_s, y):
        model.check_domain(y)
        g, warm[0] = _gradient(model, pc, y, conn, bvp_method, warm[0])
        return g

    s_grid, ys = rk4(rhs, seed, np.log(t0), 0.0, steps)
    ts = np.exp(s_grid)
    ts[-1] = 1.0
    grads = np.array([rhs(0.0, y) for y in ys])
    velocities = grads / ts[:, None]

    deviation = max(float(np.linalg.norm(y - path.point_at(t))) for t, y in zip(ts, ys))
    miss = float(np.linalg.norm(ys[-1] - qc))
    h = s_grid[1] - s_grid[0]
    residual = np.linalg.norm(sample_derivative(ys, h) - grads, axis=1)

    notes = []
    scale = 1.0 + float(np.linalg.norm(qc - pc))
    flagged = miss > 1e-3 * scale
    if flagged:
        notes.append(f"flow diverged from the target: terminal miss {miss:.3e}")
    return FlowTrajectory(
        t=ts,
        points=ys,
        velocities=velocities,
        p=ChartPoint(pc, model.chart_id),
        q=ChartPoint(qc, model.chart_id),
        connection=conn,
        steps=steps,
        max_geodesic_deviation=deviation,
        terminal_miss=miss,
        gradient_residual=residual,
        flagged=flagged,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# action along candidate minimisers


def _decade_breaks(eps: float) -> np.ndarray:
    k = int(np.floor(-np.log10(eps) + 1e-12))
    decades = [10.0**-j for j in range(k, -1, -1) if 10.0**-j > eps]
    return np.array([eps] + decades)


def truncated_action(model: ManifoldModel, curve: Curve, eps: float, order: int = 40) -> float:
    """``int_eps^1 L(t, x(t), x'(t)) dt``.

    Gauss-Legendre on the decades ``[10^-k-1, 10^-k]`` (plus a partial one at
    ``eps``), so actions for nested ``eps`` share their common pieces exactly.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    breaks = _decade_breaks(eps)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        piece = 0.0
        for z, w in zip(nodes, weights):
            t = mid + half * z
            x, v = curve.at(t), curve.velocity(t)
            piece += w * 0.5 * t * float(v @ model.metric(x) @ v)
        total += half * piece
    return total


def principal_curve(model: ManifoldModel, p: PointLike, q: PointLike, bvp_method: str = "auto") -> Curve:
    """``t -> sigma(t^2)`` with ``sigma`` the geodesic from ``p`` to ``q``.

    With ``u = t^2`` the action density becomes ``u <sigma', sigma'> du``, so the
    truncated action on ``[eps, 1]`` is the weighted energy on ``[eps^2, 1]``.
    """
    path = geodesic_bvp(model, p, q, PRIMAL, method=bvp_method)

    def position(t):
        return path.point_at(t * t)

    def velocity(t):
        return 2.0 * t * path.velocity_at(t * t)

    return Curve(position, velocity, None, model.chart_id, 0.0, 1.0)


def log_time_curve(path: Union[GeodesicPath, Curve], eps: float) -> Curve:
    """``t -> path(1 + ln t / ln(1 / eps))`` on ``[eps, 1]``.

    Derivatives follow from the chain rule, so finite differences (if any) are
    only taken in the original parameter.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    inner = path.as_curve() if isinstance(path, GeodesicPath) else path
    c = 1.0 / np.log(1.0 / eps)

    def s_of(t):
        return 1.0 + c * np.log(t)

    def acceleration(t):
        s = s_of(t)
        return (c * inner.acceleration(s) - inner.velocity(s)) * (c / t**2)

    return Curve(
        position=lambda t: inner.at(s_of(t)),
        velocity_fn=lambda t: inner.velocity(s_of(t)) * (c / t),
        acceleration_fn=acceleration,
        chart_id=inner.chart_id,
        t0=eps,
        t1=1.0,
    )


def euler_lagrange_solution(
    model: ManifoldModel, p: PointLike, q: PointLike, eps: float, bvp_method: str = "shooting"
) -> Curve:
    """Solution of the Euler-Lagrange system with ``x(eps) = p`` and ``x(1) = q``.

    It is the Levi-Civita geodesic from ``p`` to ``q`` run in logarithmic time.
    """
    path = geodesic_bvp(model, p, q, LEVI_CIVITA, method=bvp_method)
    return log_time_curve(path, eps)


def map_curve(curve: Curve, to_chart, jacobian, chart_id: str) -> Curve:
    """Push a curve through a chart change; velocity by the chain rule."""
    return Curve(
        position=lambda t: np.asarray(to_chart(curve.at(t)), dtype=float),
        velocity_fn=lambda t: jacobian(curve.at(t)) @ curve.velocity(t),
        chart_id=chart_id,
        t0=curve.t0,
        t1=curve.t1,
    )


def log_time_action(model: ManifoldModel, p: PointLike, q: PointLike, eps: float) -> float:
    """Closed form of the action along :func:`euler_lagrange_solution`: ``l^2 / (2 ln(1/eps))``.

    ``l`` is the Riemannian length of the Levi-Civita geodesic from ``p`` to ``q``.
    """
    path = geodesic_bvp(model, p, q, LEVI_CIVITA, method="shooting")
    x0, v0 = path.points[0], path.velocities[0]
    length_sq = float(v0 @ model.metric(x0) @ v0)
    return length_sq / (2.0 * np.log(1.0 / eps))
