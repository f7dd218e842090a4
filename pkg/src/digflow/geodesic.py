"""Geodesic initial- and boundary-value problems for either connection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.interpolate import CubicHermiteSpline

from .errors import ChartBoundaryError, ConvergenceError, DegenerateMetricError, StationaryCurveError
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

DEFAULT_STEPS = 512
MAX_STEPS = 1 << 15

# 4th-order finite-difference stencils (step 1)
_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_FORWARD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_FORWARD = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0


def _fd_derivative(
    f: Callable[[float], np.ndarray], t: float, lo: float, hi: float, order: int, h: Optional[float] = None
) -> np.ndarray:
    """Fourth-order derivative of ``f`` at ``t`` using only points in ``[lo, hi]``."""
    span = hi - lo
    if not (np.isfinite(span) and span > 0):
        raise ValueError("finite differences need a bounded parameter interval")
    if h is None:
        # balances O(h^4) truncation against rounding for each derivative order
        h = (1e-3 if order == 1 else 1e-2) * span
    central, forward = (_D1_CENTRAL, _D1_FORWARD) if order == 1 else (_D2_CENTRAL, _D2_FORWARD)
    if t - 2 * h >= lo and t + 2 * h <= hi:
        offsets, weights = np.arange(-2, 3), central
    elif t - 2 * h < lo:
        offsets, weights = np.arange(len(forward)), forward
    else:
        offsets, weights = -np.arange(len(forward)), forward * (-1.0) ** order
    vals = np.array([np.asarray(f(t + k * h), dtype=float) for k in offsets])
    return np.tensordot(weights, vals, axes=1) / h**order


@dataclass(frozen=True, eq=False)
class Curve:
    """A parametrised curve ``[t0, t1] -> chart`` with optional analytic derivatives.

    Missing derivatives are taken by fourth-order finite differences that stay
    inside the parameter interval.
    """

    position: Callable[[float], np.ndarray]
    velocity_fn: Optional[Callable[[float], np.ndarray]] = None
    acceleration_fn: Optional[Callable[[float], np.ndarray]] = None
    chart_id: str = ""
    t0: float = 0.0
    t1: float = 1.0

    def at(self, t: float) -> np.ndarray:
        return np.asarray(self.position(t), dtype=float)

    def velocity(self, t: float) -> np.ndarray:
        if self.velocity_fn is not None:
            return np.asarray(self.velocity_fn(t), dtype=float)
        return _fd_derivative(self.position, t, self.t0, self.t1, 1)

    def acceleration(self, t: float) -> np.ndarray:
        if self.acceleration_fn is not None:
            return np.asarray(self.acceleration_fn(t), dtype=float)
        if self.velocity_fn is not None:
            return _fd_derivative(self.velocity_fn, t, self.t0, self.t1, 1)
        return _fd_derivative(self.position, t, self.t0, self.t1, 2)

    def point(self, t: float) -> ChartPoint:
        return ChartPoint(self.at(t), self.chart_id)

    def reparametrize(
        self,
        phi: Callable[[float], float],
        dphi: Callable[[float], float],
        ddphi: Optional[Callable[[float], float]] = None,
        s0: float = 0.0,
        s1: float = 1.0,
    ) -> "Curve":
        """``s -> self(phi(s))`` for an increasing ``phi`` mapping ``[s0, s1]`` onto ``[t0, t1]``."""
        acc = None
        if ddphi is not None:
            def acc(s):
                u = phi(s)
                return self.acceleration(u) * dphi(s) ** 2 + self.velocity(u) * ddphi(s)

        return Curve(
            position=lambda s: self.at(phi(s)),
            velocity_fn=lambda s: self.velocity(phi(s)) * dphi(s),
            acceleration_fn=acc,
            chart_id=self.chart_id,
            t0=s0,
            t1=s1,
        )

    def reversed(self) -> "Curve":
        a, b = self.t0, self.t1
        return self.reparametrize(lambda s: a + b - s, lambda s: -1.0, lambda s: 0.0, a, b)

    @classmethod
    def line(cls, p: ArrayLike, q: ArrayLike, chart_id: str = "") -> "Curve":
        """Constant-speed straight segment from ``p`` to ``q`` in chart coordinates."""
        p = np.array(p, dtype=float).reshape(-1)
        d = np.array(q, dtype=float).reshape(-1) - p
        return cls(lambda t: p + t * d, lambda t: d.copy(), lambda t: np.zeros_like(d), chart_id)

    @classmethod
    def from_samples(
        cls, t: ArrayLike, points: ArrayLike, velocities: Optional[ArrayLike] = None, chart_id: str = ""
    ) -> "Curve":
        """Piecewise-cubic curve through samples (Hermite when velocities are given)."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(points, dtype=float)
        if velocities is None:
            velocities = np.gradient(x, t, axis=0, edge_order=2)
        spline = CubicHermiteSpline(t, x, np.asarray(velocities, dtype=float), axis=0)
        d1, d2 = spline.derivative(1), spline.derivative(2)
        return cls(spline, d1, d2, chart_id, float(t[0]), float(t[-1]))


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Sampled geodesic with connection tag and solver diagnostics.

    ``dense`` (when set) evaluates ``(x(t), v(t))`` anywhere in ``[0, t_end]``;
    otherwise cubic Hermite interpolation of the samples is used.
    """

    connection: str
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    chart_id: str
    steps: int
    residual: float
    method: str
    endpoint_error: float = 0.0
    iterations: int = 0
    model: Optional[ManifoldModel] = None
    dense: Optional[Callable[[float], Tuple[np.ndarray, np.ndarray]]] = None

    def __repr__(self):
        return (
            f"GeodesicPath(connection={self.connection!r}, chart_id={self.chart_id!r}, "
            f"p={self.points[0].tolist()}, q={self.points[-1].tolist()}, samples={len(self.t)}, "
            f"method={self.method!r}, residual={self.residual:.3e})"
        )

    @property
    def p(self) -> ChartPoint:
        return ChartPoint(self.points[0], self.chart_id)

    @property
    def q(self) -> ChartPoint:
        return ChartPoint(self.points[-1], self.chart_id)

    @property
    def samples(self) -> List[Tuple[float, ChartPoint, TangentVector]]:
        out = []
        for t, x, v in zip(self.t, self.points, self.velocities):
            base = ChartPoint(x, self.chart_id)
            out.append((float(t), base, TangentVector(base, v)))
        return out

    @property
    def solver_info(self) -> dict:
        return {
            "method": self.method,
            "steps": self.steps,
            "residual": self.residual,
            "endpoint_error": self.endpoint_error,
            "iterations": self.iterations,
        }

    def _spline(self):
        spline = getattr(self, "_cached_spline", None)
        if spline is None:
            spline = CubicHermiteSpline(self.t, self.points, self.velocities, axis=0)
            object.__setattr__(self, "_cached_spline", spline)
        return spline

    def state_at(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if self.dense is not None:
            x, v = self.dense(t)
            return np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        s = self._spline()
        return np.asarray(s(t), dtype=float), np.asarray(s(t, 1), dtype=float)

    def point_at(self, t: float) -> np.ndarray:
        return self.state_at(t)[0]

    def velocity_at(self, t: float) -> np.ndarray:
        return self.state_at(t)[1]

    def resample(self, ts: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        states = [self.state_at(float(t)) for t in np.asarray(ts, dtype=float)]
        return np.array([s[0] for s in states]), np.array([s[1] for s in states])

    def as_curve(self) -> Curve:
        """The path as a :class:`Curve`; acceleration comes from the geodesic equation."""
        acc = None
        if self.model is not None:
            model, conn = self.model, self.connection

            def acc(t):
                x, v = self.state_at(t)
                return model.acceleration(x, v, conn)

        return Curve(
            position=self.point_at,
            velocity_fn=self.velocity_at,
            acceleration_fn=acc,
            chart_id=self.chart_id,
            t0=float(self.t[0]),
            t1=float(self.t[-1]),
        )


@dataclass(frozen=True)
class CurveProjection:
    """Metric and connection coefficients induced on a curve at one parameter value."""

    g_gamma: float
    gamma_symbol: float
    dual_gamma_symbol: float


# ---------------------------------------------------------------------------
# integration


def rk4(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, t0: float, t1: float, steps: int):
    """Classical fourth-order Runge-Kutta with a fixed step; returns ``(t, y)``."""
    ts = np.linspace(t0, t1, steps + 1)
    ys = np.empty((steps + 1, y0.size))
    ys[0] = y = np.array(y0, dtype=float)
    for i in range(steps):
        t, h = ts[i], ts[i + 1] - ts[i]
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    return ts, ys


def _geodesic_rhs(model: ManifoldModel, connection: str):
    n = model.dim
    domain, accel = model.domain, model.acceleration

    def f(_t, y):
        x, v = y[:n], y[n:]
        if not np.isfinite(y).all():
            raise DegenerateMetricError(f"geodesic integration produced non-finite state at {x.tolist()}")
        if domain is not None and not domain(x):
            model.check_domain(x)
        try:
            a = accel(x, v, connection)
        except np.linalg.LinAlgError:
            raise DegenerateMetricError(f"degenerate metric at {x.tolist()}") from None
        return np.concatenate((v, a))

    return f


_D1_CENTRAL6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D1_FORWARD6 = np.array([-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0]) / 60.0


def sample_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order derivative of uniformly sampled rows (one-sided near the ends)."""
    m = values.shape[0]
    if m < 8:
        return np.gradient(values, h, axis=0, edge_order=2 if m > 2 else 1)
    out = np.empty_like(values)
    out[3:-3] = sum(w * values[k : m - 6 + k] for k, w in enumerate(_D1_CENTRAL6) if w != 0.0) / h
    for i in range(3):
        out[i] = np.tensordot(_D1_FORWARD6, values[i : i + 7], axes=1) / h
        out[m - 1 - i] = -np.tensordot(_D1_FORWARD6, values[m - 1 - i - np.arange(7)], axes=1) / h
    return out


def geodesic_residual(model: ManifoldModel, t: np.ndarray, points: np.ndarray, velocities: np.ndarray, connection: str) -> float:
    """Max over samples of ``|x'' + Gamma(x', x')|`` with ``x''`` re-differenced from the samples."""
    if len(t) < 3:
        return 0.0
    h = (t[-1] - t[0]) / (len(t) - 1)
    acc = sample_derivative(velocities, h)
    res = 0.0
    for x, v, a in zip(points, velocities, acc):
        res = max(res, float(np.linalg.norm(a - model.acceleration(x, v, connection))))
    return res


RESIDUAL_SAMPLES = 65


def dense_residual(model: ManifoldModel, dense, t: np.ndarray, connection: str, h: float = 1e-5) -> float:
    """Geodesic residual of a densely evaluable path, re-differenced at step ``h``."""
    lo, hi = float(t[0]), float(t[-1])

    def vel(s):
        return dense(s)[1]

    res = 0.0
    for s in t:
        x, v = dense(s)
        a = _fd_derivative(vel, float(s), lo, hi, 1, h * (hi - lo))
        res = max(res, float(np.linalg.norm(a - model.acceleration(x, v, connection))))
    return res


def _base_and_components(model: ManifoldModel, x0: PointLike, v0: VectorLike) -> Tuple[np.ndarray, np.ndarray]:
    x = model.coords(x0)
    if isinstance(v0, TangentVector):
        base = model.coords(v0.base)
        if not np.allclose(base, x, rtol=0.0, atol=1e-12):
            raise ValueError(f"tangent vector based at {base.tolist()}, not at {x.tolist()}")
    return x, model.components(v0)


def geodesic_ivp(
    model: ManifoldModel,
    x0: PointLike,
    v0: VectorLike,
    connection: str = PRIMAL,
    t_end: float = 1.0,
    steps: int = DEFAULT_STEPS,
) -> GeodesicPath:
    """Integrate ``x'' + Gamma(x', x') = 0`` from ``(x0, v0)`` up to ``t_end`` with RK4."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    conn = connection_tag(connection)
    x, v = _base_and_components(model, x0, v0)
    n = model.dim
    ts, ys = rk4(_geodesic_rhs(model, conn), np.concatenate([x, v]), 0.0, float(t_end), steps)
    points, vels = ys[:, :n], ys[:, n:]
    model.check_domain(points[-1])
    f = _geodesic_rhs(model, conn)

    def dense(t):
        # one RK4 step from the nearest sample at or below t
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 1))
        h = float(t) - ts[i]
        y = ys[i]
        if h != 0.0:
            k1 = f(ts[i], y)
            k2 = f(ts[i] + 0.5 * h, y + 0.5 * h * k1)
            k3 = f(ts[i] + 0.5 * h, y + 0.5 * h * k2)
            k4 = f(ts[i] + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return y[:n].copy(), y[n:].copy()

    return GeodesicPath(
        connection=conn,
        t=ts,
        points=points,
        velocities=vels,
        chart_id=model.chart_id,
        steps=steps,
        residual=geodesic_residual(model, ts, points, vels, conn),
        method="ivp",
        model=model,
        dense=dense,
    )


def _ivp_endpoint(model, x, v, conn, steps):
    n = model.dim
    _, ys = rk4(_geodesic_rhs(model, conn), np.concatenate([x, v]), 0.0, 1.0, steps)
    end = ys[-1, :n]
    model.check_domain(end)
    return end


def affine_velocity(model: ManifoldModel, p: np.ndarray, q: np.ndarray, connection: str) -> np.ndarray:
    """Initial velocity of the straight line from ``p`` to ``q`` in the connection's affine chart."""
    flat = model.flat
    if connection == PRIMAL:
        return np.linalg.solve(flat.theta_jacobian(p), flat.to_theta(q) - flat.to_theta(p))
    return np.linalg.solve(flat.eta_jacobian(p), flat.to_eta(q) - flat.to_eta(p))


def terminal_velocity(model: ManifoldModel, p: np.ndarray, x: np.ndarray, connection: str) -> np.ndarray:
    """Velocity at ``x`` of the affine-chart geodesic from ``p`` to ``x`` (flat models only)."""
    flat = model.flat
    if connection == PRIMAL:
        return np.linalg.solve(flat.theta_jacobian(x), flat.to_theta(x) - flat.to_theta(p))
    return np.linalg.solve(flat.eta_jacobian(x), flat.to_eta(x) - flat.to_eta(p))


def _affine_path(model: ManifoldModel, p: np.ndarray, q: np.ndarray, conn: str, steps: int) -> GeodesicPath:
    flat = model.flat
    if conn == PRIMAL:
        a, b = flat.to_theta(p), flat.to_theta(q)
        back, jac = flat.from_theta, flat.theta_jacobian
    else:
        a, b = flat.to_eta(p), flat.to_eta(q)
        back, jac = flat.from_eta, flat.eta_jacobian
    delta = b - a

    def dense(t):
        x = np.asarray(back(a + t * delta), dtype=float)
        return x, np.linalg.solve(jac(x), delta)

    ts = np.linspace(0.0, 1.0, steps + 1)
    states = [dense(t) for t in ts]
    points = np.array([s[0] for s in states])
    vels = np.array([s[1] for s in states])
    return GeodesicPath(
        connection=conn,
        t=ts,
        points=points,
        velocities=vels,
        chart_id=model.chart_id,
        steps=steps,
        residual=dense_residual(model, dense, np.linspace(0.0, 1.0, RESIDUAL_SAMPLES), conn),
        method="affine",
        endpoint_error=float(np.linalg.norm(points[-1] - q)),
        model=model,
        dense=dense,
    )


def _constant_path(model: ManifoldModel, p: np.ndarray, conn: str, steps: int) -> GeodesicPath:
    ts = np.linspace(0.0, 1.0, steps + 1)
    zero = np.zeros(model.dim)
    return GeodesicPath(
        connection=conn,
        t=ts,
        points=np.tile(p, (steps + 1, 1)),
        velocities=np.zeros((steps + 1, model.dim)),
        chart_id=model.chart_id,
        steps=steps,
        residual=0.0,
        method="constant",
        model=model,
        dense=lambda t: (p.copy(), zero.copy()),
    )


def shoot(
    model: ManifoldModel,
    p: np.ndarray,
    q: np.ndarray,
    conn: str,
    v_guess: np.ndarray,
    tol: float,
    steps: int,
    max_iter: int = 50,
) -> Tuple[np.ndarray, float, int]:
    """Damped Newton on the endpoint map ``v -> exp_p(v) - q`` with a difference Jacobian."""
    n = model.dim
    scale = 1.0 + float(np.linalg.norm(q))

    def miss(v):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                return _ivp_endpoint(model, p, v, conn, steps) - q
        except (ChartBoundaryError, DegenerateMetricError, np.linalg.LinAlgError, FloatingPointError):
            return None

    v = np.array(v_guess, dtype=float)
    r = miss(v)
    if r is None:
        raise ConvergenceError("shooting: initial guess leaves the chart", np.inf)
    best = float(np.linalg.norm(r))
    for it in range(1, max_iter + 1):
        if best < tol * scale:
            return v, best, it - 1
        J = np.empty((n, n))
        for k in range(n):
            h = 1e-7 * max(1.0, abs(v[k]))
            e = np.zeros(n)
            e[k] = h
            rk = miss(v + e)
            if rk is None:
                rk = miss(v - e)
                if rk is None:
                    raise ConvergenceError("shooting: Jacobian probe left the chart", best)
                J[:, k] = (r - rk) / h
            else:
                J[:, k] = (rk - r) / h
        try:
            dv = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("shooting: singular endpoint Jacobian", best) from None
        alpha = 1.0
        while alpha > 1e-6:
            cand = v + alpha * dv
            rc = miss(cand)
            if rc is not None and np.linalg.norm(rc) < best:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(f"shooting stalled with residual {best:.3e}", best)
        v, r, best = cand, rc, float(np.linalg.norm(rc))
    if best < tol * scale:
        return v, best, max_iter
    raise ConvergenceError(f"shooting did not converge (residual {best:.3e})", best)


def geodesic_bvp(
    model: ManifoldModel,
    p: PointLike,
    q: PointLike,
    connection: str = PRIMAL,
    tol: float = 1e-10,
    steps: int = DEFAULT_STEPS,
    method: str = "auto",
    v_guess: Optional[ArrayLike] = None,
) -> GeodesicPath:
    """Geodesic from ``p`` to ``q``.

    ``method="auto"`` uses the straight line in the matching affine chart when
    the model is flat for ``connection`` and shooting otherwise.  Shooting
    starts from ``v_guess`` (default ``q - p``) and, if that fails, from the
    affine-chart velocity when one exists.
    """
    if method not in ("auto", "shooting", "affine"):
        raise ValueError(f"unknown BVP method {method!r}")
    conn = connection_tag(connection)
    pc, qc = model.coords(p), model.coords(q)
    if np.array_equal(pc, qc):
        return _constant_path(model, pc, conn, steps)
    has_affine = model.flat is not None and conn in (PRIMAL, DUAL)
    if method == "affine" or (method == "auto" and has_affine):
        if not has_affine:
            raise ValueError(f"no affine chart available for connection {conn!r}")
        return _affine_path(model, pc, qc, conn, steps)

    guesses = [np.array(v_guess, dtype=float) if v_guess is not None else qc - pc]
    if has_affine:
        guesses.append(affine_velocity(model, pc, qc, conn))
    best_err: Optional[ConvergenceError] = None
    for guess in guesses:
        try:
            v0, res, iters = shoot(model, pc, qc, conn, guess, tol, steps)
            break
        except ConvergenceError as exc:
            if best_err is None or exc.residual < best_err.residual:
                best_err = exc
    else:
        hint = "; an affine-chart path is available (method='affine')" if has_affine else ""
        raise ConvergenceError(f"geodesic BVP failed: {best_err}{hint}", best_err.residual)
    # refine until the endpoint is stable under step doubling
    while steps < MAX_STEPS:
        try:
            fine_miss = float(np.linalg.norm(_ivp_endpoint(model, pc, v0, conn, 2 * steps) - qc))
        except (ChartBoundaryError, DegenerateMetricError):
            fine_miss = np.inf
        if fine_miss <= max(10.0 * tol * (1.0 + float(np.linalg.norm(qc))), 2.0 * res):
            break
        steps *= 2
        v0, res, more = shoot(model, pc, qc, conn, v0, tol, steps)
        iters += more
    path = geodesic_ivp(model, pc, v0, conn, 1.0, steps)
    return GeodesicPath(
        connection=conn,
        t=path.t,
        points=path.points,
        velocities=path.velocities,
        chart_id=model.chart_id,
        steps=steps,
        residual=path.residual,
        method="shooting",
        endpoint_error=float(np.linalg.norm(path.points[-1] - qc)),
        iterations=iters,
        model=model,
        dense=path.dense,
    )


def exp_map(
    model: ManifoldModel,
    x: PointLike,
    v: VectorLike,
    connection: str = PRIMAL,
    steps: Optional[int] = None,
    tol: float = 1e-10,
) -> ChartPoint:
    """Endpoint at ``t = 1`` of the geodesic with initial data ``(x, v)``.

    With ``steps=None`` the RK4 step count starts at the default and doubles
    until two successive endpoints agree to ``tol`` (relative to the endpoint
    size); the finer endpoint is returned.
    """
    if steps is not None:
        return geodesic_ivp(model, x, v, connection, 1.0, steps).q
    conn = connection_tag(connection)
    xc, vc = _base_and_components(model, x, v)
    n = DEFAULT_STEPS
    coarse = _ivp_endpoint(model, xc, vc, conn, n)
    while True:
        n *= 2
        fine = _ivp_endpoint(model, xc, vc, conn, n)
        if np.linalg.norm(fine - coarse) <= tol * (1.0 + np.linalg.norm(fine)) or n >= MAX_STEPS:
            return ChartPoint(fine, model.chart_id)
        coarse = fine


def inverse_exp(
    model: ManifoldModel,
    q: PointLike,
    p: PointLike,
    connection: str = PRIMAL,
    method: str = "auto",
    tol: float = 1e-10,
) -> TangentVector:
    """Difference vector at ``q`` pointing to ``p``: initial velocity of the geodesic ``q -> p``."""
    path = geodesic_bvp(model, q, p, connection, tol=tol, method=method)
    return TangentVector(path.p, path.velocities[0])


def project_structure(model: ManifoldModel, path: Union[Curve, GeodesicPath], t: float) -> CurveProjection:
    """Induced ``g_gamma``, ``Gamma_gamma`` and ``Gamma*_gamma`` at parameter ``t``.

    ``Gamma_gamma = <x'' + Gamma(x', x'), x'> / g_gamma`` and likewise with
    the dual symbols.
    """
    curve = path.as_curve() if isinstance(path, GeodesicPath) else path
    x = curve.at(t)
    model.check_domain(x)
    v = curve.velocity(t)
    a = curve.acceleration(t)
    G = model.metric(x)
    g = float(v @ G @ v)
    if not g > 0:
        raise StationaryCurveError(f"stationary curve: g_gamma = {g} at t={t}")
    base = float(a @ G @ v)
    prim = float(np.einsum("ijk,i,j,k->", model.lower_symbols(x, PRIMAL), v, v, v))
    dual = float(np.einsum("ijk,i,j,k->", model.lower_symbols(x, DUAL), v, v, v))
    return CurveProjection(g, (base + prim) / g, (base + dual) / g)


__all__ = [
    "Curve",
    "CurveProjection",
    "GeodesicPath",
    "LEVI_CIVITA",
    "exp_map",
    "geodesic_bvp",
    "geodesic_ivp",
    "inverse_exp",
    "project_structure",
    "rk4",
]
