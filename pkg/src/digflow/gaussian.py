"""Univariate Gaussian family: closed forms used as oracles for the generic code.

Three charts are exposed: ``mu-sigma`` (the default), ``natural``
(``theta = (mu / sigma^2, -1 / (2 sigma^2))``, standard sign convention) and
``expectation`` (``eta = (mu, mu^2 + sigma^2)``).  In ``mu-sigma`` the primal
connection is the exponential (e-) connection and the dual is the mixture
(m-) connection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import ChartBoundaryError, SingularTimeError
from .geodesic import Curve
from .manifold import (
    DUAL,
    PRIMAL,
    ChartPoint,
    DuallyFlatModel,
    FlatStructure,
    ManifoldModel,
    TangentVector,
    connection_tag,
)

MU_SIGMA = "mu-sigma"
NATURAL = "natural"
EXPECTATION = "expectation"


@dataclass(frozen=True)
class GaussianPoint:
    """Normal distribution ``N(mu, sigma^2)`` with ``sigma > 0``."""

    mu: float
    sigma: float

    def __post_init__(self):
        mu, sigma = float(self.mu), float(self.sigma)
        if not (np.isfinite(mu) and np.isfinite(sigma)):
            raise ValueError(f"non-finite Gaussian parameters ({mu}, {sigma})")
        if sigma <= 0.0:
            raise ChartBoundaryError(f"chart boundary: sigma must be positive, got {sigma}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.mu, self.sigma])

    def to_chart_point(self) -> ChartPoint:
        return ChartPoint(self.coords, MU_SIGMA)


GaussianLike = Union[GaussianPoint, ChartPoint, ArrayLike]


def as_gaussian(x: GaussianLike) -> GaussianPoint:
    """Coerce a ``GaussianPoint``, a ``mu-sigma`` ChartPoint or a pair."""
    if isinstance(x, GaussianPoint):
        return x
    if isinstance(x, ChartPoint):
        if x.chart_id != MU_SIGMA:
            raise ValueError(f"expected a {MU_SIGMA!r} point, got chart {x.chart_id!r}; convert explicitly")
        c = x.coords
    else:
        c = np.asarray(x, dtype=float).reshape(-1)
    if c.shape != (2,):
        raise ValueError(f"expected (mu, sigma), got {c}")
    return GaussianPoint(c[0], c[1])


@dataclass(frozen=True)
class UOParams:
    """Drift/diffusion description ``mu = mu0 + v (t + tau)``, ``sigma^2 = 2 d (t + tau)``."""

    mu0: float
    v: float
    d: float
    tau: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"diffusion coefficient must be positive, got {self.d}")
        if not self.tau > 0:
            raise ValueError(f"time offset must be positive, got {self.tau}")

    def mean(self, t):
        return self.mu0 + self.v * (np.asarray(t, dtype=float) + self.tau)

    def variance(self, t):
        return 2.0 * self.d * (np.asarray(t, dtype=float) + self.tau)


# ---------------------------------------------------------------------------
# metric and connections


def fisher_metric(x: GaussianLike) -> np.ndarray:
    s2 = as_gaussian(x).sigma ** 2
    return np.array([[1.0 / s2, 0.0], [0.0, 2.0 / s2]])


def _check_grid(span: float, nodes: int) -> None:
    if span < 8.0:
        raise ValueError(f"quadrature grid must cover at least mu +/- 8 sigma, got span {span}")
    if nodes < 3:
        raise ValueError("quadrature grid needs at least 3 nodes")


def _score_grid(x: GaussianPoint, nodes: int, span: float):
    """Standardised abscissae, trapezoid weights against the density, scores."""
    z = np.linspace(-span, span, nodes)
    w = np.full(nodes, z[1] - z[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    w = w * np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
    s = x.sigma
    score = np.stack([z / s, (z**2 - 1.0) / s])
    hess = np.empty((2, 2, nodes))
    hess[0, 0] = -1.0 / s**2
    hess[0, 1] = hess[1, 0] = -2.0 * z / s**2
    hess[1, 1] = (1.0 - 3.0 * z**2) / s**2
    return w, score, hess


def _flag_resolution(fine: np.ndarray, coarse: np.ndarray, scale: float, what: str) -> None:
    gap = float(np.max(np.abs(fine - coarse)))
    if gap > 1e-8 * scale:
        warnings.warn(f"{what}: quadrature grid under-resolved (two-resolution gap {gap:.2e})", RuntimeWarning)


def fisher_metric_by_quadrature(x: GaussianLike, nodes: int = 201, span: float = 8.0) -> np.ndarray:
    """Fisher metric as the expected outer product of the score.

    Trapezoid rule on ``mu +/- span*sigma``; the result is compared with a
    half-resolution grid and a ``RuntimeWarning`` is raised when they differ.
    """
    _check_grid(span, nodes)
    g = as_gaussian(x)

    def integrate(n):
        w, score, _ = _score_grid(g, n, span)
        return np.einsum("m,im,jm->ij", w, score, score)

    fine = integrate(nodes)
    _flag_resolution(fine, integrate(nodes // 2 + 1), np.max(np.abs(fine)), "Fisher metric")
    return fine


def connection_symbols(x: GaussianLike, which: str = "e") -> np.ndarray:
    """Lower-index e- or m-connection symbols in the ``mu-sigma`` chart."""
    tag = connection_tag(which)
    s3 = as_gaussian(x).sigma ** 3
    out = np.zeros((2, 2, 2))
    if tag == PRIMAL:
        out[0, 1, 0] = out[1, 0, 0] = -2.0 / s3
        out[1, 1, 1] = -6.0 / s3
    elif tag == DUAL:
        out[0, 0, 1] = 2.0 / s3
        out[1, 1, 1] = 2.0 / s3
    else:
        raise ValueError(f"connection {which!r} has no closed form here; use 'e' or 'm'")
    return out


def connection_symbols_by_quadrature(
    x: GaussianLike, which: str = "e", nodes: int = 201, span: float = 8.0
) -> np.ndarray:
    """Connection symbols from expectations of score products.

    e-connection: ``E[(d_i d_j l) d_k l]``; m-connection adds ``d_i l d_j l``
    inside the bracket.
    """
    _check_grid(span, nodes)
    tag = connection_tag(which)
    if tag not in (PRIMAL, DUAL):
        raise ValueError(f"unsupported connection {which!r}")
    g = as_gaussian(x)

    def integrate(n):
        w, score, hess = _score_grid(g, n, span)
        inner = hess.copy()
        if tag == DUAL:
            inner = inner + np.einsum("im,jm->ijm", score, score)
        return np.einsum("m,ijm,km->ijk", w, inner, score)

    fine = integrate(nodes)
    _flag_resolution(fine, integrate(nodes // 2 + 1), np.max(np.abs(fine)), "connection symbols")
    return fine


def metric_derivative(x: GaussianLike) -> np.ndarray:
    """``dg[k, i, j] = d_k g_ij``; only the sigma-derivative is nonzero."""
    s3 = as_gaussian(x).sigma ** 3
    out = np.zeros((2, 2, 2))
    out[1, 0, 0] = -2.0 / s3
    out[1, 1, 1] = -4.0 / s3
    return out


def geodesic_system_residual(x: ArrayLike, v: ArrayLike, a: ArrayLike) -> np.ndarray:
    """Residual of the explicit e-geodesic system in ``mu-sigma``.

    ``mu'' - 4 mu' sigma' / sigma`` and ``sigma'' - 3 sigma'^2 / sigma``.
    """
    x, v, a = (np.asarray(u, dtype=float) for u in (x, v, a))
    sigma = x[..., 1]
    r_mu = a[..., 0] - 4.0 * v[..., 0] * v[..., 1] / sigma
    r_sigma = a[..., 1] - 3.0 * v[..., 1] ** 2 / sigma
    return np.stack([r_mu, r_sigma], axis=-1)


# ---------------------------------------------------------------------------
# geodesics


def _e_parts(p1: GaussianPoint, p2: GaussianPoint, t):
    s1, s2 = p1.sigma**2, p2.sigma**2
    t = np.asarray(t, dtype=float)
    A = s2 + (s1 - s2) * t
    return s1, s2, A


def e_geodesic(p1: GaussianLike, p2: GaussianLike, t: float) -> GaussianPoint:
    """Point at parameter ``t`` of the e-geodesic from ``p1`` to ``p2``."""
    a, b = as_gaussian(p1), as_gaussian(p2)
    s1, s2, A = _e_parts(a, b, t)
    mu = (a.mu * s2 * (1.0 - t) + b.mu * s1 * t) / A
    return GaussianPoint(mu, a.sigma * b.sigma / np.sqrt(A))


def e_geodesic_velocity(p1: GaussianLike, p2: GaussianLike, t: float) -> TangentVector:
    """Exact derivative of :func:`e_geodesic` with respect to ``t``."""
    a, b = as_gaussian(p1), as_gaussian(p2)
    s1, s2, A = _e_parts(a, b, t)
    dmu = s1 * s2 * (b.mu - a.mu) / A**2
    dsigma = -0.5 * a.sigma * b.sigma * (s1 - s2) * A**-1.5
    return TangentVector(e_geodesic(a, b, t).to_chart_point(), [dmu, dsigma])


def e_geodesic_acceleration(p1: GaussianLike, p2: GaussianLike, t: float) -> np.ndarray:
    a, b = as_gaussian(p1), as_gaussian(p2)
    s1, s2, A = _e_parts(a, b, t)
    B = s1 - s2
    ddmu = -2.0 * s1 * s2 * (b.mu - a.mu) * B / A**3
    ddsigma = 0.75 * a.sigma * b.sigma * B**2 * A**-2.5
    return np.array([ddmu, ddsigma])


def e_geodesic_curve(p1: GaussianLike, p2: GaussianLike) -> Curve:
    """The e-geodesic as a :class:`Curve` with analytic derivatives."""
    a, b = as_gaussian(p1), as_gaussian(p2)
    return Curve(
        position=lambda t: e_geodesic(a, b, t).coords,
        velocity_fn=lambda t: e_geodesic_velocity(a, b, t).components.copy(),
        acceleration_fn=lambda t: e_geodesic_acceleration(a, b, t),
        chart_id=MU_SIGMA,
    )


def printed_e_geodesic_velocity(p1: GaussianLike, p2: GaussianLike, t: float) -> np.ndarray:
    """The velocity field as typeset in the source derivation.

    Its sigma-component carries an extra factor ``2 / A`` relative to the
    derivative of :func:`e_geodesic`; kept only so the discrepancy can be shown.
    """
    a, b = as_gaussian(p1), as_gaussian(p2)
    s1, s2, A = _e_parts(a, b, t)
    pre = a.sigma * b.sigma / A**2
    return pre * np.array([(b.mu - a.mu) * a.sigma * b.sigma, (s2 - s1) / np.sqrt(A)])


def printed_terminal_velocity(p1: GaussianLike, p2: GaussianLike, t: float) -> np.ndarray:
    """Typeset terminal velocity of the sub-geodesic from ``p1`` to ``e_geodesic(t)``."""
    return float(t) * printed_e_geodesic_velocity(p1, p2, t)


def m_geodesic(p1: GaussianLike, p2: GaussianLike, t: float) -> GaussianPoint:
    """Point of the m-geodesic: a straight line in expectation coordinates."""
    a, b = as_gaussian(p1), as_gaussian(p2)
    e = (1.0 - t) * expectation_coords(a).coords + t * expectation_coords(b).coords
    return from_expectation(e)


# ---------------------------------------------------------------------------
# divergence and gradient


def closed_form_divergence(p1: GaussianLike, p2: GaussianLike, constant: float = -0.5) -> float:
    """Canonical divergence ``D(p1, p2)``, i.e. ``KL(N(p2) || N(p1))``.

    Evaluated as ``dmu^2 / (2 s1^2) + (u - log1p(u)) / 2`` with
    ``u = (s2^2 - s1^2) / s1^2``, which keeps the quadratic behaviour near the
    diagonal.  ``constant`` replaces the additive ``-1/2``; any other value
    breaks ``D(p, p) = 0``.
    """
    a, b = as_gaussian(p1), as_gaussian(p2)
    u = (b.sigma - a.sigma) * (b.sigma + a.sigma) / a.sigma**2
    value = (a.mu - b.mu) ** 2 / (2.0 * a.sigma**2) + 0.5 * (u - np.log1p(u))
    return float(value + (constant + 0.5))


def divergence_gradient_closed_form(p1: GaussianLike, x: GaussianLike) -> np.ndarray:
    """Riemannian gradient of ``D(p1, .)`` at ``x``."""
    a, g = as_gaussian(p1), as_gaussian(x)
    ratio = g.sigma**2 / a.sigma**2
    return np.array([ratio * (g.mu - a.mu), 0.5 * g.sigma * (ratio - 1.0)])


def tangent_dynamics_rhs(p1: GaussianLike, x: GaussianLike, t: float) -> TangentVector:
    """Right-hand side of the Gaussian gradient flow, ``grad D_{p1}(x) / t``."""
    if not t > 0:
        raise SingularTimeError(f"singular time: the flow is undefined at t={t}")
    g = as_gaussian(x)
    return TangentVector(g.to_chart_point(), divergence_gradient_closed_form(p1, g) / t)


def tangent_dynamics_solution(p1: GaussianLike, p2: GaussianLike, t: float) -> GaussianPoint:
    """Integrated Gaussian gradient flow started at ``p1`` and reaching ``p2``."""
    a, b = as_gaussian(p1), as_gaussian(p2)
    s1, s2, A = _e_parts(a, b, t)
    mu = (a.mu * s2 - t * (a.mu * s2 - b.mu * s1)) / A
    return GaussianPoint(mu, a.sigma * b.sigma / np.sqrt(A))


# ---------------------------------------------------------------------------
# affine charts


def natural_coords(x: GaussianLike) -> ChartPoint:
    g = as_gaussian(x)
    s2 = g.sigma**2
    return ChartPoint([g.mu / s2, -0.5 / s2], NATURAL)


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, ChartPoint):
        if theta.chart_id != NATURAL:
            raise ValueError(f"expected natural coordinates, got chart {theta.chart_id!r}")
        return theta.coords
    return np.asarray(theta, dtype=float).reshape(-1)


def from_natural(theta: Union[ChartPoint, ArrayLike]) -> GaussianPoint:
    """Inverse of :func:`natural_coords`; requires ``theta[1] < 0``."""
    t = _theta_array(theta)
    if not t[1] < 0:
        raise ChartBoundaryError(f"chart boundary: natural coordinate theta2={t[1]} must be negative")
    return GaussianPoint(-t[0] / (2.0 * t[1]), (-2.0 * t[1]) ** -0.5)


def expectation_coords(x: GaussianLike) -> ChartPoint:
    g = as_gaussian(x)
    return ChartPoint([g.mu, g.mu**2 + g.sigma**2], EXPECTATION)


def from_expectation(eta: Union[ChartPoint, ArrayLike]) -> GaussianPoint:
    if isinstance(eta, ChartPoint):
        if eta.chart_id != EXPECTATION:
            raise ValueError(f"expected expectation coordinates, got chart {eta.chart_id!r}")
        e = eta.coords
    else:
        e = np.asarray(eta, dtype=float).reshape(-1)
    var = e[1] - e[0] ** 2
    if not var > 0:
        raise ChartBoundaryError(f"chart boundary: eta2 - eta1^2 = {var} must be positive")
    return GaussianPoint(e[0], np.sqrt(var))


def theta_jacobian(x: ArrayLike) -> np.ndarray:
    """``d theta / d (mu, sigma)``."""
    mu, s = float(x[0]), float(x[1])
    return np.array([[1.0 / s**2, -2.0 * mu / s**3], [0.0, 1.0 / s**3]])


def eta_jacobian(x: ArrayLike) -> np.ndarray:
    mu, s = float(x[0]), float(x[1])
    return np.array([[1.0, 0.0], [2.0 * mu, 2.0 * s]])


# ---------------------------------------------------------------------------
# potential and models


def _psi(t):
    a, b = t[0], t[1]
    return float(-(a**2) / (4.0 * b) - 0.5 * np.log(-2.0 * b) + 0.5 * np.log(2.0 * np.pi))


def _psi_grad(t):
    a, b = t[0], t[1]
    return np.array([-a / (2.0 * b), a**2 / (4.0 * b**2) - 0.5 / b])


def _psi_hess(t):
    a, b = t[0], t[1]
    off = a / (2.0 * b**2)
    return np.array([[-0.5 / b, off], [off, -(a**2) / (2.0 * b**3) + 0.5 / b**2]])


def _psi_third(t):
    a, b = t[0], t[1]
    out = np.empty((2, 2, 2))
    out[0, 0, 0] = 0.0
    out[0, 0, 1] = out[0, 1, 0] = out[1, 0, 0] = 0.5 / b**2
    out[0, 1, 1] = out[1, 0, 1] = out[1, 1, 0] = -a / b**3
    out[1, 1, 1] = 1.5 * a**2 / b**4 - 1.0 / b**3
    return out


def _eta_to_theta(e):
    var = e[1] - e[0] ** 2
    if not var > 0:
        raise ChartBoundaryError(f"chart boundary: eta2 - eta1^2 = {var} must be positive")
    return np.array([e[0] / var, -0.5 / var])


def gaussian_potential() -> DuallyFlatModel:
    """Log-partition function of the Gaussian family in natural coordinates."""
    return DuallyFlatModel(
        dim=2,
        potential=_psi,
        potential_gradient=_psi_grad,
        potential_hessian=_psi_hess,
        potential_third=_psi_third,
        domain=lambda t: bool(t[1] < 0),
        eta_domain=lambda e: bool(e[1] - e[0] ** 2 > 0),
        theta_start=np.array([0.0, -0.5]),
        gradient_inverse=_eta_to_theta,
        name="gaussian1d",
    )


def _ms_metric(x):
    s2 = x[1] * x[1]
    return np.array([[1.0 / s2, 0.0], [0.0, 2.0 / s2]])


def _ms_symbols(x, connection):
    s3 = x[1] ** 3
    out = np.zeros((2, 2, 2))
    if connection == PRIMAL:
        out[0, 1, 0] = out[1, 0, 0] = -2.0 / s3
        out[1, 1, 1] = -6.0 / s3
    else:
        out[0, 0, 1] = 2.0 / s3
        out[1, 1, 1] = 2.0 / s3
    return out


def _ms_acceleration(x, v, connection):
    s, dm, ds = x[1], v[0], v[1]
    if connection == PRIMAL:
        return np.array([4.0 * dm * ds / s, 3.0 * ds * ds / s])
    if connection == DUAL:
        return np.array([0.0, -(dm * dm + ds * ds) / s])
    return np.array([2.0 * dm * ds / s, (ds * ds - 0.5 * dm * dm) / s])


def _ms_metric_derivative(x):
    s3 = x[1] ** 3
    out = np.zeros((2, 2, 2))
    out[1, 0, 0] = -2.0 / s3
    out[1, 1, 1] = -4.0 / s3
    return out


def _ms_from_theta(t):
    if not t[1] < 0:
        raise ChartBoundaryError(f"chart boundary: natural coordinate theta2={t[1]} must be negative")
    return np.array([-t[0] / (2.0 * t[1]), (-2.0 * t[1]) ** -0.5])


def _ms_from_eta(e):
    var = e[1] - e[0] ** 2
    if not var > 0:
        raise ChartBoundaryError(f"chart boundary: eta2 - eta1^2 = {var} must be positive")
    return np.array([e[0], np.sqrt(var)])


def gaussian_model(chart: str = MU_SIGMA) -> ManifoldModel:
    """Gaussian family as a :class:`ManifoldModel` in the requested chart."""
    potential = gaussian_potential()
    if chart == NATURAL:
        return potential.theta_chart(NATURAL, name="gaussian1d")
    if chart == EXPECTATION:
        return potential.eta_chart(EXPECTATION, name="gaussian1d")
    if chart != MU_SIGMA:
        raise ValueError(f"unknown Gaussian chart {chart!r}; expected one of {MU_SIGMA}, {NATURAL}, {EXPECTATION}")
    flat = FlatStructure(
        potential,
        to_theta=lambda x: np.array([x[0] / x[1] ** 2, -0.5 / x[1] ** 2]),
        from_theta=_ms_from_theta,
        theta_jacobian=theta_jacobian,
        to_eta_map=lambda x: np.array([x[0], x[0] ** 2 + x[1] ** 2]),
        from_eta_map=_ms_from_eta,
    )
    return ManifoldModel(
        dim=2,
        metric=_ms_metric,
        symbols=_ms_symbols,
        chart_id=MU_SIGMA,
        metric_derivative=_ms_metric_derivative,
        domain=lambda x: bool(x[1] > 0),
        flat=flat,
        name="gaussian1d",
        geodesic_acceleration=_ms_acceleration,
    )


# ---------------------------------------------------------------------------
# drift-diffusion reading of the e-geodesic


def _uo_inputs(theta0, tau, theta1_q):
    t0 = _theta_array(theta0)
    if t0[1] == 0:
        raise ValueError("theta2(0) must be nonzero")
    if not t0[1] < 0:
        raise ChartBoundaryError(
            f"chart boundary: theta2(0)={t0[1]} must be negative under the standard sign convention"
        )
    if not tau > 0:
        raise ValueError(f"time offset must be positive, got {tau}")
    tq1 = t0[0] if theta1_q is None else float(theta1_q)
    return t0, float(tau), tq1


def uo_params(theta0: Union[ChartPoint, ArrayLike], tau: float, theta1_q: Optional[float] = None) -> UOParams:
    """Drift-diffusion constants of the rescaled e-geodesic toward ``theta_q``.

    The target has ``theta_q = (theta1_q, 0)``; ``theta1_q`` defaults to
    ``theta0[0]``.  The rescaled curve is
    ``theta(t) = theta0 + t / (t + tau) * (theta_q - theta0)``.
    """
    t0, tau, tq1 = _uo_inputs(theta0, tau, theta1_q)
    mu0 = -(t0[0] - tq1) / (2.0 * t0[1])
    v = -tq1 / (2.0 * tau * t0[1])
    d = -1.0 / (4.0 * tau * t0[1])
    return UOParams(mu0=mu0, v=v, d=d, tau=tau)


def uo_rescaled_geodesic(
    theta0: Union[ChartPoint, ArrayLike], tau: float, t: float, theta1_q: Optional[float] = None
) -> GaussianPoint:
    """Point at time ``t`` of the rescaled e-geodesic used by :func:`uo_params`."""
    t0, tau, tq1 = _uo_inputs(theta0, tau, theta1_q)
    target = np.array([tq1, 0.0])
    w = t / (t + tau)
    return from_natural(t0 + w * (target - t0))
