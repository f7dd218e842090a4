"""Statistical manifolds in a chart.

A :class:`ManifoldModel` carries the metric ``g_ij`` and the lower-index
symbols ``Gamma_{ij,k} = g(nabla_i d_j, d_k)`` of a primal connection and its
dual.  A :class:`DuallyFlatModel` is the potential description (``Psi`` on the
affine chart ``theta``) from which both flat charts are generated.

Symbols are always stored lower-index with layout ``array[i, j, k]``; the last
axis is the lowered one.  Raising uses ``Gamma^h_ij = g^{hk} Gamma_{ij,k}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    ChartBoundaryError,
    ChartMismatchError,
    ConvergenceError,
    DegenerateMetricError,
    FlatDirectionError,
)

PRIMAL = "primal"
DUAL = "dual"
LEVI_CIVITA = "levi-civita"

_CONNECTION_ALIASES = {
    "primal": PRIMAL,
    "nabla": PRIMAL,
    "e": PRIMAL,
    "dual": DUAL,
    "nabla*": DUAL,
    "m": DUAL,
    "levi-civita": LEVI_CIVITA,
    "lc": LEVI_CIVITA,
}

_EPS = np.finfo(float).eps


def central_difference(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """``out[k] = d_k f(x)`` by the five-point central stencil (O(h^4)).

    The default step per coordinate is ``eps^(1/3) * (|x_k| + 1)``.
    """
    n = x.size
    rows = []
    for k in range(n):
        step = h if h is not None else _EPS ** (1 / 3) * (abs(x[k]) + 1.0)
        e = np.zeros(n)
        e[k] = step
        fp1, fm1 = np.asarray(f(x + e), dtype=float), np.asarray(f(x - e), dtype=float)
        fp2, fm2 = np.asarray(f(x + 2 * e), dtype=float), np.asarray(f(x - 2 * e), dtype=float)
        rows.append((8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step))
    return np.array(rows)


def connection_tag(tag: str) -> str:
    """Normalise a connection name (``primal``/``dual`` plus common aliases)."""
    try:
        return _CONNECTION_ALIASES[str(tag).lower()]
    except KeyError:
        raise ValueError(f"unknown connection {tag!r}; expected 'primal' or 'dual'") from None


def other_connection(tag: str) -> str:
    tag = connection_tag(tag)
    if tag == LEVI_CIVITA:
        return LEVI_CIVITA
    return DUAL if tag == PRIMAL else PRIMAL


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Coordinates of a point together with the name of their chart."""

    coords: np.ndarray
    chart_id: str

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError(f"non-finite coordinates {c}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ChartPoint):
            return NotImplemented
        return self.chart_id == other.chart_id and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.chart_id, self.coords.tobytes()))

    def __repr__(self):
        return f"ChartPoint({self.coords.tolist()}, chart_id={self.chart_id!r})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Components of a tangent vector at ``base`` in the chart of ``base``."""

    base: ChartPoint
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float).reshape(-1)
        if c.shape != self.base.coords.shape:
            raise ValueError(f"vector of dimension {c.size} at a point of dimension {self.base.dim}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def chart_id(self) -> str:
        return self.base.chart_id

    def __repr__(self):
        return f"TangentVector({self.components.tolist()}, base={self.base.coords.tolist()}, chart_id={self.chart_id!r})"


PointLike = Union[ChartPoint, ArrayLike]
VectorLike = Union[TangentVector, ArrayLike]


@dataclass(frozen=True, eq=False)
class FlatStructure:
    """Link from a model's chart to the affine chart of a dually flat potential.

    ``theta_jacobian(x)`` is ``d theta / d x``.  The dual affine chart is
    reached through the potential gradient, ``eta = grad Psi(theta)``.
    """

    potential: "DuallyFlatModel"
    to_theta: Callable[[np.ndarray], np.ndarray]
    from_theta: Callable[[np.ndarray], np.ndarray]
    theta_jacobian: Callable[[np.ndarray], np.ndarray]
    to_eta_map: Optional[Callable[[np.ndarray], np.ndarray]] = None
    from_eta_map: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def to_eta(self, x: np.ndarray) -> np.ndarray:
        if self.to_eta_map is not None:
            return np.asarray(self.to_eta_map(x), dtype=float)
        return np.asarray(self.potential.potential_gradient(self.to_theta(x)), dtype=float)

    def from_eta(self, eta: np.ndarray) -> np.ndarray:
        if self.from_eta_map is not None:
            return np.asarray(self.from_eta_map(eta), dtype=float)
        return np.asarray(self.from_theta(self.potential.theta_from_eta(eta)), dtype=float)

    def eta_jacobian(self, x: np.ndarray) -> np.ndarray:
        theta = self.to_theta(x)
        return self.potential.potential_hessian(theta) @ self.theta_jacobian(x)


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    """A statistical manifold ``(M, g, nabla, nabla*)`` in one chart.

    ``symbols(x, connection)`` returns the lower-index array ``Gamma_{ij,k}``
    for ``connection`` in ``{"primal", "dual"}``.  ``metric_derivative(x)``, if
    given, returns ``dg[k, i, j] = d_k g_ij``; otherwise central differences are
    used.  ``flat`` links the chart to a dually flat potential when one exists.
    ``geodesic_acceleration(x, v, connection)`` is an optional closed form of
    :meth:`acceleration` used by the integrators.
    """

    dim: int
    metric: Callable[[np.ndarray], np.ndarray]
    symbols: Callable[[np.ndarray, str], np.ndarray]
    chart_id: str
    metric_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    flat: Optional[FlatStructure] = None
    name: str = ""
    geodesic_acceleration: Optional[Callable[[np.ndarray, np.ndarray, str], np.ndarray]] = None

    def coords(self, x: PointLike) -> np.ndarray:
        """Coordinates of ``x`` in this chart; refuses points from other charts."""
        if isinstance(x, TangentVector):
            raise TypeError("expected a point, got a tangent vector")
        if isinstance(x, ChartPoint):
            if x.chart_id != self.chart_id:
                raise ChartMismatchError(
                    f"point in chart {x.chart_id!r} given to a model in chart {self.chart_id!r}"
                )
            c = np.array(x.coords, dtype=float)
        else:
            c = np.array(x, dtype=float).reshape(-1)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError(f"non-finite coordinates {c}")
        self.check_domain(c)
        return c

    def components(self, v: VectorLike) -> np.ndarray:
        if isinstance(v, TangentVector):
            if v.chart_id != self.chart_id:
                raise ChartMismatchError(
                    f"vector in chart {v.chart_id!r} given to a model in chart {self.chart_id!r}"
                )
            return np.array(v.components, dtype=float)
        c = np.array(v, dtype=float).reshape(-1)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} components, got {c.size}")
        return c

    def check_domain(self, c: np.ndarray) -> None:
        if self.domain is not None and not self.domain(c):
            raise ChartBoundaryError(f"chart boundary: {c.tolist()} lies outside chart {self.chart_id!r}")

    def point(self, c: ArrayLike) -> ChartPoint:
        return ChartPoint(c, self.chart_id)

    def vector(self, base: PointLike, components: ArrayLike) -> TangentVector:
        b = base if isinstance(base, ChartPoint) else self.point(base)
        return TangentVector(b, components)

    def lower_symbols(self, c: np.ndarray, connection: str = PRIMAL) -> np.ndarray:
        tag = connection_tag(connection)
        if tag == LEVI_CIVITA:
            return 0.5 * (
                np.asarray(self.symbols(c, PRIMAL), dtype=float)
                + np.asarray(self.symbols(c, DUAL), dtype=float)
            )
        return np.asarray(self.symbols(c, tag), dtype=float)

    def christoffel(self, c: np.ndarray, connection: str = PRIMAL) -> np.ndarray:
        """Raised symbols ``Gamma^h_ij`` as ``array[h, i, j]``."""
        ginv = np.linalg.inv(self.metric(c))
        return np.einsum("hk,ijk->hij", ginv, self.lower_symbols(c, connection))

    def acceleration(self, c: np.ndarray, v: np.ndarray, connection: str = PRIMAL) -> np.ndarray:
        """Geodesic acceleration ``-Gamma^h_ij v^i v^j``."""
        if self.geodesic_acceleration is not None:
            return self.geodesic_acceleration(c, v, connection_tag(connection))
        w = np.einsum("ijk,i,j->k", self.lower_symbols(c, connection), v, v)
        return -np.linalg.solve(self.metric(c), w)

    def metric_gradient(self, c: np.ndarray, h: Optional[float] = None) -> np.ndarray:
        """``dg[k, i, j] = d_k g_ij``, analytic when available and ``h`` is None."""
        if h is None and self.metric_derivative is not None:
            return np.asarray(self.metric_derivative(c), dtype=float)
        return central_difference(self.metric, c, h)


def metric_at(model: ManifoldModel, x: PointLike) -> np.ndarray:
    """Metric matrix at ``x``, symmetrised and checked for positive definiteness."""
    c = model.coords(x)
    G = np.asarray(model.metric(c), dtype=float)
    G = 0.5 * (G + G.T)
    if not np.all(np.isfinite(G)) or np.linalg.eigvalsh(G)[0] <= 0.0:
        raise DegenerateMetricError(f"degenerate metric at {c.tolist()} in chart {model.chart_id!r}")
    return G


def duality_residual(model: ManifoldModel, x: PointLike, h: Optional[float] = None) -> float:
    """Max of ``|d_k g_ij - Gamma_{ki,j} - Gamma*_{kj,i}|`` over all index triples.

    With ``h`` None the model's analytic metric derivative is used when it has
    one; passing ``h`` forces central differences with that step.
    """
    if h is not None and h <= 0:
        raise ValueError("finite-difference step must be positive")
    c = model.coords(x)
    dg = model.metric_gradient(c, h)
    primal = model.lower_symbols(c, PRIMAL)
    dual = model.lower_symbols(c, DUAL)
    return float(np.max(np.abs(dg - primal - dual.transpose(0, 2, 1))))


@dataclass(frozen=True, eq=False)
class DuallyFlatModel:
    """Convex potential ``Psi`` on the primal affine chart ``theta``.

    ``potential_third`` (``d_i d_j d_k Psi``) is optional and falls back to
    central differences of the Hessian.  ``gradient_inverse`` is an optional
    closed form of ``eta -> theta``; without it the inversion is numeric.
    """

    dim: int
    potential: Callable[[np.ndarray], float]
    potential_gradient: Callable[[np.ndarray], np.ndarray]
    potential_hessian: Callable[[np.ndarray], np.ndarray]
    potential_third: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    eta_domain: Optional[Callable[[np.ndarray], bool]] = None
    theta_start: Optional[np.ndarray] = None
    gradient_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def theta(self, theta: PointLike) -> np.ndarray:
        if isinstance(theta, ChartPoint) and theta.chart_id != "natural":
            raise ChartMismatchError(f"expected natural coordinates, got chart {theta.chart_id!r}")
        c = np.array(theta.coords if isinstance(theta, ChartPoint) else theta, dtype=float).reshape(-1)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {c.size}")
        if self.domain is not None and not self.domain(c):
            raise ChartBoundaryError(f"chart boundary: {c.tolist()} outside the potential domain")
        return c

    def eta(self, eta: PointLike) -> np.ndarray:
        if isinstance(eta, ChartPoint) and eta.chart_id != "expectation":
            raise ChartMismatchError(f"expected expectation coordinates, got chart {eta.chart_id!r}")
        c = np.array(eta.coords if isinstance(eta, ChartPoint) else eta, dtype=float).reshape(-1)
        if c.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {c.size}")
        return c

    def dual_potential(self, theta: PointLike) -> float:
        t = self.theta(theta)
        return float(t @ self.potential_gradient(t) - self.potential(t))

    def third_derivative(self, theta: np.ndarray) -> np.ndarray:
        if self.potential_third is not None:
            return np.asarray(self.potential_third(theta), dtype=float)
        out = central_difference(self.potential_hessian, theta)
        # symmetrise over all index permutations
        return (
            out
            + out.transpose(0, 2, 1)
            + out.transpose(1, 0, 2)
            + out.transpose(1, 2, 0)
            + out.transpose(2, 0, 1)
            + out.transpose(2, 1, 0)
        ) / 6.0

    def theta_from_eta(self, eta: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        if self.gradient_inverse is not None:
            return np.asarray(self.gradient_inverse(np.asarray(eta, dtype=float)), dtype=float)
        return invert_dual_coordinates(self, eta, tol=tol).coords.copy()

    def theta_chart(self, chart_id: str = "natural", name: str = "") -> ManifoldModel:
        """Chart in which the primal connection is flat (all primal symbols zero)."""
        n = self.dim

        def symbols(t, connection):
            if connection == PRIMAL:
                return np.zeros((n, n, n))
            return self.third_derivative(t)

        def identity(x):
            return np.array(x, dtype=float)

        flat = FlatStructure(self, identity, identity, lambda x: np.eye(n))
        return ManifoldModel(
            dim=n,
            metric=lambda t: np.asarray(self.potential_hessian(t), dtype=float),
            symbols=symbols,
            chart_id=chart_id,
            metric_derivative=self.third_derivative,
            domain=self.domain,
            flat=flat,
            name=name or self.name,
        )

    def eta_chart(self, chart_id: str = "expectation", name: str = "") -> ManifoldModel:
        """Chart in which the dual connection is flat (all dual symbols zero)."""
        n = self.dim

        def phi_third(e):
            t = self.theta_from_eta(e)
            hi = np.linalg.inv(self.potential_hessian(t))
            return -np.einsum("ia,jb,kc,abc->ijk", hi, hi, hi, self.third_derivative(t))

        def symbols(e, connection):
            if connection == DUAL:
                return np.zeros((n, n, n))
            return phi_third(e)

        flat = FlatStructure(
            self,
            to_theta=lambda e: self.theta_from_eta(e),
            from_theta=lambda t: np.asarray(self.potential_gradient(t), dtype=float),
            theta_jacobian=lambda e: np.linalg.inv(self.potential_hessian(self.theta_from_eta(e))),
            to_eta_map=lambda e: np.array(e, dtype=float),
            from_eta_map=lambda e: np.array(e, dtype=float),
        )
        return ManifoldModel(
            dim=n,
            metric=lambda e: np.linalg.inv(self.potential_hessian(self.theta_from_eta(e))),
            symbols=symbols,
            chart_id=chart_id,
            metric_derivative=phi_third,
            domain=self.eta_domain,
            flat=flat,
            name=name or self.name,
        )


def _check_hessian(H: np.ndarray, theta: np.ndarray) -> None:
    w = np.linalg.eigvalsh(0.5 * (H + H.T))
    if not np.all(np.isfinite(w)) or w[0] <= 0.0 or w[-1] / w[0] > 1e14:
        raise FlatDirectionError(f"flat direction: potential Hessian singular at theta={theta.tolist()}")


def legendre_dual(model: DuallyFlatModel, theta: PointLike) -> Tuple[ChartPoint, float]:
    """Dual coordinates ``eta = grad Psi(theta)`` and ``Phi = theta . eta - Psi``."""
    t = model.theta(theta)
    _check_hessian(np.asarray(model.potential_hessian(t), dtype=float), t)
    eta = np.asarray(model.potential_gradient(t), dtype=float)
    phi = float(t @ eta - model.potential(t))
    return ChartPoint(eta, "expectation"), phi


def invert_dual_coordinates(
    model: DuallyFlatModel,
    eta: PointLike,
    tol: float = 1e-10,
    max_iter: int = 200,
    theta0: Optional[ArrayLike] = None,
) -> ChartPoint:
    """Solve ``grad Psi(theta) = eta`` for ``theta``.

    Newton's method on the strictly convex objective ``Psi(theta) - eta . theta``
    with backtracking that keeps iterates inside the potential domain.
    """
    e = model.eta(eta)
    if theta0 is not None:
        t = np.array(theta0, dtype=float)
    elif model.theta_start is not None:
        t = np.array(model.theta_start, dtype=float)
    else:
        t = np.zeros(model.dim)

    def inside(x):
        return np.all(np.isfinite(x)) and (model.domain is None or bool(model.domain(x)))

    if not inside(t):
        raise ChartBoundaryError(f"chart boundary: starting point {t.tolist()} outside the potential domain")

    def objective(x):
        return float(model.potential(x) - e @ x)

    f = objective(t)
    residual = np.inf
    for _ in range(max_iter):
        r = np.asarray(model.potential_gradient(t), dtype=float) - e
        residual = float(np.linalg.norm(r))
        if residual < tol:
            return ChartPoint(t, "natural")
        H = np.asarray(model.potential_hessian(t), dtype=float)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError:
            break
        alpha = 1.0
        slope = float(r @ step)
        accepted = False
        for _ in range(60):
            cand = t - alpha * step
            if inside(cand):
                fc = objective(cand)
                if np.isfinite(fc) and fc <= f - 1e-4 * alpha * slope:
                    accepted = True
                    break
                # near the root objective differences drown in rounding; the residual still shrinks
                rc = np.linalg.norm(np.asarray(model.potential_gradient(cand)) - e)
                if rc <= (1.0 - 1e-4 * alpha) * residual:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            # objective differences are at rounding level: judge the full step by its residual
            cand = t - step
            if not inside(cand):
                break
            rc = np.linalg.norm(np.asarray(model.potential_gradient(cand)) - e)
            if rc >= residual:
                break
        t = cand
        f = objective(t)
    raise ConvergenceError(
        f"dual coordinate inversion did not converge for eta={e.tolist()} (residual {residual:.3e})",
        residual,
    )


@dataclass(frozen=True)
class StructureRecovery:
    """Finite-difference estimates of ``g``, ``Gamma`` and ``Gamma*`` from a divergence."""

    metric_est: np.ndarray
    symbols_est: np.ndarray
    dual_symbols_est: np.ndarray
    step: float
    error_estimate: float


def _mixed_partials(div, x: np.ndarray, h: float):
    """Return (g, Gamma, Gamma*) from central differences at p = q = x."""
    n = x.size
    eye = np.eye(n) * h

    def second_pp(q, i, j):
        # d_{p_i} d_{p_j} D(p, q) at p = x
        if i == j:
            return (div(x + eye[i], q) - 2 * div(x, q) + div(x - eye[i], q)) / h**2
        return (
            div(x + eye[i] + eye[j], q)
            - div(x + eye[i] - eye[j], q)
            - div(x - eye[i] + eye[j], q)
            + div(x - eye[i] - eye[j], q)
        ) / (4 * h**2)

    def second_qq(p, i, j):
        return second_pp_swapped(p, i, j)

    def second_pp_swapped(p, i, j):
        if i == j:
            return (div(p, x + eye[i]) - 2 * div(p, x) + div(p, x - eye[i])) / h**2
        return (
            div(p, x + eye[i] + eye[j])
            - div(p, x + eye[i] - eye[j])
            - div(p, x - eye[i] + eye[j])
            + div(p, x - eye[i] - eye[j])
        ) / (4 * h**2)

    g = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g[i, j] = -(
                div(x + eye[i], x + eye[j])
                - div(x + eye[i], x - eye[j])
                - div(x - eye[i], x + eye[j])
                + div(x - eye[i], x - eye[j])
            ) / (4 * h**2)
    g = 0.5 * (g + g.T)

    gam = np.empty((n, n, n))
    gam_star = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                val = -(second_pp(x + eye[k], i, j) - second_pp(x - eye[k], i, j)) / (2 * h)
                gam[i, j, k] = gam[j, i, k] = val
                val = -(second_qq(x + eye[k], i, j) - second_qq(x - eye[k], i, j)) / (2 * h)
                gam_star[i, j, k] = gam_star[j, i, k] = val
    return g, gam, gam_star


def recover_structure_from_divergence(
    div: Callable[[np.ndarray, np.ndarray], float],
    x: PointLike,
    h: float = 1e-3,
) -> StructureRecovery:
    """Recover ``(g, nabla, nabla*)`` from a divergence by mixed finite differences.

    ``g_ij = -d_i d'_j D``, ``Gamma_ijk = -d_i d_j d'_k D`` and
    ``Gamma*_ijk = -d'_i d'_j d_k D`` at ``p = q = x``, where unprimed
    derivatives act on the first argument.  The error estimate compares the
    step ``h`` with ``2h`` (both O(h^2)).
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    c = np.array(x.coords if isinstance(x, ChartPoint) else x, dtype=float).reshape(-1)

    def D(p, q):
        return float(div(p, q))

    g, gam, gam_star = _mixed_partials(D, c, h)
    g2, gam2, gam_star2 = _mixed_partials(D, c, 2 * h)
    err = max(
        np.max(np.abs(g - g2)),
        np.max(np.abs(gam - gam2)),
        np.max(np.abs(gam_star - gam_star2)),
    ) / 3.0
    return StructureRecovery(g, gam, gam_star, h, float(err))


def quadratic_potential(n: int) -> DuallyFlatModel:
    """``Psi(theta) = |theta|^2 / 2``: the self-dual Euclidean case."""
    return DuallyFlatModel(
        dim=n,
        potential=lambda t: 0.5 * float(np.dot(t, t)),
        potential_gradient=lambda t: np.array(t, dtype=float),
        potential_hessian=lambda t: np.eye(n),
        potential_third=lambda t: np.zeros((n, n, n)),
        theta_start=np.zeros(n),
        gradient_inverse=lambda e: np.array(e, dtype=float),
        name="euclidean",
    )


def euclidean_model(n: int = 2) -> ManifoldModel:
    """Flat Euclidean space with identity metric and vanishing symbols."""
    return quadratic_potential(n).theta_chart(chart_id="euclidean", name="euclidean")
