"""Built-in model families addressable by name."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

from . import gaussian
from .manifold import ManifoldModel, euclidean_model


@dataclass(frozen=True)
class ModelFamily:
    name: str
    charts: Tuple[str, ...]
    build: Callable[..., ManifoldModel]
    description: str = ""
    parameters: Dict[str, object] = field(default_factory=dict)

    @property
    def default_chart(self) -> str:
        return self.charts[0]


def _euclidean(chart: str, dim: int = 2) -> ManifoldModel:
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    return euclidean_model(dim)


REGISTRY: Dict[str, ModelFamily] = {
    "gaussian1d": ModelFamily(
        "gaussian1d",
        (gaussian.MU_SIGMA, gaussian.NATURAL, gaussian.EXPECTATION),
        lambda chart: gaussian.gaussian_model(chart),
        "univariate normal family with the Fisher metric and e/m connections",
    ),
    "euclidean": ModelFamily(
        "euclidean",
        ("euclidean",),
        _euclidean,
        "flat space with identity metric (self-dual)",
        {"dim": 2},
    ),
}


def build_model(name: str, chart: Optional[str] = None, **params) -> ManifoldModel:
    """Instantiate a registered model in ``chart`` (default: the family's first chart).

    Raises:
        KeyError: unknown model name or chart.
    """
    try:
        family = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(sorted(REGISTRY))}") from None
    chart = chart or family.default_chart
    if chart not in family.charts:
        raise KeyError(f"model {name!r} has no chart {chart!r}; available: {', '.join(family.charts)}")
    unknown = set(params) - set(family.parameters)
    if unknown:
        raise KeyError(f"model {name!r} takes no parameter(s) {', '.join(sorted(unknown))}")
    return family.build(chart, **{**family.parameters, **params})
