"""Exception hierarchy shared by every digflow module."""

from __future__ import annotations


class DigflowError(Exception):
    """Base class for all library errors."""


class ChartMismatchError(DigflowError):
    """A point or vector was handed to a model living in a different chart."""


class ChartBoundaryError(DigflowError):
    """A computation left the coordinate domain of the chart."""


class DegenerateMetricError(DigflowError):
    """The metric evaluated to a matrix that is not symmetric positive definite."""


class FlatDirectionError(DigflowError):
    """The potential Hessian is singular, so the Legendre map is not invertible."""


class ConvergenceError(DigflowError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class StationaryCurveError(DigflowError):
    """The curve has zero speed on a segment, so its projected connection is undefined."""


class SingularTimeError(DigflowError):
    """The weighted dynamics were evaluated at t <= 0."""
