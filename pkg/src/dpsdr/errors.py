"""Exception types raised by the estimation pipeline.

All of these derive from :class:`EstimationError`, so callers that sweep a
grid of query points can catch one class and record the failure per point.
"""


class EstimationError(Exception):
    """Base class for recoverable estimation failures."""


class DegenerateNeighborhood(EstimationError):
    """Total kernel mass at the query point is below the weight floor.

    Signals that the query lies outside (or on the far fringe of) the data
    support for the current bandwidth.
    """


class EmptySliceAtQuery(EstimationError):
    """A response slice has almost no kernel mass at the query point.

    Slice-conditional means divide by the slice probability, so estimates
    built from such a slice would be unstable.
    """


class SingularCovariance(EstimationError):
    """Local covariance is singular even after ridge regularization."""


class SliceTooSmall(EstimationError):
    """A slice has too few members for leave-one-out covariance estimation."""


class AllCellsInvalid(EstimationError):
    """No (slice, bandwidth) cell produced a usable cross-validation score."""
