"""Exception types raised across the package."""


class PriceDiscError(Exception):
    """Base class for all package errors."""


class DomainError(PriceDiscError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class InvariantError(PriceDiscError, RuntimeError):
    """An internal invariant was violated beyond numerical tolerance."""


class LpError(PriceDiscError, RuntimeError):
    """The LP solver reported an unexpected status."""


class NoRobustType(PriceDiscError):
    """No type gives the revenue gap needed to robustify a segment."""


class ProjectionFailed(PriceDiscError):
    """No guessed monopoly price produced an MHR-like candidate."""


class ScheduleError(PriceDiscError, ValueError):
    """The epsilon schedule is infeasible for the instance size."""


class StageError(PriceDiscError):
    """Wraps a failure inside a multi-stage pipeline, naming the stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
