"""Exception and warning types shared across the package."""


class TwinBeamError(Exception):
    """Base class for errors raised by twinbeam."""


class DomainError(TwinBeamError, ValueError):
    """An argument lies outside the domain of the model or estimator."""


class ConditioningError(DomainError):
    """A conditioning value cannot be used (no heralding mass or too few samples)."""


class EstimatorError(DomainError):
    """A moment estimator is undefined for the supplied data."""


class FormatError(TwinBeamError, ValueError):
    """A file or config does not follow the expected format."""


class ClassicalityWarning(UserWarning):
    """The measured correlations are compatible with classical light."""
