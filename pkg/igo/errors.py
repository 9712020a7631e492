"""Exceptions raised by the IGO toolkit."""


class IgoError(Exception):
    """Base class for all toolkit errors."""


class RejectedInput(IgoError, ValueError):
    """Malformed arguments: non-finite values, dimension mismatch, too few samples."""


class WeightNormalizationError(RejectedInput):
    """Weights do not sum to one where a normalized weighting is required."""


class DomainError(IgoError, ValueError):
    """Parameters lie outside the domain of the family."""


class CapabilityError(IgoError):
    """The family does not offer the requested operation at this size."""


class SingularFisher(IgoError):
    """The Fisher matrix cannot be inverted safely."""


class UnreliableFisher(IgoError):
    """Two independent Fisher estimates disagree."""

    def __init__(self, message, mean_eigenvalue=None):
        super().__init__(message)
        self.mean_eigenvalue = mean_eigenvalue


class DegenerateUpdate(IgoError):
    """An update produced parameters outside the family domain."""


class ConfigError(IgoError):
    """Invalid experiment configuration."""
