"""Exception types shared across the package."""


class EpiconfError(Exception):
    """Base class for all package errors."""


class DomainError(EpiconfError, ValueError):
    """An argument lies outside the domain of the function or model."""


class CapabilityError(EpiconfError):
    """The model does not provide the requested structure."""


class QuadratureError(EpiconfError):
    """Adaptive quadrature did not converge.

    ``estimate`` holds the best value obtained before giving up.
    """

    def __init__(self, message, estimate=float("nan"), error=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BracketError(EpiconfError, ValueError):
    """Root-finding bracket does not contain a sign change."""


class BoundaryMLEError(EpiconfError):
    """The likelihood has no interior maximum for the given data."""


class IntegrabilityError(EpiconfError):
    """The product of prior and likelihood is not integrable on the grid."""


class IntervalError(EpiconfError):
    """A confidence interval with the requested mass cannot be formed."""


class ConfigError(EpiconfError):
    """Invalid experiment configuration."""
