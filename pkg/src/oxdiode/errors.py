"""Exception hierarchy. CLI exit codes map onto these classes."""


class OxDiodeError(Exception):
    """Base class for all package errors."""


class DomainError(OxDiodeError, ValueError):
    """An input lies outside the supported physical range."""


class ConfigurationError(OxDiodeError, ValueError):
    """Invalid device, mesh, solver or run configuration."""


class ConvergenceError(OxDiodeError, RuntimeError):
    """A nonlinear solve failed to converge.

    Carries the residual history and the bias at which the failure happened
    so a continuation driver can retry with a smaller step.
    """

    def __init__(self, message, residual_history=None, bias=None, bias_step=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.bias = bias
        self.bias_step = bias_step


class ExtractionError(OxDiodeError, ValueError):
    """A figure of merit could not be extracted from a curve."""

    def __init__(self, message, reason=None):
        super().__init__(message)
        self.reason = reason
