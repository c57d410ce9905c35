"""Exception hierarchy; every failure class maps to a CLI exit code."""
from typing import Any, Dict, Optional

from dotbench.core.config import EXIT_CAPACITY, EXIT_CERTIFICATE, EXIT_CONFIG, EXIT_CONVERGENCE


class DotBenchError(Exception):
    """Base error carrying an exit code and structured context."""

    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context: Dict[str, Any] = dict(context or {})

    def annotate(self, **extra: Any) -> "DotBenchError":
        """Attach extra context (e.g. the failing level) and return self."""
        self.context.update(extra)
        return self


class ConfigError(DotBenchError):
    """Invalid configuration: unknown kinds, malformed files, bad parameters."""
    exit_code = EXIT_CONFIG


class DomainError(ConfigError):
    """Argument outside a function's domain."""


class UnsupportedDivergenceError(ConfigError):
    """Requested quantity has no certificate for this divergence kind."""


class ValidationError(ConfigError):
    """Shape, dimension or feasibility mismatch in the inputs."""


class ConvergenceError(DotBenchError):
    """Iterative method hit its iteration limit."""
    exit_code = EXIT_CONVERGENCE

    def __init__(self, message: str, residual: float, iterations: int,
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.residual = residual
        self.iterations = iterations
        self.context.setdefault('residual', residual)
        self.context.setdefault('iterations', iterations)


class NumericError(DotBenchError):
    """Numerical breakdown, e.g. a root bracket that never closes."""
    exit_code = EXIT_CONVERGENCE


class CapacityError(DotBenchError):
    """Configured size limit exceeded."""
    exit_code = EXIT_CAPACITY


class CertificateError(DotBenchError):
    """A certified property failed to hold."""
    exit_code = EXIT_CERTIFICATE
