"""
Exception hierarchy for the workbench.

The CLI maps these onto exit statuses: ToleranceError -> 1,
ConfigError -> 2, every other WorkbenchError -> 1.
"""

from typing import Optional


class WorkbenchError(Exception):
    """Base class for all workbench failures."""

    error_code: str = "workbench_error"
    run_id: Optional[str] = None


class DomainError(WorkbenchError, ValueError):
    """A precondition of an operation does not hold."""

    error_code = "domain_error"


class ResourceLimitError(WorkbenchError):
    """A configured budget (memory, coefficients, frames, desk caps) is exceeded."""

    error_code = "resource_limit"


class ConvergenceError(WorkbenchError):
    """A numerical procedure failed to reach its tolerance within budget."""

    error_code = "convergence_failure"


class ToleranceError(WorkbenchError):
    """An asserted residual lies outside its tolerance."""

    error_code = "tolerance_violation"

    def __init__(self, residual: str, value: float, tolerance: float):
        self.residual = residual
        self.value = value
        self.tolerance = tolerance
        super().__init__(f"residual '{residual}' = {value:.3e} exceeds tolerance {tolerance:.3e}")


class ConfigError(WorkbenchError):
    """Malformed configuration input."""

    error_code = "config_error"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
