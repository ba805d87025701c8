"""
Exception hierarchy for kdv5-control.

Every error raised by the toolkit derives from ``Kdv5Error`` and can be
serialized with ``to_dict()`` so the command line harness can report it as
structured JSON together with an exit code.
"""

from typing import Any, Dict, Optional, Tuple, Type


class Kdv5Error(Exception):
    """Base class for all toolkit errors."""

    code = "kdv5_error"
    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.code,
            "type": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class DimensionError(Kdv5Error, ValueError):
    """Array length or grid mismatch."""

    code = "dimension_error"


class DomainError(Kdv5Error, ValueError):
    """Argument outside the domain of an operation."""

    code = "domain_error"


class ResolutionError(Kdv5Error):
    """The control profile cannot be resolved on the available grids."""

    code = "resolution_error"


class DivergenceError(Kdv5Error):
    """A time integration left the bounded regime."""

    code = "divergence_error"


class ConvergenceError(Kdv5Error):
    """A fixed-point or Krylov iteration failed to converge."""

    code = "convergence_error"


class IllConditionedObservabilityError(ConvergenceError):
    """Gramian solve failed; carries an estimate of the smallest eigenvalue."""

    code = "ill_conditioned_observability"

    def __init__(
        self,
        message: str,
        lambda_min: Optional[float] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        details = dict(details or {})
        details["lambda_min"] = lambda_min
        super().__init__(message, details)
        self.lambda_min = lambda_min


class SmallDataViolationError(ConvergenceError):
    """The nonlinear control iteration did not contract."""

    code = "small_data_violation"


class ArtifactError(Kdv5Error):
    """An output file could not be written or an input artifact read."""

    code = "artifact_error"

    def __init__(self, message: str, path: str, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details["path"] = str(path)
        super().__init__(message, details)
        self.path = str(path)


class ConfigError(Kdv5Error):
    """Invalid scenario configuration; ``messages`` are line-precise."""

    code = "config_error"
    exit_code = 2

    def __init__(self, message: str, messages: Optional[list] = None):
        super().__init__(message, {"messages": list(messages or [])})
        self.messages = list(messages or [])


NUMERICAL_ERRORS: Tuple[Type[Kdv5Error], ...] = (
    DimensionError,
    DomainError,
    ResolutionError,
    DivergenceError,
    ConvergenceError,
)
