"""Exception hierarchy shared by the co-design toolkit."""

from __future__ import annotations

from typing import Optional


class CodesignError(RuntimeError):
    """Base class for every failure raised by qcodesign."""


class IntegrationError(CodesignError):
    """Raised when the adaptive integrator cannot produce a trajectory."""


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class InvalidSize(CodesignError, ValueError):
    pass


class DomainError(CodesignError, ValueError):
    pass


class LengthMismatch(CodesignError, ValueError):
    pass


class DimensionMismatch(CodesignError, ValueError):
    pass


class InvalidSpin(CodesignError, ValueError):
    pass


class SingularFit(CodesignError):
    """Raised when the regularized normal equations cannot be factorized."""


class LinearSolveFailure(CodesignError):
    """Raised when the VarQITE linear system is singular; increase the ridge."""


class ConfigError(CodesignError):
    """Base class for configuration problems (exit code 2)."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class CapExceeded(ConfigError):
    pass


class OutputError(ConfigError):
    """Raised when an output file exists and overwriting was not requested."""


NUMERICAL_ERRORS = (IntegrationError, LinearSolveFailure, SingularFit)


def exit_code_for(exc: BaseException) -> Optional[int]:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, NUMERICAL_ERRORS):
        return 3
    return None
