"""
Exception hierarchy for eigsur.

Every failure raised by the library derives from EigsurError, which keeps
the message, a short machine-readable error code and the original
third-party exception (if any) that caused it.
"""

from typing import Optional


class EigsurError(Exception):
    """Base exception for all eigsur failures."""

    default_code = "EIGSUR"

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        original_error: Optional[Exception] = None
    ):
        super().__init__(message)
        self.error_code = error_code or self.default_code
        self.original_error = original_error


class ExprSyntaxError(EigsurError):
    """Coefficient expression does not follow the grammar."""

    default_code = "EXPR_SYNTAX"

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in '{text}'" if text else ""))
        self.position = position
        self.text = text


class ExprSymbolError(EigsurError):
    """Unknown identifier or parameter index out of range."""

    default_code = "EXPR_SYMBOL"


class ExprEvaluationError(EigsurError):
    """Evaluation produced a non-finite value."""

    default_code = "EXPR_EVAL"

    def __init__(self, message: str, subexpression: str, original_error: Optional[Exception] = None):
        super().__init__(f"{message}: {subexpression}", original_error=original_error)
        self.subexpression = subexpression


class ExprDifferentiationError(EigsurError):
    """Symbolic differentiation hit a non-differentiable function."""

    default_code = "EXPR_DIFF"


class ConfigurationError(EigsurError):
    """Invalid problem definition, configuration or persisted artifact."""

    default_code = "CONFIG"


class DomainError(ConfigurationError):
    """Parameter point outside the declared box domain."""

    default_code = "DOMAIN"


class SolverError(EigsurError):
    """Eigensolver breakdown or non-convergence of the first pair."""

    default_code = "SOLVER"


class NonSimpleEigenvalueError(EigsurError):
    """Derivative requested at an eigenvalue that is not simple."""

    default_code = "NON_SIMPLE"

    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (gap={gap:.3e})")
        self.gap = gap


class SingularSystemError(EigsurError):
    """Bordered or projected linear system is singular to working precision."""

    default_code = "SINGULAR"


class SensitivityError(EigsurError):
    """Derivative results are internally inconsistent."""

    default_code = "SENSITIVITY"
