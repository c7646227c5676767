"""netdiff library exceptions."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Sequence


class NetdiffError(Exception):
    """Base class for all exceptions in this library."""


class GeometryError(NetdiffError):
    """Raised when a partitioned domain is queried with unknown ids or is unusable."""


class ModelError(NetdiffError):
    """Raised when a model law or parameter set is invalid."""


class DegenerateFluxError(ModelError):
    """Raised when a flux Jacobian is requested at a non-differentiable point.

    This happens for the unregularized flux (epsilon = 0) with p > 2 at a zero gradient.
    """


class CoefficientError(ModelError):
    """Raised when a coupling coefficient is missing or names a non-incident pair."""


class MeshError(NetdiffError):
    """Raised when a conforming mesh cannot be built or a trace map is missing."""


class AssemblyError(NetdiffError):
    """Raised on dimension mismatch or non-finite states during assembly."""


class SolverError(NetdiffError):
    """Base class for nonlinear solver failures."""


class ConvergenceError(SolverError):
    """Raised when Newton iteration does not reach the residual tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        msg = (
            f"Newton iteration did not converge after {iterations} iterations, "
            f"final residual norm {residual:.3e}."
        )
        super().__init__(msg)


class LineSearchError(SolverError):
    """Raised when backtracking cannot reduce the residual norm."""

    def __init__(self, halvings: int, residual: float):
        self.halvings = halvings
        self.residual = residual
        msg = (
            f"Line search failed to reduce the residual norm {residual:.3e} "
            f"after {halvings} halvings."
        )
        super().__init__(msg)


class StepFailure(SolverError):
    """Raised by the time loop when a step fails, stamped with the simulation time."""

    def __init__(self, time: float, cause: SolverError):
        self.time = time
        self.cause = cause
        super().__init__(f"Step from t={time:.6g} failed: {cause}")


class ConfigError(NetdiffError):
    """Raised when a run configuration fails to load or validate.

    Args:
        errors: Located errors as (location, message) pairs.
    """

    def __init__(self, errors: Sequence[tuple[str, str]]):
        self.errors = list(errors)
        lines = [f"{location}: {message}" for location, message in self.errors]
        super().__init__("Invalid configuration:\n" + "\n".join(lines))


class ExpressionError(ConfigError):
    """Raised when an expression string uses unsupported syntax."""

    def __init__(self, expression: str, message: str):
        self.expression = expression
        super().__init__([(expression, message)])


class InvalidFieldError(NetdiffError):
    """Raised when a configuration key does not match known values."""

    def __init__(self, key: str, suggestions: list[str]):
        self.key = key
        self.suggestions = suggestions
        msg = self._generate_message()
        super().__init__(msg)

    def _generate_message(self) -> str:
        """Generate custom user message."""
        if not self.suggestions:
            return f"Invalid key '{self.key}'."

        quoted = [f"'{name}'" for name in self.suggestions]
        if len(quoted) == 1:
            suggestion_text = quoted[0]
        else:
            suggestion_text = ", ".join(quoted[:-1]) + f", or {quoted[-1]}"
        return f"Invalid key '{self.key}'. Did you mean one of: {suggestion_text}?"


class OutputError(NetdiffError):
    """Raised when writing run outputs fails."""


class LimitStudyError(NetdiffError):
    """Raised when a vertex-limit study is configured with unusable widths."""
