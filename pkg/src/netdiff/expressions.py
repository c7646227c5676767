"""Closed-form expressions for initial data and sources.

Expressions are parsed once with sympy, checked against a whitelist of names and
functions and compiled with ``lambdify`` into numpy callables that evaluate on
whole node arrays.

Examples:
    >>> import numpy as np
    >>> expr = Expression("cos(pi*x) * exp(-t)")
    >>> expr.evaluate(x=np.array([0.0, 1.0]), t=0.0)
    array([ 1., -1.])
"""

from __future__ import annotations

import keyword
from tokenize import NAME
from tokenize import OP
from tokenize import STRING
from tokenize import TokenError
from typing import TYPE_CHECKING
from typing import Any

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import auto_number
from sympy.parsing.sympy_parser import auto_symbol
from sympy.parsing.sympy_parser import parse_expr

from netdiff.exceptions import ExpressionError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

ARGUMENTS = sp.symbols("x y arclength t", real=True)

NAMES: dict[str, Any] = {
    **{str(symbol): symbol for symbol in ARGUMENTS},
    "s": ARGUMENTS[2],
    "pi": sp.pi,
    "e": sp.E,
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "abs": sp.Abs,
    "pow": sp.Pow,
    "sqrt": sp.sqrt,
}

FUNCTIONS = (sp.sin, sp.cos, sp.exp, sp.Abs)

# Everything the parser may emit besides the whitelisted names.
PARSER_GLOBALS: dict[str, Any] = {
    "Symbol": sp.Symbol,
    "Function": sp.Function,
    "Integer": sp.Integer,
    "Float": sp.Float,
    "Rational": sp.Rational,
}

FORBIDDEN_OPERATORS = frozenset({".", "=", "[", "]", "{", "}", ":", ";", "@", "~"})


class UnsupportedTokenError(ValueError):
    """Raised by the token filter on syntax outside arithmetic."""


def _reject_unsafe_tokens(
    tokens: list[tuple[int, str]], _local_dict: dict[str, Any], _global_dict: dict[str, Any]
) -> list[tuple[int, str]]:
    """Token transformation refusing literals, keywords and attribute access."""
    for kind, value in tokens:
        if kind == STRING:
            msg = f"unsupported literal {value}"
            raise UnsupportedTokenError(msg)
        if kind == NAME and keyword.iskeyword(value):
            msg = f"unsupported syntax '{value}'"
            raise UnsupportedTokenError(msg)
        if kind == OP and value in FORBIDDEN_OPERATORS:
            msg = f"unsupported syntax '{value}'"
            raise UnsupportedTokenError(msg)
    return tokens


TRANSFORMATIONS = (_reject_unsafe_tokens, auto_symbol, auto_number)


class Expression:
    """A whitelisted arithmetic expression in x, y, arclength (s) and t.

    Args:
        text: Expression source, e.g. ``"1 + 0.5*sin(pi*x)"``.

    Raises:
        ExpressionError: If the text is not valid or uses anything outside the
            supported names, functions and operators.
    """

    def __init__(self, text: str):
        self.text = text
        self.expr = self._parse(text.strip())
        self._function = sp.lambdify(ARGUMENTS, self.expr, modules="numpy")

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def _parse(self, text: str) -> sp.Expr:
        try:
            expr = parse_expr(
                text,
                local_dict=dict(NAMES),
                global_dict=dict(PARSER_GLOBALS),
                transformations=TRANSFORMATIONS,
            )
        except UnsupportedTokenError as err:
            raise ExpressionError(self.text, str(err)) from err
        except (SyntaxError, TokenError) as err:
            raise ExpressionError(self.text, f"syntax error: {err}") from err
        except (TypeError, ValueError, NameError) as err:
            raise ExpressionError(self.text, f"cannot parse: {err}") from err

        if not isinstance(expr, sp.Expr):
            raise ExpressionError(self.text, f"not a numeric expression: {expr!r}")

        unknown = sorted(str(symbol) for symbol in expr.free_symbols - set(ARGUMENTS))
        if unknown:
            raise ExpressionError(self.text, f"unknown name '{unknown[0]}'")

        for applied in expr.atoms(sp.Function):
            if not isinstance(applied, FUNCTIONS):
                name = type(applied).__name__
                raise ExpressionError(self.text, f"unsupported function '{name}'")

        if expr.has(sp.zoo, sp.nan, sp.I):
            raise ExpressionError(self.text, f"not a finite real expression: {expr}")

        return expr

    @property
    def is_constant(self) -> bool:
        """True when the expression uses no variables."""
        return not self.expr.free_symbols

    def evaluate(
        self,
        *,
        x: ArrayLike = 0.0,
        y: ArrayLike = 0.0,
        arclength: ArrayLike = 0.0,
        t: float = 0.0,
        shape: tuple[int, ...] | None = None,
    ) -> NDArray[np.float64]:
        """Evaluate on arrays of coordinates, broadcasting to a common shape.

        Args:
            x: First planar coordinate.
            y: Second planar coordinate.
            arclength: Local edge coordinate.
            t: Time.
            shape: Output shape; inferred from the coordinates when omitted.

        Returns:
            Float array of the broadcast shape.
        """
        xs = np.asarray(x, dtype=np.float64)
        ys = np.asarray(y, dtype=np.float64)
        ss = np.asarray(arclength, dtype=np.float64)

        if shape is None:
            shape = np.broadcast_shapes(xs.shape, ys.shape, ss.shape)

        value = self._function(xs, ys, ss, np.float64(t))
        return np.broadcast_to(np.asarray(value, dtype=np.float64), shape).copy()
