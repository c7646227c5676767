"""Low-level pointwise kernels for flux and reaction laws.

All kernels work on the squared gradient norm ``s = |g|^2`` so that the
planar and the edge flux share one implementation.
"""

from __future__ import annotations

import math

import numba as nb


@nb.vectorize("float64(float64, float64, float64)", cache=True)  # type: ignore
def power_coefficient(s, p, eps):  # noqa: ANN201,ANN001,DOC106,DOC107
    """Scalar factor (eps^2 + s)^((p-2)/2) of the p-Laplacian flux."""
    if p == 2.0:  # noqa: PLR2004
        return 1.0
    base = eps * eps + s
    if base == 0.0:
        return 0.0
    return base ** (0.5 * (p - 2.0))


@nb.vectorize("float64(float64, float64, float64)", cache=True)  # type: ignore
def power_coefficient_derivative(s, p, eps):  # noqa: ANN201,ANN001,DOC106,DOC107
    """Derivative of ``power_coefficient`` with respect to s.

    Returns ``inf`` at a zero base for 2 < p < 4, where the flux is not
    differentiable.
    """
    if p == 2.0:  # noqa: PLR2004
        return 0.0
    base = eps * eps + s
    exponent = 0.5 * (p - 4.0)
    if base == 0.0:
        if exponent < 0.0:
            return math.inf
        if exponent == 0.0:
            return 0.5 * (p - 2.0)
        return 0.0
    return 0.5 * (p - 2.0) * base**exponent


@nb.vectorize("float64(float64, float64, float64)", cache=True)  # type: ignore
def power_potential(s, p, eps):  # noqa: ANN201,ANN001,DOC106,DOC107
    """Antiderivative ((eps^2 + s)^(p/2) - eps^p) / p, zero at s = 0."""
    if p == 2.0:  # noqa: PLR2004
        return 0.5 * s
    base = eps * eps + s
    return (base ** (0.5 * p) - eps**p) / p


@nb.vectorize("float64(float64, float64, float64)", cache=True)  # type: ignore
def power_reaction(s, c, sigma):  # noqa: ANN201,ANN001,DOC106,DOC107
    """Power law reaction c |s|^(sigma-2) s with value 0 at s = 0."""
    if s == 0.0:
        return 0.0
    return c * math.copysign(abs(s) ** (sigma - 1.0), s)


@nb.vectorize("float64(float64, float64, float64)", cache=True)  # type: ignore
def power_reaction_derivative(s, c, sigma):  # noqa: ANN201,ANN001,DOC106,DOC107
    """Derivative c (sigma-1) |s|^(sigma-2).

    At s = 0 it is c for sigma = 2 and 0 otherwise; for sigma < 2 the zero is a
    convention in place of the unbounded limit.
    """
    if s == 0.0:
        if sigma == 2.0:  # noqa: PLR2004
            return c
        return 0.0
    return c * (sigma - 1.0) * abs(s) ** (sigma - 2.0)
