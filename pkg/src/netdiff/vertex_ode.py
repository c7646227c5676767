"""Closed-form solution of the linear vertex ODE dz/dt + Lambda z = W(t).

With W piecewise linear in time the convolution with exp(-Lambda t) is exact
on every cell, so one recurrence covers both the stand-alone solver and the
exact vertex update used inside a time step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

# Below this value of Lambda * h the series of the first moment is used.
SERIES_CUTOFF = 1e-3


def exponential_weights(rate: float, h: float) -> tuple[float, float, float]:
    """Decay factor and trace weights of one exact step of length h.

    Over one cell with W linear between W_start and W_end the solution obeys
    ``z_end = decay * z_start + w_start * W_start + w_end * W_end``.

    Args:
        rate: Total decay rate Lambda >= 0.
        h: Cell length.

    Returns:
        The tuple ``(decay, w_start, w_end)``.
    """
    x = rate * h
    if rate == 0.0:
        zeroth = h
        first = 0.5 * h * h
    else:
        zeroth = -math.expm1(-x) / rate
        if x < SERIES_CUTOFF:
            first = h * h * (0.5 - x / 3.0 + x * x / 8.0 - x**3 / 30.0)
        else:
            first = (-math.expm1(-x) - x * math.exp(-x)) / (rate * rate)
    decay = math.exp(-x)
    w_start = first / h
    w_end = zeroth - first / h
    return decay, w_start, w_end


@dataclass(frozen=True)
class PiecewiseLinearTrace:
    """A function of time, linear between knots and constant outside them.

    Attributes:
        times: Strictly increasing knot times.
        values: Values at the knots.
    """

    times: NDArray[np.float64]
    values: NDArray[np.float64]

    @classmethod
    def from_samples(cls, times: ArrayLike, values: ArrayLike) -> PiecewiseLinearTrace:
        """Build a trace from knot samples.

        Raises:
            ValueError: If the knots are not strictly increasing or the sizes differ.
        """
        t = np.asarray(times, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            msg = "Trace times and values must be non-empty 1D arrays of equal size."
            raise ValueError(msg)
        if np.any(np.diff(t) <= 0.0):
            msg = "Trace times must be strictly increasing."
            raise ValueError(msg)
        return cls(times=t, values=v)

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.interp(t, self.times, self.values)


def solve_vertex_ode_exact(
    z0: float, rate: float, weighted_trace: PiecewiseLinearTrace, t: float
) -> float:
    """Solve dz/dt + rate z = W(t), z(0) = z0, exactly at time t.

    Args:
        z0: Initial value.
        rate: Total decay rate Lambda, the sum of lambda over incident edges.
        weighted_trace: W, the delta-weighted sum of edge traces at the vertex.
        t: Evaluation time, t >= 0.

    Returns:
        z(t) = z0 exp(-rate t) + integral of W(s) exp(rate (s - t)) over [0, t].

    Raises:
        ValueError: If the rate or the time is negative.
    """
    if rate < 0.0 or t < 0.0:
        msg = f"Rate and time must be non-negative, got rate={rate}, t={t}."
        raise ValueError(msg)

    inner = weighted_trace.times[(weighted_trace.times > 0.0) & (weighted_trace.times < t)]
    knots = np.concatenate([[0.0], inner, [t]]) if t > 0.0 else np.array([0.0])
    values = weighted_trace(knots)

    z = float(z0)
    for n in range(knots.size - 1):
        h = float(knots[n + 1] - knots[n])
        decay, w_start, w_end = exponential_weights(rate, h)
        z = decay * z + w_start * float(values[n]) + w_end * float(values[n + 1])
    return z
