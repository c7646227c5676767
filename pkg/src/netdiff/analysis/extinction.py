"""Finite-time extinction exponents and the fit of X(t)^(1 - s2)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from netdiff.exceptions import ModelError

if TYPE_CHECKING:
    from netdiff.analysis.diagnostics import RunReport

# Fraction of the pre-extinction window used for the fit.
FIT_WINDOW = 0.8
MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class ExtinctionExponents:
    """Exponents governing the decay of X(t) for power reactions.

    Attributes:
        sigma: Reaction power, 1 < sigma < 2.
        p: Flux growth index.
        theta1: Interpolation exponent in one dimension.
        theta2: Interpolation exponent in two dimensions.
        s1: Decay exponent from the edge terms.
        s2: Decay exponent from the subdomain terms.
    """

    sigma: float
    p: float
    theta1: float
    theta2: float
    s1: float
    s2: float

    @property
    def reaction_order(self) -> float:
        """Order q of dX/dt ~ -X^q when the reaction alone drives the decay.

        Spatially flat solutions of the power reaction give q = sigma / 2, which
        never exceeds s2.
        """
        return self.sigma / 2.0


def _theta(p: float, sigma: float, d: int) -> float:
    return (2.0 - sigma) / 2.0 * d * p / (d * p + sigma * (p - d))


def extinction_exponents(p: float, sigma: float, d: int = 2) -> ExtinctionExponents:
    """Compute theta_1, theta_2, s1 and s2 for flux index p and reaction power sigma.

    Args:
        p: Flux growth index, p >= 2.
        sigma: Reaction power, 1 < sigma < 2.
        d: Dimension whose theta is checked to lie in (0, 1); both are returned.

    Returns:
        The exponents.

    Raises:
        ModelError: If the parameters are outside their admissible ranges.

    Examples:
        >>> extinction_exponents(2.0, 1.5).s2
        0.8
    """
    if p < 2.0 or not 1.0 < sigma < 2.0 or d not in (1, 2):  # noqa: PLR2004
        msg = f"Need p >= 2, 1 < sigma < 2 and d in (1, 2); got p={p}, sigma={sigma}, d={d}."
        raise ModelError(msg)

    inv_s2 = 1.0 + p * (2.0 - sigma) / (p * (2.0 + sigma) - 2.0 * sigma)
    inv_s1 = 1.0 + p * (2.0 - sigma) / (p * (1.0 + sigma) - sigma)
    exponents = ExtinctionExponents(
        sigma=sigma,
        p=p,
        theta1=_theta(p, sigma, 1),
        theta2=_theta(p, sigma, 2),
        s1=1.0 / inv_s1,
        s2=1.0 / inv_s2,
    )
    theta = exponents.theta1 if d == 1 else exponents.theta2
    if not (0.0 < theta < 1.0 and 0.0 < exponents.s1 < exponents.s2 < 1.0):
        msg = f"Inconsistent extinction exponents {exponents}."
        raise ModelError(msg)
    return exponents


@dataclass(frozen=True)
class ExtinctionFit:
    """Observed extinction time and the straight-line fit of X^(1 - s2).

    Attributes:
        t_extinct: First time with X <= threshold * X(0), or None.
        slope: Slope of the least squares line.
        intercept: Intercept of the least squares line.
        r_squared: Coefficient of determination of the line.
        max_second_difference: Largest second difference of X^(1 - s2) on the
            fit window; non-positive for concave decay.
        decreasing: True when X^(1 - s2) strictly decreases on the fit window.
        decay_order: Slope of log(-dX/dt) against log X on the fit window, from
            backward differences; nan when X does not strictly decrease.
        window: (first, last) time of the fit window.
    """

    t_extinct: float | None
    slope: float
    intercept: float
    r_squared: float
    max_second_difference: float
    decreasing: bool
    decay_order: float
    window: tuple[float, float]

    @property
    def extinct(self) -> bool:
        """True when extinction was observed."""
        return self.t_extinct is not None


def extinction_fit(
    report: RunReport,
    exponents: ExtinctionExponents,
    threshold: float | None = None,
    window_fraction: float = FIT_WINDOW,
) -> ExtinctionFit:
    """Detect extinction and fit a line through X(t)^(1 - s2) before it.

    The fit and the concavity check use the leading ``window_fraction`` of the
    pre-extinction window; the last backward Euler steps before extinction
    collapse faster than the continuous decay.

    Args:
        report: Diagnostics of the run.
        exponents: Exponents providing s2.
        threshold: Relative threshold on X(t) / X(0); the report's when omitted.
        window_fraction: Leading fraction of the window used for the fit.

    Returns:
        The fit. ``t_extinct`` is None when X never drops below the threshold.

    Raises:
        ValueError: If the window holds fewer than three times or X(0) is zero.
    """
    times = report.column("time")
    values = report.column("X")
    if threshold is None:
        threshold = report.extinction_threshold
    if not values[0] > 0.0:
        msg = "X(0) must be positive to detect extinction."
        raise ValueError(msg)

    below = np.flatnonzero(values <= threshold * values[0])
    t_extinct = float(times[below[0]]) if below.size else None
    end = int(below[0]) if below.size else times.size

    count = max(MIN_FIT_POINTS, math.ceil(window_fraction * end))
    if end < MIN_FIT_POINTS:
        msg = f"Only {end} times before extinction; at least {MIN_FIT_POINTS} are needed."
        raise ValueError(msg)
    count = min(count, end)

    t = times[:count]
    y = values[:count] ** (1.0 - exponents.s2)
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((y - fitted) ** 2)) / total if total > 0.0 else 1.0

    rates = -np.diff(values[:count]) / np.diff(t)
    if np.all(rates > 0.0):
        decay_order = float(np.polyfit(np.log(values[1:count]), np.log(rates), 1)[0])
    else:
        decay_order = math.nan

    return ExtinctionFit(
        t_extinct=t_extinct,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        max_second_difference=float(np.max(np.diff(y, 2))),
        decreasing=bool(np.all(np.diff(y) < 0.0)),
        decay_order=decay_order,
        window=(float(t[0]), float(t[-1])),
    )
