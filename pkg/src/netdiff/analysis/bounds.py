"""Comparison bound on the subdomain concentrations."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from netdiff.mesh import DomainMesh
    from netdiff.model import CouplingTable
    from netdiff.timestepper import TimeSeries

logger = logging.getLogger(__name__)


def comparison_bound(
    coefficients: CouplingTable,
    edge_sup: dict[int, float],
    initial_sup: dict[int, float],
) -> float:
    """Upper bound M on |u| from the edge values and the initial data.

    M is the larger of alpha/beta times the sup of w_j over all incident pairs
    and the sup of the initial subdomain data.

    Args:
        coefficients: Resolved coupling coefficients.
        edge_sup: Sup norm of w_j per edge id.
        initial_sup: Sup norm of u_i(0) per subdomain id.

    Returns:
        The bound M.

    Raises:
        ValueError: If beta is not positive on an incident pair.
    """
    bound = max(initial_sup.values(), default=0.0)
    for (i, j), alpha in coefficients.alpha.items():
        beta = coefficients.beta.get((i, j), 0.0)
        if not beta > 0.0:
            msg = f"beta must be positive for subdomain {i}, edge {j}."
            raise ValueError(msg)
        bound = max(bound, alpha / beta * edge_sup.get(j, 0.0))
    return bound


@dataclass
class BoundCheck:
    """Result of comparing a run against its comparison bound.

    Attributes:
        bound: The bound M.
        max_sup_u: Largest sup norm of u over the run.
        exceedances: (time, sup_u) for every time the bound is exceeded.
    """

    bound: float
    max_sup_u: float
    exceedances: list[tuple[float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when no time exceeds the bound."""
        return not self.exceedances


def check_comparison_bound(
    series: TimeSeries,
    mesh: DomainMesh,
    coefficients: CouplingTable,
    tolerance: float = 1e-8,
) -> BoundCheck:
    """Compare sup |u| over a run against the comparison bound.

    Exceedances are logged as warnings together with the smallest triangle
    angle of the mesh.
    """
    initial = series.states[0]
    initial_sup = {i: float(abs(u).max()) for i, u in initial.u.items()}
    bound = comparison_bound(coefficients, series.report.edge_sup, initial_sup)

    sup_u = series.report.column("sup_u")
    check = BoundCheck(bound=bound, max_sup_u=float(sup_u.max()))
    for time, value in zip(series.times, sup_u, strict=True):
        if value > bound + tolerance:
            check.exceedances.append((time, float(value)))

    if check.exceedances:
        logger.warning(
            "sup |u| = %.6g exceeds the comparison bound %.6g at %d times; "
            "minimum triangle angle %.1f degrees.",
            check.max_sup_u,
            bound,
            len(check.exceedances),
            mesh.min_angle,
        )
    return check
