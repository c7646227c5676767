"""Kirchhoff check at unpopulated vertices."""

from __future__ import annotations

from typing import TYPE_CHECKING

from netdiff.assembly import junction_flux_balance
from netdiff.assembly import outward_slopes
from netdiff.model import flux_eval

if TYPE_CHECKING:
    from netdiff.assembly import DiscreteState
    from netdiff.assembly import JunctionSystem
    from netdiff.mesh import DomainMesh
    from netdiff.schema.model import FluxLaw


def kirchhoff_residual(
    state: DiscreteState,
    mesh: DomainMesh,
    junctions: dict[int, JunctionSystem],
    flux: FluxLaw,
) -> dict[int, float]:
    """|sum of outward edge fluxes| at every vertex.

    At an unpopulated vertex this equals the absolute component sum of
    :func:`~netdiff.assembly.junction_flux_balance`, because every column of
    the transfer matrix sums to zero.
    """
    residuals = {}
    for k, junction in sorted(junctions.items()):
        slopes = outward_slopes(state, mesh, junction)
        residuals[k] = abs(float(flux_eval(flux, slopes[:, None]).sum()))
    return residuals


def balance_sum(
    state: DiscreteState,
    mesh: DomainMesh,
    junctions: dict[int, JunctionSystem],
    flux: FluxLaw,
) -> dict[int, float]:
    """Component sum of the junction balance at every vertex."""
    return {
        k: float(junction_flux_balance(state, mesh, junction, flux).sum())
        for k, junction in sorted(junctions.items())
    }
