"""Scalar diagnostics of discrete states and their time series."""

from __future__ import annotations

from typing import TYPE_CHECKING
from typing import Any

import numpy as np
import pandas as pd

from netdiff.config import NetdiffSettings
from netdiff.model import antiderivative_eval

if TYPE_CHECKING:
    from netdiff.assembly import DiscreteState
    from netdiff.mesh import DomainMesh
    from netdiff.schema.model import ModelSpec

DIAGNOSTIC_COLUMNS = ("time", "total_mass", "X", "sup_u", "sup_w", "energy")


def total_mass(state: DiscreteState, mesh: DomainMesh) -> float:
    """Integral of u over all subdomains plus w over all edges plus the vertex values."""
    mass = 0.0
    for sub in mesh.subdomains:
        mass += float(sub.node_weights @ state.u[sub.subdomain_id])
    for edge in mesh.edges:
        mass += float(edge.node_weights @ state.w[edge.edge_id])
    mass += sum(state.z[vertex.id] for vertex in mesh.domain.vertices)
    return mass


def squared_norm(state: DiscreteState, mesh: DomainMesh) -> float:
    """X: squared L2 norms of u summed over subdomains plus those of w over edges."""
    value = 0.0
    for sub in mesh.subdomains:
        u = state.u[sub.subdomain_id]
        value += float(u @ (sub.mass_matrix @ u))
    for edge in mesh.edges:
        w = state.w[edge.edge_id]
        value += float(w @ (edge.mass_matrix @ w))
    return value


def energy(state: DiscreteState, mesh: DomainMesh, model: ModelSpec) -> float:
    """Flux potentials of the gradients integrated over subdomains and edges."""
    value = 0.0
    for sub in mesh.subdomains:
        u = state.u[sub.subdomain_id]
        gradient = np.einsum("tb,tbd->td", u[sub.triangles], sub.gradients)
        density = antiderivative_eval(model.subdomain_flux, gradient)
        value += float(sub.areas @ density)
    for edge in mesh.edges:
        slope = np.diff(state.w[edge.edge_id]) / edge.cell_lengths
        density = antiderivative_eval(model.edge_flux, slope[:, None])
        value += float(edge.cell_lengths @ density)
    return value


def sup_norms(state: DiscreteState) -> tuple[float, float]:
    """Maximum absolute nodal value of u and of w."""
    sup_u = max((float(np.abs(u).max()) for u in state.u.values()), default=0.0)
    sup_w = max((float(np.abs(w).max()) for w in state.w.values()), default=0.0)
    return sup_u, sup_w


class RunReport:
    """Diagnostics rows of a run, one per time level.

    Args:
        mesh: Meshes the states live on.
        model: Model providing the flux potentials.
        extinction_threshold: A row counts as extinct once X <= threshold * X(0).
            Read from ``NETDIFF_EXTINCTION_THRESHOLD`` when omitted.
    """

    def __init__(
        self,
        mesh: DomainMesh,
        model: ModelSpec,
        extinction_threshold: float | None = None,
    ):
        self.mesh = mesh
        self.model = model
        if extinction_threshold is None:
            extinction_threshold = NetdiffSettings().extinction_threshold
        self.extinction_threshold = extinction_threshold
        self.vertex_ids = [vertex.id for vertex in mesh.domain.vertices]
        self.rows: list[dict[str, Any]] = []
        self.edge_sup: dict[int, float] = {edge.edge_id: 0.0 for edge in mesh.edges}

    @property
    def columns(self) -> list[str]:
        """CSV columns: the scalar diagnostics followed by one column per vertex."""
        return [*DIAGNOSTIC_COLUMNS, *(f"z_{k}" for k in self.vertex_ids)]

    def append(self, time: float, state: DiscreteState) -> dict[str, Any]:
        """Compute and store the diagnostics of one state."""
        x_value = squared_norm(state, self.mesh)
        x_initial = self.rows[0]["X"] if self.rows else x_value
        sup_u, sup_w = sup_norms(state)
        row: dict[str, Any] = {
            "time": time,
            "total_mass": total_mass(state, self.mesh),
            "X": x_value,
            "sup_u": sup_u,
            "sup_w": sup_w,
            "energy": energy(state, self.mesh, self.model),
            "extinct": x_value <= self.extinction_threshold * x_initial,
        }
        for k in self.vertex_ids:
            row[f"z_{k}"] = state.z[k]
        for j, w in state.w.items():
            self.edge_sup[j] = max(self.edge_sup[j], float(np.abs(w).max()))
        self.rows.append(row)
        return row

    def to_dataframe(self) -> pd.DataFrame:
        """All rows as a table, including the extinction flag."""
        columns = [*self.columns[:6], "extinct", *self.columns[6:]]
        return pd.DataFrame(self.rows, columns=columns)

    def column(self, name: str) -> np.ndarray:
        """One diagnostic over time."""
        return np.array([row[name] for row in self.rows], dtype=np.float64)


def relative_mass_drift(frame: pd.DataFrame) -> float:
    """Largest |m(t) - m(0)| / (1 + |m(0)|) over a diagnostics table."""
    mass = frame["total_mass"].to_numpy(dtype=np.float64)
    return float(np.max(np.abs(mass - mass[0])) / (1.0 + abs(mass[0])))
