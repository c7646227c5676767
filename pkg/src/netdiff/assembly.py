"""Discrete residual and tangent of the coupled subdomain, edge and vertex system.

The unknowns are stacked as a flat vector: subdomain blocks in ascending
subdomain id, then edge blocks in ascending edge id, then one scalar per vertex.
Every block residual is computed from that vector alone, so blocks can be
evaluated concurrently and concatenated in a fixed order.

Time derivatives use a backward difference over one step. The subdomain and
edge equations are tested against P1 basis functions with a three point rule
per triangle and two point Gauss per edge cell.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy import sparse

from netdiff.config import NetdiffSettings
from netdiff.exceptions import AssemblyError
from netdiff.exceptions import CoefficientError
from netdiff.geometry import edges_at_vertex
from netdiff.geometry import edges_of_subdomain
from netdiff.model import CouplingTable
from netdiff.model import flux_eval
from netdiff.model import flux_jacobian
from netdiff.model import reaction_derivative
from netdiff.model import reaction_eval
from netdiff.schema.run import VertexUpdate
from netdiff.vertex_ode import exponential_weights

if TYPE_CHECKING:
    from collections.abc import Callable
    from collections.abc import Iterable

    from numpy.typing import NDArray

    from netdiff.geometry import PartitionedDomain
    from netdiff.mesh import DomainMesh
    from netdiff.schema.model import FluxLaw
    from netdiff.schema.model import ModelSpec
    from netdiff.schema.run import SourceSpec

logger = logging.getLogger(__name__)

# Barycentric coordinates of the three point triangle rule, one row per point.
TRIANGLE_POINTS = np.array(
    [[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]
)
_GAUSS = 0.5 - math.sqrt(3.0) / 6.0
# Local P1 basis values at the two Gauss points of a unit cell.
SEGMENT_POINTS = np.array([[1.0 - _GAUSS, _GAUSS], [_GAUSS, 1.0 - _GAUSS]])

_Triplets = tuple[list["NDArray[np.int64]"], list["NDArray[np.int64]"], list["NDArray[np.float64]"]]


@dataclass(frozen=True)
class JunctionSystem:
    """Junction matrices of one vertex.

    Rows and columns follow ``edge_order``.

    Attributes:
        vertex: Vertex id.
        edge_order: Incident edge ids, ascending.
        transfer: N with N[n, m] = -gamma(m -> n) and N[n, n] = sum of gamma(n -> m).
        exchange: Diagonal E of the delta values.
        lam: Lambda values.
    """

    vertex: int
    edge_order: tuple[int, ...]
    transfer: NDArray[np.float64]
    exchange: NDArray[np.float64]
    lam: NDArray[np.float64]

    @property
    def operator(self) -> NDArray[np.float64]:
        """The matrix N + E acting on the vertex traces."""
        return self.transfer + self.exchange

    @property
    def delta(self) -> NDArray[np.float64]:
        """Delta values along ``edge_order``."""
        return np.diag(self.exchange).copy()

    @property
    def total_rate(self) -> float:
        """Lambda summed over the incident edges."""
        return float(self.lam.sum())

    @property
    def populated(self) -> bool:
        """True when the vertex exchanges mass with its edges."""
        return bool(np.any(self.lam > 0.0) or np.any(self.exchange > 0.0))

    def position(self, j: int) -> int:
        """Row of edge j.

        Raises:
            AssemblyError: If the edge does not meet the vertex.
        """
        try:
            return self.edge_order.index(j)
        except ValueError as err:
            msg = f"Edge {j} does not meet vertex {self.vertex}."
            raise AssemblyError(msg) from err


def build_junction_system(
    domain: PartitionedDomain, coefficients: CouplingTable, k: int
) -> JunctionSystem:
    """Assemble N, E and lambda at vertex k.

    Raises:
        CoefficientError: If a coefficient of an incident pair is missing.
    """
    order = tuple(j for j, _ in edges_at_vertex(domain, k))
    size = len(order)

    transfer = np.zeros((size, size))
    delta = np.zeros(size)
    lam = np.zeros(size)
    missing = []
    for n, j in enumerate(order):
        for name, table, target in (
            ("delta", coefficients.delta, delta),
            ("lambda", coefficients.lam, lam),
        ):
            value = table.get((k, j))
            if value is None:
                missing.append(f"{name} at vertex {k}, edge {j}")
            else:
                target[n] = value
        for m, other in enumerate(order):
            if m == n:
                continue
            rate = coefficients.gamma.get((k, other, j))
            if rate is None:
                missing.append(f"gamma at vertex {k}, edge {other} to edge {j}")
                continue
            transfer[n, m] -= rate
            transfer[m, m] += rate

    if missing:
        msg = "Missing coefficients: " + "; ".join(missing)
        raise CoefficientError(msg)

    return JunctionSystem(
        vertex=k, edge_order=order, transfer=transfer, exchange=np.diag(delta), lam=lam
    )


@dataclass
class DiscreteState:
    """Nodal values at one time level.

    Attributes:
        u: Subdomain id to nodal values.
        w: Edge id to nodal values along increasing arclength.
        z: Vertex id to the vertex concentration.
    """

    u: dict[int, NDArray[np.float64]]
    w: dict[int, NDArray[np.float64]]
    z: dict[int, float]

    def copy(self) -> DiscreteState:
        """Deep copy."""
        return DiscreteState(
            u={i: v.copy() for i, v in self.u.items()},
            w={j: v.copy() for j, v in self.w.items()},
            z=dict(self.z),
        )

    def is_finite(self) -> bool:
        """True when no value is NaN or infinite."""
        return (
            all(np.isfinite(v).all() for v in self.u.values())
            and all(np.isfinite(v).all() for v in self.w.values())
            and all(math.isfinite(v) for v in self.z.values())
        )


class StateLayout:
    """Offsets of every block in the flat unknown vector."""

    def __init__(self, mesh: DomainMesh):
        self.mesh = mesh
        self.subdomain_ids = [sub.subdomain_id for sub in mesh.subdomains]
        self.edge_ids = [edge.edge_id for edge in mesh.edges]
        self.vertex_ids = [vertex.id for vertex in mesh.domain.vertices]

        offset = 0
        self._u: dict[int, slice] = {}
        for sub in mesh.subdomains:
            self._u[sub.subdomain_id] = slice(offset, offset + sub.num_nodes)
            offset += sub.num_nodes
        self._w: dict[int, slice] = {}
        for edge in mesh.edges:
            self._w[edge.edge_id] = slice(offset, offset + edge.num_nodes)
            offset += edge.num_nodes
        self.num_field = offset
        self._z = {k: offset + n for n, k in enumerate(self.vertex_ids)}
        self.size = offset + len(self.vertex_ids)

    def u_slice(self, i: int) -> slice:
        """Slice of subdomain i."""
        return self._u[i]

    def w_slice(self, j: int) -> slice:
        """Slice of edge j."""
        return self._w[j]

    def z_index(self, k: int) -> int:
        """Index of vertex k."""
        return self._z[k]

    def zeros(self) -> DiscreteState:
        """The zero state on this layout."""
        return self.from_vector(np.zeros(self.size))

    def to_vector(self, state: DiscreteState) -> NDArray[np.float64]:
        """Flatten a state.

        Raises:
            AssemblyError: On a block size mismatch or missing block.
        """
        x = np.empty(self.size)
        try:
            for i, sl in self._u.items():
                x[sl] = self._checked(state.u[i], sl, f"subdomain {i}")
            for j, sl in self._w.items():
                x[sl] = self._checked(state.w[j], sl, f"edge {j}")
            for k, n in self._z.items():
                x[n] = state.z[k]
        except KeyError as err:
            msg = f"State has no block for id {err.args[0]}."
            raise AssemblyError(msg) from err
        return x

    def from_vector(self, x: NDArray[np.float64]) -> DiscreteState:
        """Split a flat vector into a state.

        Raises:
            AssemblyError: If the vector has the wrong size.
        """
        if x.shape != (self.size,):
            msg = f"Expected a vector of size {self.size}, got shape {x.shape}."
            raise AssemblyError(msg)
        return DiscreteState(
            u={i: x[sl].copy() for i, sl in self._u.items()},
            w={j: x[sl].copy() for j, sl in self._w.items()},
            z={k: float(x[n]) for k, n in self._z.items()},
        )

    @staticmethod
    def _checked(values: NDArray[np.float64], sl: slice, name: str) -> NDArray[np.float64]:
        expected = sl.stop - sl.start
        if np.shape(values) != (expected,):
            msg = f"Expected {expected} values for {name}, got shape {np.shape(values)}."
            raise AssemblyError(msg)
        return values


class SystemAssembler:
    """Residual and tangent of one backward Euler step.

    Args:
        mesh: Conforming meshes of the partition.
        model: Flux, reaction and coefficient specification.
        sources: Optional forcing of the subdomain and edge equations.
        vertex_update: Backward Euler or exact exponential vertex update.
        threads: Worker cap; read from ``NETDIFF_THREADS`` when omitted.

    Raises:
        CoefficientError: If a coefficient needed by the system is missing.
    """

    def __init__(
        self,
        mesh: DomainMesh,
        model: ModelSpec,
        sources: SourceSpec | None = None,
        vertex_update: VertexUpdate = VertexUpdate.BACKWARD_EULER,
        threads: int | None = None,
    ):
        self.mesh = mesh
        self.model = model
        self.sources = sources
        self.vertex_update = vertex_update
        self.threads = NetdiffSettings().threads if threads is None else threads
        self.layout = StateLayout(mesh)

        domain = mesh.domain
        self.coefficients = CouplingTable.resolve(domain, model.coefficients)
        self.junctions = {
            vertex.id: build_junction_system(domain, self.coefficients, vertex.id)
            for vertex in domain.vertices
        }

        self._robin: dict[tuple[int, int], tuple[float, float]] = {}
        for sub in domain.subdomains:
            for j in edges_of_subdomain(domain, sub.id):
                alpha = self.coefficients.alpha.get((sub.id, j))
                beta = self.coefficients.beta.get((sub.id, j))
                if alpha is None or beta is None:
                    msg = f"Missing alpha or beta for subdomain {sub.id}, edge {j}."
                    raise CoefficientError(msg)
                self._robin[(sub.id, j)] = (alpha, beta)

    @property
    def size(self) -> int:
        """Number of unknowns."""
        return self.layout.size

    @cached_property
    def _triangle_points(self) -> dict[int, NDArray[np.float64]]:
        """Quadrature points per subdomain, shape (nt, 3, 2)."""
        return {
            m.subdomain_id: np.einsum("qb,tbd->tqd", TRIANGLE_POINTS, m.nodes[m.triangles])
            for m in self.mesh.subdomains
        }

    @cached_property
    def _segment_points(self) -> dict[int, NDArray[np.float64]]:
        """Arclength of the quadrature points per edge, shape (ncells, 2)."""
        return {
            m.edge_id: m.nodes[m.cells] @ SEGMENT_POINTS.T for m in self.mesh.edges
        }

    def robin_coefficients(self, i: int, j: int) -> tuple[float, float]:
        """(alpha, beta) of subdomain i and edge j."""
        return self._robin[(i, j)]

    def _map(self, func: Callable[[int], object], ids: Iterable[int]) -> list:
        ids = list(ids)
        if self.threads > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                return list(executor.map(func, ids))
        return [func(id_) for id_ in ids]

    def _validate(self, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float) -> None:
        if x.shape != (self.size,) or x_prev.shape != (self.size,):
            msg = (
                f"Expected state vectors of size {self.size}, got shapes "
                f"{x.shape} and {x_prev.shape}."
            )
            raise AssemblyError(msg)
        if not dt > 0.0:
            msg = f"Time step must be positive, got {dt}."
            raise AssemblyError(msg)
        if not (np.isfinite(x).all() and np.isfinite(x_prev).all()):
            msg = "State contains NaN or infinite values."
            raise AssemblyError(msg)

    def assemble_residual(
        self, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float, t: float = 0.0
    ) -> NDArray[np.float64]:
        """Residual of the step from ``x_prev`` to ``x`` ending at time ``t``.

        Raises:
            AssemblyError: On a size mismatch, non-finite values or a bad step.
        """
        self._validate(x, x_prev, dt)
        blocks = self._map(
            lambda i: self._subdomain_residual(i, x, x_prev, dt, t), self.layout.subdomain_ids
        )
        blocks += self._map(
            lambda j: self._edge_residual(j, x, x_prev, dt, t), self.layout.edge_ids
        )
        vertex = [self._vertex_residual(k, x, x_prev, dt) for k in self.layout.vertex_ids]
        blocks.append(np.array(vertex))
        return np.concatenate(blocks)

    def assemble_tangent(
        self, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float, t: float = 0.0
    ) -> sparse.csr_matrix:
        """Derivative of :meth:`assemble_residual` with respect to ``x``.

        Raises:
            AssemblyError: On a size mismatch, non-finite values or a bad step.
            DegenerateFluxError: If a flux law is not differentiable at the state.
        """
        del t
        self._validate(x, x_prev, dt)
        parts = self._map(lambda i: self._subdomain_tangent(i, x, dt), self.layout.subdomain_ids)
        parts += self._map(lambda j: self._edge_tangent(j, x, dt), self.layout.edge_ids)
        parts += [self._vertex_tangent(k, dt) for k in self.layout.vertex_ids]

        rows = np.concatenate([r for part in parts for r in part[0]])
        cols = np.concatenate([c for part in parts for c in part[1]])
        vals = np.concatenate([v for part in parts for v in part[2]])
        shape = (self.size, self.size)
        return sparse.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()

    def residual_state(
        self, state: DiscreteState, state_prev: DiscreteState, dt: float, t: float = 0.0
    ) -> NDArray[np.float64]:
        """:meth:`assemble_residual` on states instead of flat vectors."""
        return self.assemble_residual(
            self.layout.to_vector(state), self.layout.to_vector(state_prev), dt, t
        )

    # Subdomain blocks.

    def _subdomain_residual(
        self, i: int, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float, t: float
    ) -> NDArray[np.float64]:
        mesh = self.mesh.subdomain_mesh(i)
        sl = self.layout.u_slice(i)
        u = x[sl]
        tri = mesh.triangles

        r = mesh.mass_matrix @ (u - x_prev[sl]) / dt

        grads = mesh.gradients
        gradient = np.einsum("tb,tbd->td", u[tri], grads)
        flux = flux_eval(self.model.subdomain_flux, gradient)
        local = mesh.areas[:, None] * np.einsum("td,tad->ta", flux, grads)

        values = u[tri] @ TRIANGLE_POINTS.T
        load = reaction_eval(self.model.subdomain_reaction, values)
        source = self._subdomain_source(i, t)
        if source is not None:
            load = load - source
        local = local + (mesh.areas / 3.0)[:, None] * (load @ TRIANGLE_POINTS)
        r += np.bincount(tri.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)

        for j in mesh.edge_nodes:
            alpha, beta = self._robin[(i, j)]
            nodes = self.mesh.traces.subdomain_nodes(i, j)
            w = x[self.layout.w_slice(j)]
            r[nodes] -= self.mesh.edge_mesh(j).mass_matrix @ (alpha * w - beta * u[nodes])
        return r

    def _subdomain_source(self, i: int, t: float) -> NDArray[np.float64] | None:
        if self.sources is None or self.sources.u is None:
            return None
        points = self._triangle_points[i]
        expr = self.sources.u.expression_for(i)
        return expr.evaluate(x=points[..., 0], y=points[..., 1], t=t)

    def _subdomain_tangent(self, i: int, x: NDArray[np.float64], dt: float) -> _Triplets:
        mesh = self.mesh.subdomain_mesh(i)
        sl = self.layout.u_slice(i)
        offset = sl.start
        u = x[sl]
        tri = mesh.triangles
        rows: list[NDArray[np.int64]] = []
        cols: list[NDArray[np.int64]] = []
        vals: list[NDArray[np.float64]] = []

        grads = mesh.gradients
        gradient = np.einsum("tb,tbd->td", u[tri], grads)
        jacobian = flux_jacobian(self.model.subdomain_flux, gradient)
        stiffness = np.einsum("tad,tde,tbe->tab", grads, jacobian, grads)
        stiffness *= mesh.areas[:, None, None]

        values = u[tri] @ TRIANGLE_POINTS.T
        slope = reaction_derivative(self.model.subdomain_reaction, values)
        reaction = (mesh.areas / 3.0)[:, None, None] * np.einsum(
            "tq,qa,qb->tab", slope, TRIANGLE_POINTS, TRIANGLE_POINTS
        )

        local = stiffness + reaction
        rows.append(offset + np.broadcast_to(tri[:, :, None], local.shape).ravel())
        cols.append(offset + np.broadcast_to(tri[:, None, :], local.shape).ravel())
        vals.append(local.ravel())

        mass = mesh.mass_matrix.tocoo()
        rows.append(offset + mass.row)
        cols.append(offset + mass.col)
        vals.append(mass.data / dt)

        for j in mesh.edge_nodes:
            alpha, beta = self._robin[(i, j)]
            nodes = self.mesh.traces.subdomain_nodes(i, j)
            edge_mass = self.mesh.edge_mesh(j).mass_matrix.tocoo()
            w_offset = self.layout.w_slice(j).start
            rows += [offset + nodes[edge_mass.row]] * 2
            cols += [w_offset + edge_mass.col, offset + nodes[edge_mass.col]]
            vals += [-alpha * edge_mass.data, beta * edge_mass.data]
        return rows, cols, vals

    # Edge blocks.

    def _edge_residual(
        self, j: int, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float, t: float
    ) -> NDArray[np.float64]:
        mesh = self.mesh.edge_mesh(j)
        sl = self.layout.w_slice(j)
        w = x[sl]
        cells = mesh.cells
        lengths = mesh.cell_lengths

        r = mesh.mass_matrix @ (w - x_prev[sl]) / dt

        flux = flux_eval(self.model.edge_flux, (np.diff(w) / lengths)[:, None])[:, 0]
        r[:-1] -= flux
        r[1:] += flux

        values = w[cells] @ SEGMENT_POINTS.T
        load = reaction_eval(self.model.edge_reaction, values)
        source = self._edge_source(j, t)
        if source is not None:
            load = load - source
        local = (0.5 * lengths)[:, None] * (load @ SEGMENT_POINTS)
        r += np.bincount(cells.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)

        for i in sorted(self.mesh.domain.edge(j).adjacent_subdomains):
            alpha, beta = self._robin[(i, j)]
            nodes = self.mesh.traces.subdomain_nodes(i, j)
            u = x[self.layout.u_slice(i)][nodes]
            r += mesh.mass_matrix @ (alpha * w - beta * u)

        for k in self._endpoints(j):
            junction = self.junctions[k]
            n = junction.position(j)
            node = self.mesh.vertex_traces.node(j, k)
            z = x[self.layout.z_index(k)]
            r[node] += junction.operator[n] @ self.vertex_traces(k, x) - junction.lam[n] * z
        return r

    def _edge_source(self, j: int, t: float) -> NDArray[np.float64] | None:
        if self.sources is None or self.sources.w is None:
            return None
        mesh = self.mesh.edge_mesh(j)
        arclength = self._segment_points[j]
        direction = (mesh.end - mesh.start) / mesh.length
        x = mesh.start[0] + arclength * direction[0]
        y = mesh.start[1] + arclength * direction[1]
        expr = self.sources.w.expression_for(j)
        return expr.evaluate(x=x, y=y, arclength=arclength, t=t)

    def _endpoints(self, j: int) -> list[int]:
        edge = self.mesh.domain.edge(j)
        return [edge.source, edge.terminal]

    def vertex_traces(self, k: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """Edge values at vertex k along the junction edge order."""
        junction = self.junctions[k]
        return np.array(
            [
                x[self.layout.w_slice(m).start + self.mesh.vertex_traces.node(m, k)]
                for m in junction.edge_order
            ]
        )

    def _edge_tangent(self, j: int, x: NDArray[np.float64], dt: float) -> _Triplets:
        mesh = self.mesh.edge_mesh(j)
        sl = self.layout.w_slice(j)
        offset = sl.start
        w = x[sl]
        cells = mesh.cells
        lengths = mesh.cell_lengths
        rows: list[NDArray[np.int64]] = []
        cols: list[NDArray[np.int64]] = []
        vals: list[NDArray[np.float64]] = []

        slope = flux_jacobian(self.model.edge_flux, (np.diff(w) / lengths)[:, None])[:, 0, 0]
        stiffness = (slope / lengths)[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])

        values = w[cells] @ SEGMENT_POINTS.T
        rate = reaction_derivative(self.model.edge_reaction, values)
        reaction = (0.5 * lengths)[:, None, None] * np.einsum(
            "cq,qa,qb->cab", rate, SEGMENT_POINTS, SEGMENT_POINTS
        )

        local = stiffness + reaction
        rows.append(offset + np.broadcast_to(cells[:, :, None], local.shape).ravel())
        cols.append(offset + np.broadcast_to(cells[:, None, :], local.shape).ravel())
        vals.append(local.ravel())

        mass = mesh.mass_matrix.tocoo()
        rows.append(offset + mass.row)
        cols.append(offset + mass.col)
        vals.append(mass.data / dt)

        for i in sorted(self.mesh.domain.edge(j).adjacent_subdomains):
            alpha, beta = self._robin[(i, j)]
            nodes = self.mesh.traces.subdomain_nodes(i, j)
            u_offset = self.layout.u_slice(i).start
            rows += [offset + mass.row] * 2
            cols += [offset + mass.col, u_offset + nodes[mass.col]]
            vals += [alpha * mass.data, -beta * mass.data]

        for k in self._endpoints(j):
            junction = self.junctions[k]
            n = junction.position(j)
            row = offset + self.mesh.vertex_traces.node(j, k)
            targets = np.array(
                [
                    self.layout.w_slice(m).start + self.mesh.vertex_traces.node(m, k)
                    for m in junction.edge_order
                ]
                + [self.layout.z_index(k)]
            )
            rows.append(np.full(targets.size, row))
            cols.append(targets)
            vals.append(np.append(junction.operator[n], -junction.lam[n]))
        return rows, cols, vals

    # Vertex blocks.

    def _vertex_residual(
        self, k: int, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float
    ) -> float:
        junction = self.junctions[k]
        index = self.layout.z_index(k)
        z, z_prev = x[index], x_prev[index]
        traces = self.vertex_traces(k, x)

        if self.vertex_update == VertexUpdate.EXACT:
            decay, w_start, w_end = exponential_weights(junction.total_rate, dt)
            traces_prev = self.vertex_traces(k, x_prev)
            inflow = junction.delta @ (w_start * traces_prev + w_end * traces)
            return float((z - decay * z_prev - inflow) / dt)

        return float((z - z_prev) / dt - (junction.delta @ traces - junction.total_rate * z))

    def _vertex_tangent(self, k: int, dt: float) -> _Triplets:
        junction = self.junctions[k]
        index = self.layout.z_index(k)
        targets = np.array(
            [
                self.layout.w_slice(m).start + self.mesh.vertex_traces.node(m, k)
                for m in junction.edge_order
            ]
            + [index]
        )
        if self.vertex_update == VertexUpdate.EXACT:
            _, _, w_end = exponential_weights(junction.total_rate, dt)
            values = np.append(-junction.delta * w_end / dt, 1.0 / dt)
        else:
            values = np.append(-junction.delta, 1.0 / dt + junction.total_rate)
        return [np.full(targets.size, index)], [targets], [values]


def outward_slopes(
    state: DiscreteState, mesh: DomainMesh, junction: JunctionSystem
) -> NDArray[np.float64]:
    """One-sided slope of every incident edge at the vertex, oriented away from it.

    Entries follow ``junction.edge_order``.
    """
    k = junction.vertex
    slopes = np.empty(len(junction.edge_order))
    for n, j in enumerate(junction.edge_order):
        w = state.w[j]
        lengths = mesh.edge_mesh(j).cell_lengths
        if mesh.vertex_traces.node(j, k) == 0:
            slopes[n] = -(w[1] - w[0]) / lengths[0]
        else:
            slopes[n] = (w[-1] - w[-2]) / lengths[-1]
    return slopes


def junction_flux_balance(
    state: DiscreteState, mesh: DomainMesh, junction: JunctionSystem, flux: FluxLaw
) -> NDArray[np.float64]:
    """Strong form junction condition eta(d_nu w) + (N + E) w - z lambda at one vertex.

    Args:
        state: State to check.
        mesh: Meshes the state lives on.
        junction: Junction system of the vertex.
        flux: Edge flux law eta.

    Returns:
        One entry per incident edge along ``junction.edge_order``.
    """
    k = junction.vertex
    traces = np.array(
        [state.w[j][mesh.vertex_traces.node(j, k)] for j in junction.edge_order]
    )
    normal_flux = flux_eval(flux, outward_slopes(state, mesh, junction)[:, None])[:, 0]
    return normal_flux + junction.operator @ traces - state.z[k] * junction.lam
