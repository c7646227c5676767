"""Shrinking vertex-region study on a line.

Two edges, [delta/2, L] carrying u and [-L, -delta/2] carrying v, exchange
mass with a vertex region (-delta/2, delta/2) carrying w. The region equation
is weighted by 1/delta, so as delta shrinks w becomes constant in the region
and the problem approaches two edges coupled to one vertex ODE:

    dz/dt + lambda z + theta (z - u(0)) + mu (z - v(0)) = 0.

Both problems are solved with P1 elements and backward Euler, and the study
reports how far the region average of w and the edge solutions are from the
limit problem for a decreasing sequence of widths.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from scipy import sparse

from netdiff.assembly import SEGMENT_POINTS
from netdiff.exceptions import LimitStudyError
from netdiff.expressions import Expression
from netdiff.mesh import EdgeMesh
from netdiff.model import flux_eval
from netdiff.model import flux_jacobian
from netdiff.model import reaction_derivative
from netdiff.model import reaction_eval
from netdiff.schema.model import ReactionKind
from netdiff.schema.model import ReactionLaw
from netdiff.timestepper import newton_solve
from netdiff.timestepper import time_levels

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from netdiff.schema.model import FluxLaw
    from netdiff.schema.run import VertexLimitConfig

logger = logging.getLogger(__name__)

STUDY_COLUMNS = ("delta", "vertex_discrepancy", "edge_l2_error", "discrepancy")


@dataclass(frozen=True)
class _Interval:
    """A 1D P1 piece with its own weight, flux and reaction."""

    mesh: EdgeMesh
    weight: float
    flux: FluxLaw
    reaction: ReactionLaw

    @property
    def x(self) -> NDArray[np.float64]:
        return self.mesh.positions[:, 0]


class _IntervalSystem:
    """Intervals and scalar unknowns joined by point exchange terms.

    A link (a, b, rate) adds rate (x_a - x_b) to the equation of unknown a and
    rate (x_b - x_a) to the equation of unknown b.
    """

    def __init__(
        self,
        intervals: list[_Interval],
        scalar_rates: list[float],
        links: list[tuple[int, int, float]],
    ):
        self.intervals = intervals
        self.scalar_rates = scalar_rates
        self.links = links
        self.offsets = np.cumsum([0] + [piece.mesh.num_nodes for piece in intervals])
        self.num_field = int(self.offsets[-1])
        self.size = self.num_field + len(scalar_rates)

    def block(self, n: int) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    def residual(
        self, x: NDArray[np.float64], x_prev: NDArray[np.float64], dt: float
    ) -> NDArray[np.float64]:
        r = np.zeros(self.size)
        for n, piece in enumerate(self.intervals):
            sl = self.block(n)
            w = x[sl]
            mesh = piece.mesh
            local = mesh.mass_matrix @ (w - x_prev[sl]) / dt
            flux = flux_eval(piece.flux, (np.diff(w) / mesh.cell_lengths)[:, None])[:, 0]
            local[:-1] -= flux
            local[1:] += flux
            load = reaction_eval(piece.reaction, w[mesh.cells] @ SEGMENT_POINTS.T)
            quad = (0.5 * mesh.cell_lengths)[:, None] * (load @ SEGMENT_POINTS)
            local += np.bincount(mesh.cells.ravel(), quad.ravel(), minlength=mesh.num_nodes)
            r[sl] = piece.weight * local

        for m, rate in enumerate(self.scalar_rates):
            index = self.num_field + m
            r[index] = (x[index] - x_prev[index]) / dt + rate * x[index]

        for a, b, rate in self.links:
            r[a] += rate * (x[a] - x[b])
            r[b] += rate * (x[b] - x[a])
        return r

    def tangent(self, x: NDArray[np.float64], dt: float) -> sparse.csr_matrix:
        matrix = np.zeros((self.size, self.size))
        for n, piece in enumerate(self.intervals):
            sl = self.block(n)
            w = x[sl]
            mesh = piece.mesh
            block = mesh.mass_matrix.toarray() / dt
            slope = flux_jacobian(piece.flux, (np.diff(w) / mesh.cell_lengths)[:, None])
            rate = reaction_derivative(piece.reaction, w[mesh.cells] @ SEGMENT_POINTS.T)
            for c, (left, right) in enumerate(mesh.cells):
                stiff = slope[c, 0, 0] / mesh.cell_lengths[c]
                cell = stiff * np.array([[1.0, -1.0], [-1.0, 1.0]])
                cell += 0.5 * mesh.cell_lengths[c] * np.einsum(
                    "q,qa,qb->ab", rate[c], SEGMENT_POINTS, SEGMENT_POINTS
                )
                block[np.ix_([left, right], [left, right])] += cell
            matrix[sl, sl] = piece.weight * block

        for m, rate in enumerate(self.scalar_rates):
            index = self.num_field + m
            matrix[index, index] = 1.0 / dt + rate

        for a, b, rate in self.links:
            matrix[a, a] += rate
            matrix[a, b] -= rate
            matrix[b, b] += rate
            matrix[b, a] -= rate
        return sparse.csr_matrix(matrix)


@dataclass(frozen=True)
class LimitSolution:
    """Final state of a study problem.

    Attributes:
        right_x: Node coordinates of the right edge.
        u: Values on the right edge.
        left_x: Node coordinates of the left edge.
        v: Values on the left edge.
        vertex_value: Region average of w, or z for the limit problem.
        conserved: Conserved quantity at the initial and the final time.
        vertex_x: Node coordinates of the vertex region, empty for the limit problem.
        w: Values in the vertex region, empty for the limit problem.
    """

    right_x: NDArray[np.float64]
    u: NDArray[np.float64]
    left_x: NDArray[np.float64]
    v: NDArray[np.float64]
    vertex_value: float
    conserved: tuple[float, float]
    vertex_x: NDArray[np.float64]
    w: NDArray[np.float64]


def _interval(
    a: float, b: float, cells: int, weight: float, flux: FluxLaw, reaction: ReactionLaw
) -> _Interval:
    mesh = EdgeMesh.uniform(0, np.array([a, 0.0]), np.array([b, 0.0]), cells)
    return _Interval(mesh=mesh, weight=weight, flux=flux, reaction=reaction)


def _mirror(piece: _Interval) -> _Interval:
    """The interval reflected through the origin, with mirrored nodes."""
    mesh = piece.mesh
    nodes = mesh.nodes[-1] - mesh.nodes[::-1]
    mirrored = EdgeMesh(edge_id=1, nodes=nodes, start=-mesh.end, end=-mesh.start)
    return _Interval(mesh=mirrored, weight=piece.weight, flux=piece.flux, reaction=piece.reaction)


def _integrate(
    system: _IntervalSystem, x0: NDArray[np.float64], config: VertexLimitConfig
) -> NDArray[np.float64]:
    times = time_levels(config.solver.dt, config.solver.t_end)
    x = x0.copy()
    for t, t_next in zip(times[:-1], times[1:], strict=True):
        dt = t_next - t
        x_prev = x

        def residual(
            y: NDArray[np.float64], x_prev: NDArray[np.float64] = x_prev, dt: float = dt
        ) -> NDArray[np.float64]:
            return system.residual(y, x_prev, dt)

        def tangent(y: NDArray[np.float64], dt: float = dt) -> sparse.csr_matrix:
            return system.tangent(y, dt)

        x, _ = newton_solve(residual, tangent, x_prev, config.solver)
    return x


def _edge_mass(piece: _Interval, values: NDArray[np.float64]) -> float:
    return float(piece.mesh.node_weights @ values)


def solve_delta_model(config: VertexLimitConfig, delta: float) -> LimitSolution:
    """Solve the problem with a vertex region of width delta.

    Raises:
        LimitStudyError: If delta is not in (0, 2 L).
    """
    half = config.half_length
    if not 0.0 < delta < 2.0 * half:
        msg = f"Region width {delta} must lie in (0, {2.0 * half})."
        raise LimitStudyError(msg)

    cells = max(1, math.ceil((half - 0.5 * delta) / config.h - 1e-9))
    right = _interval(0.5 * delta, half, cells, 1.0, config.flux, config.reaction)
    left = _mirror(right)
    decay = ReactionLaw(kind=ReactionKind.LINEAR, coefficient=config.lambda_)
    region = _interval(
        -0.5 * delta, 0.5 * delta, config.vertex_cells, 1.0 / delta, config.flux, decay
    )

    system = _IntervalSystem([left, region, right], [], [])
    left_sl, region_sl, right_sl = system.block(0), system.block(1), system.block(2)
    system.links = [
        (right_sl.start, region_sl.stop - 1, config.theta),
        (left_sl.stop - 1, region_sl.start, config.mu),
    ]

    x0 = np.empty(system.size)
    x0[left_sl] = Expression(config.v0).evaluate(x=left.x)
    x0[region_sl] = config.w0
    x0[right_sl] = Expression(config.u0).evaluate(x=right.x)

    def conserved(x: NDArray[np.float64]) -> float:
        return (
            _edge_mass(left, x[left_sl])
            + _edge_mass(region, x[region_sl]) / delta
            + _edge_mass(right, x[right_sl])
        )

    x = _integrate(system, x0, config)
    return LimitSolution(
        right_x=right.x,
        u=x[right_sl],
        left_x=left.x,
        v=x[left_sl],
        vertex_value=_edge_mass(region, x[region_sl]) / delta,
        conserved=(conserved(x0), conserved(x)),
        vertex_x=region.x,
        w=x[region_sl],
    )


def solve_limit_model(config: VertexLimitConfig) -> LimitSolution:
    """Solve the two-edge problem with an exchanging vertex at the origin."""
    half = config.half_length
    cells = max(1, math.ceil(half / config.h - 1e-9))
    right = _interval(0.0, half, cells, 1.0, config.flux, config.reaction)
    left = _mirror(right)

    system = _IntervalSystem([left, right], [config.lambda_], [])
    left_sl, right_sl = system.block(0), system.block(1)
    vertex = system.num_field
    system.links = [
        (right_sl.start, vertex, config.theta),
        (left_sl.stop - 1, vertex, config.mu),
    ]

    x0 = np.empty(system.size)
    x0[left_sl] = Expression(config.v0).evaluate(x=left.x)
    x0[right_sl] = Expression(config.u0).evaluate(x=right.x)
    x0[vertex] = config.w0

    def conserved(x: NDArray[np.float64]) -> float:
        return _edge_mass(left, x[left_sl]) + x[vertex] + _edge_mass(right, x[right_sl])

    x = _integrate(system, x0, config)
    return LimitSolution(
        right_x=right.x,
        u=x[right_sl],
        left_x=left.x,
        v=x[left_sl],
        vertex_value=float(x[vertex]),
        conserved=(conserved(x0), conserved(x)),
        vertex_x=np.empty(0),
        w=np.empty(0),
    )


def _l2_difference(
    x: NDArray[np.float64],
    values: NDArray[np.float64],
    reference_x: NDArray[np.float64],
    reference: NDArray[np.float64],
) -> float:
    """Squared L2 difference on the nodes ``x`` against an interpolated reference."""
    error = values - np.interp(x, reference_x, reference)
    mesh = EdgeMesh.uniform(0, np.array([x[0], 0.0]), np.array([x[-1], 0.0]), x.size - 1)
    return float(error @ (mesh.mass_matrix @ error))


def vertex_limit_study(config: VertexLimitConfig) -> pd.DataFrame:
    """Compare the region problem with the limit problem for every width.

    Args:
        config: Study setup with a decreasing list of widths.

    Returns:
        Columns ``delta``, ``vertex_discrepancy`` (|region average - z|),
        ``edge_l2_error`` (L2 distance of the edge solutions) and
        ``discrepancy``, their sum.

    Raises:
        LimitStudyError: If the widths are not strictly decreasing or one is
            not in (0, 2 L).
    """
    deltas = list(config.deltas)
    if any(b >= a for a, b in zip(deltas, deltas[1:], strict=False)):
        msg = f"Region widths must be strictly decreasing, got {deltas}."
        raise LimitStudyError(msg)

    limit = solve_limit_model(config)
    rows = []
    for delta in deltas:
        solution = solve_delta_model(config, delta)
        vertex_error = abs(solution.vertex_value - limit.vertex_value)
        edge_error = math.sqrt(
            _l2_difference(solution.right_x, solution.u, limit.right_x, limit.u)
            + _l2_difference(solution.left_x, solution.v, limit.left_x, limit.v)
        )
        rows.append((delta, vertex_error, edge_error, vertex_error + edge_error))
        logger.info("delta=%g: discrepancy %.6e", delta, vertex_error + edge_error)

    return pd.DataFrame(rows, columns=list(STUDY_COLUMNS))
