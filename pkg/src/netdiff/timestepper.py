"""Backward Euler time stepping with Newton iterations.

Two schemes advance the coupled system over one step. The monolithic scheme
solves for all unknowns at once. The splitting scheme alternates a solve of
the subdomain and edge unknowns with the vertex values frozen and an update
of every vertex value from the new edge traces, until the vertex values stop
changing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse.linalg import spsolve

from netdiff.analysis.diagnostics import RunReport
from netdiff.exceptions import ConvergenceError
from netdiff.exceptions import LineSearchError
from netdiff.exceptions import SolverError
from netdiff.exceptions import StepFailure
from netdiff.schema.run import Scheme
from netdiff.schema.run import VertexUpdate
from netdiff.vertex_ode import PiecewiseLinearTrace
from netdiff.vertex_ode import solve_vertex_ode_exact

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray
    from scipy import sparse

    from netdiff.assembly import DiscreteState
    from netdiff.assembly import SystemAssembler
    from netdiff.assembly import StateLayout
    from netdiff.schema.run import InitialSpec
    from netdiff.schema.run import SolverConfig

__all__ = [
    "NewtonStats",
    "PiecewiseLinearTrace",
    "StepStats",
    "TimeSeries",
    "interpolate_initial",
    "newton_solve",
    "run",
    "solve_vertex_ode_exact",
    "step",
    "time_levels",
]

logger = logging.getLogger(__name__)


@dataclass
class NewtonStats:
    """Convergence history of one Newton solve.

    Attributes:
        residuals: Residual 2-norms, starting with the initial guess.
        halvings: Line search halvings summed over all iterations.
    """

    residuals: list[float] = field(default_factory=list)
    halvings: int = 0

    @property
    def iterations(self) -> int:
        """Number of Newton updates taken."""
        return max(len(self.residuals) - 1, 0)


@dataclass
class StepStats:
    """Solver statistics of one time step."""

    time: float
    dt: float
    newton: list[NewtonStats] = field(default_factory=list)
    splitting_iterations: int = 0

    @property
    def newton_iterations(self) -> int:
        """Newton updates over all solves of the step."""
        return sum(stats.iterations for stats in self.newton)


@dataclass
class TimeSeries:
    """States, times and diagnostics of a run.

    Attributes:
        times: Ascending times starting at 0.
        states: State at every time.
        stats: Solver statistics of every step.
        report: Diagnostics row at every time.
    """

    times: list[float]
    states: list[DiscreteState]
    stats: list[StepStats]
    report: RunReport

    @property
    def final_state(self) -> DiscreteState:
        """State at the last time."""
        return self.states[-1]

    def summary(self) -> dict[str, float | int]:
        """Aggregate solver statistics."""
        newton = [s.newton_iterations for s in self.stats]
        return {
            "steps": len(self.stats),
            "newton_iterations": sum(newton),
            "max_newton_iterations": max(newton, default=0),
            "splitting_iterations": sum(s.splitting_iterations for s in self.stats),
            "line_search_halvings": sum(n.halvings for s in self.stats for n in s.newton),
        }


def newton_solve(
    residual: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    tangent: Callable[[NDArray[np.float64]], sparse.spmatrix],
    x0: NDArray[np.float64],
    config: SolverConfig,
) -> tuple[NDArray[np.float64], NewtonStats]:
    """Solve residual(x) = 0 with Newton's method and backtracking.

    A full step is tried first. With line search enabled the step is halved
    until the residual norm decreases.

    Args:
        residual: Residual function.
        tangent: Its derivative as a sparse matrix.
        x0: Initial guess.
        config: Tolerance, iteration cap and line search options.

    Returns:
        The converged vector and its convergence history.

    Raises:
        ConvergenceError: If the tolerance is not met within the iteration cap.
        LineSearchError: If no halving decreases the residual norm.
    """
    x = x0.copy()
    r = residual(x)
    norm = float(np.linalg.norm(r))
    stats = NewtonStats(residuals=[norm])

    for _ in range(config.newton_max_iter):
        if norm <= config.newton_tol:
            return x, stats

        update = spsolve(tangent(x).tocsc(), -r)
        if not np.isfinite(update).all():
            raise ConvergenceError(stats.iterations, norm)

        scale = 1.0
        candidate = x + update
        r_new = residual(candidate)
        norm_new = float(np.linalg.norm(r_new))
        if config.line_search:
            halvings = 0
            while not (norm_new < norm or norm_new <= config.newton_tol):
                if halvings == config.line_search_max_halvings:
                    raise LineSearchError(halvings, norm)
                halvings += 1
                scale *= 0.5
                candidate = x + scale * update
                r_new = residual(candidate)
                norm_new = float(np.linalg.norm(r_new))
            stats.halvings += halvings

        x, r, norm = candidate, r_new, norm_new
        if not math.isfinite(norm):
            raise ConvergenceError(stats.iterations, norm)
        stats.residuals.append(norm)
        logger.debug("Newton iteration %d: residual %.3e", stats.iterations, norm)

    if norm <= config.newton_tol:
        return x, stats
    raise ConvergenceError(stats.iterations, norm)


def _update_vertices(
    assembler: SystemAssembler,
    x: NDArray[np.float64],
    x_prev: NDArray[np.float64],
    dt: float,
    update: VertexUpdate,
) -> NDArray[np.float64]:
    """Vertex values solving the vertex equations for the edge traces in ``x``."""
    layout = assembler.layout
    z = np.empty(len(layout.vertex_ids))
    for n, k in enumerate(layout.vertex_ids):
        junction = assembler.junctions[k]
        delta = junction.delta
        z_prev = x_prev[layout.z_index(k)]
        traces = assembler.vertex_traces(k, x)
        if update == VertexUpdate.EXACT:
            traces_prev = assembler.vertex_traces(k, x_prev)
            weighted = PiecewiseLinearTrace.from_samples(
                [0.0, dt], [delta @ traces_prev, delta @ traces]
            )
            z[n] = solve_vertex_ode_exact(z_prev, junction.total_rate, weighted, dt)
        else:
            z[n] = (z_prev + dt * (delta @ traces)) / (1.0 + dt * junction.total_rate)
    return z


def step(
    assembler: SystemAssembler,
    x_prev: NDArray[np.float64],
    t: float,
    dt: float,
    config: SolverConfig,
) -> tuple[NDArray[np.float64], StepStats]:
    """Advance the flat state ``x_prev`` from time t to t + dt.

    Returns:
        The new flat state and the step statistics.

    Raises:
        SolverError: If Newton or the splitting iteration fails.
    """
    t_new = t + dt
    stats = StepStats(time=t_new, dt=dt)

    def residual(x: NDArray[np.float64]) -> NDArray[np.float64]:
        return assembler.assemble_residual(x, x_prev, dt, t_new)

    def tangent(x: NDArray[np.float64]) -> sparse.spmatrix:
        return assembler.assemble_tangent(x, x_prev, dt, t_new)

    if config.scheme == Scheme.MONOLITHIC:
        x, newton = newton_solve(residual, tangent, x_prev, config)
        stats.newton.append(newton)
        return x, stats

    split = assembler.layout.num_field
    update = config.resolved_vertex_update
    x = x_prev.copy()
    for iteration in range(1, config.splitting_max_iter + 1):
        z = x[split:].copy()

        def field_residual(
            y: NDArray[np.float64], z: NDArray[np.float64] = z
        ) -> NDArray[np.float64]:
            return residual(np.concatenate([y, z]))[:split]

        def field_tangent(y: NDArray[np.float64], z: NDArray[np.float64] = z) -> sparse.spmatrix:
            return tangent(np.concatenate([y, z]))[:split, :split]

        y, newton = newton_solve(field_residual, field_tangent, x[:split], config)
        stats.newton.append(newton)
        x = np.concatenate([y, z])
        z_new = _update_vertices(assembler, x, x_prev, dt, update)
        change = float(np.max(np.abs(z_new - z), initial=0.0))
        x[split:] = z_new
        stats.splitting_iterations = iteration
        logger.debug("Splitting iteration %d: vertex change %.3e", iteration, change)
        if change <= config.splitting_tol:
            return x, stats

    final = float(np.linalg.norm(residual(x)))
    raise ConvergenceError(config.splitting_max_iter, final)


def interpolate_initial(layout: StateLayout, initial: InitialSpec) -> DiscreteState:
    """Nodal interpolation of the initial expressions.

    Args:
        layout: Layout of the unknowns on the meshes.
        initial: Expressions per subdomain, edge and vertex.

    Returns:
        The initial state.
    """
    mesh = layout.mesh
    state = layout.zeros()
    for sub in mesh.subdomains:
        expr = initial.u.expression_for(sub.subdomain_id)
        state.u[sub.subdomain_id] = expr.evaluate(
            x=sub.nodes[:, 0], y=sub.nodes[:, 1], shape=(sub.num_nodes,)
        )
    for edge in mesh.edges:
        expr = initial.w.expression_for(edge.edge_id)
        points = edge.positions
        state.w[edge.edge_id] = expr.evaluate(
            x=points[:, 0], y=points[:, 1], arclength=edge.nodes, shape=(edge.num_nodes,)
        )
    for vertex in mesh.domain.vertices:
        expr = initial.z.expression_for(vertex.id)
        x, y = vertex.position
        state.z[vertex.id] = float(expr.evaluate(x=x, y=y))
    return state


def time_levels(dt: float, t_end: float) -> list[float]:
    """Times 0, dt, 2 dt, ... up to t_end, with a short final step if needed."""
    count = math.floor(t_end / dt + 1e-9)
    times = [n * dt for n in range(count + 1)]
    if t_end - times[-1] > 1e-9 * dt:
        times.append(t_end)
    return times


def run(
    assembler: SystemAssembler,
    initial: DiscreteState,
    config: SolverConfig,
    extinction_threshold: float | None = None,
) -> TimeSeries:
    """Integrate from the initial state to ``config.t_end``.

    Args:
        assembler: Residual and tangent of the system.
        initial: State at time 0.
        config: Time step, final time and solver options.
        extinction_threshold: Relative threshold on X(t) / X(0) for the
            extinction flag; the settings default when omitted.

    Returns:
        States, statistics and diagnostics at every time level.

    Raises:
        StepFailure: If a step fails, carrying the time the step started at.
    """
    layout = assembler.layout
    report = RunReport(
        mesh=assembler.mesh,
        model=assembler.model,
        extinction_threshold=extinction_threshold,
    )
    times = time_levels(config.dt, config.t_end)

    x = layout.to_vector(initial)
    states = [layout.from_vector(x)]
    report.append(0.0, states[0])
    stats = []

    for t, t_next in zip(times[:-1], times[1:], strict=True):
        dt = t_next - t
        try:
            x, step_stats = step(assembler, x, t, dt, config)
        except SolverError as err:
            raise StepFailure(t, err) from err
        state = layout.from_vector(x)
        states.append(state)
        stats.append(step_stats)
        report.append(t_next, state)
        logger.info(
            "t=%.6g: %d Newton iterations, total mass %.12g",
            t_next,
            step_stats.newton_iterations,
            report.rows[-1]["total_mass"],
        )

    return TimeSeries(times=times, states=states, stats=stats, report=report)
