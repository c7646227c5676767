"""Run configuration: discretization, solver options, data and outputs."""

from __future__ import annotations

from enum import StrEnum

from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from netdiff.exceptions import ExpressionError
from netdiff.expressions import Expression
from netdiff.schema.base import CamelCaseModel
from netdiff.schema.geometry import GeometrySpec  # noqa: TCH001
from netdiff.schema.model import FluxLaw
from netdiff.schema.model import ModelSpec  # noqa: TCH001
from netdiff.schema.model import ReactionLaw


class Scheme(StrEnum):
    """Time stepping scheme."""

    MONOLITHIC = "monolithic"
    SPLITTING = "splitting"


class VertexUpdate(StrEnum):
    """Discretization of the vertex ODE over one step."""

    BACKWARD_EULER = "backward_euler"
    EXACT = "exact"


def _check_expression(text: str) -> str:
    try:
        Expression(text)
    except ExpressionError as err:
        raise ValueError(err.errors[0][1]) from err
    return text


class SolverConfig(CamelCaseModel):
    """Time step, final time and nonlinear solver options."""

    dt: float = Field(default=1e-2, gt=0.0, description="Time step.")
    t_end: float = Field(default=1.0, ge=0.0, description="Final time.")
    newton_tol: float = Field(default=1e-10, gt=0.0, description="Residual 2-norm tolerance.")
    newton_max_iter: int = Field(default=30, ge=1, description="Newton iteration cap.")
    line_search: bool = Field(default=True, description="Backtracking on the residual norm.")
    line_search_max_halvings: int = Field(default=20, ge=1, description="Halving cap.")
    scheme: Scheme = Field(default=Scheme.MONOLITHIC, description="Coupled or split solve.")
    vertex_update: VertexUpdate | None = Field(
        default=None,
        description=(
            "Vertex ODE update. Defaults to backward_euler for the monolithic "
            "scheme and exact for the splitting scheme."
        ),
    )
    splitting_tol: float = Field(
        default=1e-10, gt=0.0, description="Fixed-point tolerance on vertex values."
    )
    splitting_max_iter: int = Field(default=200, ge=1, description="Fixed-point iteration cap.")

    @model_validator(mode="after")
    def ensure_step_fits(self) -> SolverConfig:
        """The time step may not exceed a positive final time."""
        if self.t_end > 0 and self.dt > self.t_end:
            msg = f"dt={self.dt} exceeds t_end={self.t_end}."
            raise ValueError(msg)
        return self

    @property
    def resolved_vertex_update(self) -> VertexUpdate:
        """Vertex update with the scheme dependent default applied."""
        if self.vertex_update is not None:
            return self.vertex_update
        if self.scheme == Scheme.SPLITTING:
            return VertexUpdate.EXACT
        return VertexUpdate.BACKWARD_EULER


class DiscretizationSpec(SolverConfig):
    """Solver options plus the target mesh size."""

    h: float = Field(..., gt=0.0, description="Target mesh size.")


class ExpressionMap(CamelCaseModel):
    """Expressions per entity id with a fallback for unlisted ids."""

    default: str = Field(default="0", description="Expression for unlisted ids.")
    entries: dict[int, str] = Field(default_factory=dict, description="Expression per id.")

    @field_validator("default")
    @classmethod
    def ensure_default_parses(cls, text: str) -> str:
        """Reject unsupported syntax early."""
        return _check_expression(text)

    @field_validator("entries")
    @classmethod
    def ensure_entries_parse(cls, entries: dict[int, str]) -> dict[int, str]:
        """Reject unsupported syntax early."""
        for text in entries.values():
            _check_expression(text)
        return entries

    def expression_for(self, id_: int) -> Expression:
        """Parsed expression for an entity id."""
        return Expression(self.entries.get(id_, self.default))


class InitialSpec(CamelCaseModel):
    """Initial data as closed-form expressions evaluated at nodes.

    Subdomain expressions see ``x, y``; edge expressions also see ``arclength``
    (alias ``s``); vertex expressions are constants.
    """

    u: ExpressionMap = Field(default_factory=ExpressionMap, description="u_i(0) per subdomain.")
    w: ExpressionMap = Field(default_factory=ExpressionMap, description="w_j(0) per edge.")
    z: ExpressionMap = Field(default_factory=ExpressionMap, description="z_k(0) per vertex.")


class SourceSpec(CamelCaseModel):
    """Optional forcing added to the subdomain and edge equations.

    Expressions may depend on time ``t``; they are evaluated at the new time level.
    """

    u: ExpressionMap | None = Field(default=None, description="Subdomain forcing.")
    w: ExpressionMap | None = Field(default=None, description="Edge forcing.")


class OutputSpec(CamelCaseModel):
    """Which outputs to write and how often."""

    directory: str = Field(default="netdiff_output", description="Output directory or URL.")
    vtk: bool = Field(default=True, description="Write VTK snapshots of the final state.")
    vtk_every: int = Field(
        default=0, ge=0, description="Also snapshot every n steps; 0 disables."
    )


class RunConfig(CamelCaseModel):
    """A complete simulation configuration."""

    geometry: GeometrySpec = Field(..., description="Partition and metric graph.")
    model: ModelSpec = Field(default_factory=ModelSpec, description="Laws and coefficients.")
    discretization: DiscretizationSpec = Field(..., description="Mesh and solver options.")
    initial: InitialSpec = Field(default_factory=InitialSpec, description="Initial data.")
    sources: SourceSpec | None = Field(default=None, description="Optional forcing terms.")
    outputs: OutputSpec = Field(default_factory=OutputSpec, description="Output options.")


class VertexLimitConfig(CamelCaseModel):
    """Setup of the shrinking vertex-region study on [-L, L].

    Two edges meet in a vertex region of width delta. The right edge carries u,
    the left edge carries v and the region carries w.
    """

    half_length: float = Field(default=1.0, gt=0.0, description="Edge half-length L.")
    theta: float = Field(default=1.0, ge=0.0, description="Exchange rate with the right edge.")
    mu: float = Field(default=1.0, ge=0.0, description="Exchange rate with the left edge.")
    lambda_: float = Field(
        default=0.0, ge=0.0, alias="lambda", description="Decay rate in the vertex region."
    )
    flux: FluxLaw = Field(default_factory=FluxLaw, description="Edge flux law.")
    reaction: ReactionLaw = Field(default_factory=ReactionLaw, description="Edge reaction.")
    u0: str = Field(default="1", description="Initial data on the right edge, in x.")
    v0: str = Field(default="0", description="Initial data on the left edge, in x.")
    w0: float = Field(default=0.0, description="Initial value in the vertex region.")
    h: float = Field(default=0.01, gt=0.0, description="Edge mesh size.")
    vertex_cells: int = Field(default=8, ge=1, description="Cells across the vertex region.")
    deltas: list[float] = Field(
        default_factory=lambda: [0.2, 0.1, 0.05, 0.025],
        min_length=1,
        description="Decreasing region widths.",
    )
    solver: SolverConfig = Field(
        default_factory=lambda: SolverConfig(dt=1e-3, t_end=0.2),
        description="Time step and Newton options.",
    )

    @field_validator("u0", "v0")
    @classmethod
    def ensure_expression_parses(cls, text: str) -> str:
        """Reject unsupported syntax early."""
        return _check_expression(text)
