"""A configured simulation: partition, checks, meshes, assembler and time loop."""

from __future__ import annotations

import logging
from functools import cached_property
from typing import TYPE_CHECKING

from netdiff.assembly import SystemAssembler
from netdiff.config import NetdiffSettings
from netdiff.exceptions import GeometryError
from netdiff.exceptions import ModelError
from netdiff.geometry import PartitionedDomain
from netdiff.geometry import validate_geometry
from netdiff.mesh import mesh_domain
from netdiff.model import check_assumptions
from netdiff.timestepper import interpolate_initial
from netdiff.timestepper import run

if TYPE_CHECKING:
    from netdiff.assembly import DiscreteState
    from netdiff.geometry import Violation
    from netdiff.mesh import DomainMesh
    from netdiff.schema.run import RunConfig
    from netdiff.timestepper import TimeSeries

logger = logging.getLogger(__name__)


class Simulation:
    """Everything needed to integrate one run configuration.

    Meshes and the assembler are built on first access.

    Args:
        config: Validated run configuration.
        settings: Process settings; read from the environment when omitted.
        allow_violations: Log model assumption violations instead of raising.
    """

    def __init__(
        self,
        config: RunConfig,
        settings: NetdiffSettings | None = None,
        allow_violations: bool = False,
    ):
        self.config = config
        self.settings = settings if settings is not None else NetdiffSettings()
        self.allow_violations = allow_violations
        self.domain = PartitionedDomain.from_spec(
            config.geometry, tolerance=self.settings.geometry_tolerance
        )

    @cached_property
    def geometry_violations(self) -> list[Violation]:
        """Admissibility failures of the partition."""
        return validate_geometry(self.domain)

    @cached_property
    def assumption_violations(self) -> list[Violation]:
        """Admissibility failures of the model on the partition."""
        return check_assumptions(self.config.model, self.domain)

    def check(self) -> None:
        """Raise on geometry violations and, unless allowed, on model violations.

        Raises:
            GeometryError: If the partition is not admissible.
            ModelError: If a model assumption fails and violations are not allowed.
        """
        if self.geometry_violations:
            lines = "\n".join(str(v) for v in self.geometry_violations)
            msg = f"Geometry is not admissible:\n{lines}"
            raise GeometryError(msg)

        if not self.assumption_violations:
            return
        lines = "\n".join(str(v) for v in self.assumption_violations)
        if not self.allow_violations:
            msg = f"Model assumptions are violated:\n{lines}"
            raise ModelError(msg)
        for violation in self.assumption_violations:
            logger.warning("Assumption violated, continuing: %s", violation)

    @cached_property
    def mesh(self) -> DomainMesh:
        """Conforming meshes of the partition."""
        self.check()
        return mesh_domain(self.domain, self.config.discretization.h, self.settings.threads)

    @cached_property
    def assembler(self) -> SystemAssembler:
        """Residual and tangent of the configured model."""
        discretization = self.config.discretization
        return SystemAssembler(
            self.mesh,
            self.config.model,
            sources=self.config.sources,
            vertex_update=discretization.resolved_vertex_update,
            threads=self.settings.threads,
        )

    @cached_property
    def initial_state(self) -> DiscreteState:
        """Nodal interpolation of the initial data."""
        return interpolate_initial(self.assembler.layout, self.config.initial)

    def run(self) -> TimeSeries:
        """Integrate to the final time.

        Raises:
            StepFailure: If a time step fails.
        """
        logger.info(
            "Running %d unknowns on %d triangles, dt=%g, t_end=%g",
            self.assembler.size,
            self.mesh.num_triangles,
            self.config.discretization.dt,
            self.config.discretization.t_end,
        )
        return run(
            self.assembler,
            self.initial_state,
            self.config.discretization,
            extinction_threshold=self.settings.extinction_threshold,
        )
