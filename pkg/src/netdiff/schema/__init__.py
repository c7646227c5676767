"""Data models for geometry, model and run configurations."""

from netdiff.schema.geometry import EdgeSpec
from netdiff.schema.geometry import GeometrySpec
from netdiff.schema.geometry import LoopEntry
from netdiff.schema.geometry import SubdomainSpec
from netdiff.schema.geometry import VertexSpec
from netdiff.schema.model import CouplingCoefficients
from netdiff.schema.model import FluxLaw
from netdiff.schema.model import FluxVariant
from netdiff.schema.model import ModelSpec
from netdiff.schema.model import ReactionKind
from netdiff.schema.model import ReactionLaw
from netdiff.schema.run import DiscretizationSpec
from netdiff.schema.run import InitialSpec
from netdiff.schema.run import OutputSpec
from netdiff.schema.run import RunConfig
from netdiff.schema.run import Scheme
from netdiff.schema.run import SolverConfig
from netdiff.schema.run import SourceSpec
from netdiff.schema.run import VertexLimitConfig
from netdiff.schema.run import VertexUpdate

__all__ = [
    "CouplingCoefficients",
    "DiscretizationSpec",
    "EdgeSpec",
    "FluxLaw",
    "FluxVariant",
    "GeometrySpec",
    "InitialSpec",
    "LoopEntry",
    "ModelSpec",
    "OutputSpec",
    "ReactionKind",
    "ReactionLaw",
    "RunConfig",
    "Scheme",
    "SolverConfig",
    "SourceSpec",
    "SubdomainSpec",
    "VertexLimitConfig",
    "VertexSpec",
    "VertexUpdate",
]
