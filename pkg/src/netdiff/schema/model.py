"""Specification of flux laws, reaction laws and coupling coefficients."""

from __future__ import annotations

from enum import StrEnum

from pydantic import Field
from pydantic import model_validator

from netdiff.schema.base import CamelCaseModel


class FluxVariant(StrEnum):
    """Shape of the quasilinear flux.

    ``pure_p_laplacian`` is |g|^(p-2) g and ``linear_plus_p_laplacian`` is
    (1 + |g|^(p-2)) g.
    """

    PURE = "pure_p_laplacian"
    LINEAR_PLUS = "linear_plus_p_laplacian"


class ReactionKind(StrEnum):
    """Supported monotone reaction laws."""

    ZERO = "zero"
    LINEAR = "linear"
    POWER = "power"


class FluxLaw(CamelCaseModel):
    """A p-Laplacian type flux with optional smoothing.

    Examples:
        The plain Laplacian:

        >>> FluxLaw(exponent=2.0)

        A regularized 4-Laplacian with an added linear part:

        >>> FluxLaw(exponent=4.0, variant="linear_plus_p_laplacian", regularization=1e-6)
    """

    exponent: float = Field(default=2.0, ge=2.0, description="Growth index p.")
    variant: FluxVariant = Field(default=FluxVariant.PURE, description="Flux shape.")
    regularization: float = Field(
        default=1e-8,
        ge=0.0,
        description="Smoothing epsilon in (eps^2 + |g|^2)^((p-2)/2).",
    )


class ReactionLaw(CamelCaseModel):
    """A reaction term f(s) from the zero, linear or power family.

    The power law is c |s|^(sigma-2) s. Its growth exponent, the q or r that
    enters the admissibility bounds, is sigma - 1.
    """

    kind: ReactionKind = Field(default=ReactionKind.ZERO, description="Reaction family.")
    coefficient: float = Field(default=0.0, ge=0.0, description="Rate constant c.")
    exponent: float = Field(
        default=2.0, gt=0.0, description="Power sigma, only used by the power kind."
    )

    @property
    def growth_exponent(self) -> float:
        """Growth exponent q (or r) such that |f(s)| <= C (1 + |s|^q)."""
        if self.kind == ReactionKind.POWER:
            return self.exponent - 1.0
        if self.kind == ReactionKind.LINEAR:
            return 1.0
        return 0.0


class PairValue(CamelCaseModel):
    """Coefficient on a subdomain-edge incidence pair."""

    subdomain: int = Field(..., description="Subdomain id i.")
    edge: int = Field(..., description="Edge id j.")
    value: float = Field(..., description="Coefficient value.")


class VertexEdgeValue(CamelCaseModel):
    """Coefficient on a vertex-edge incidence pair."""

    vertex: int = Field(..., description="Vertex id k.")
    edge: int = Field(..., description="Edge id j.")
    value: float = Field(..., ge=0.0, description="Coefficient value.")


class TransferValue(CamelCaseModel):
    """Transfer rate gamma from edge ``source`` into edge ``target`` at a vertex."""

    vertex: int = Field(..., description="Vertex id k.")
    source: int = Field(..., description="Edge the material leaves.")
    target: int = Field(..., description="Edge the material enters.")
    value: float = Field(..., ge=0.0, description="Transfer rate.")

    @model_validator(mode="after")
    def ensure_distinct_edges(self) -> TransferValue:
        """A transfer needs two different edges."""
        if self.source == self.target:
            msg = f"Transfer at vertex {self.vertex} must join two different edges."
            raise ValueError(msg)
        return self


class PairTable(CamelCaseModel):
    """Table of alpha or beta values, filled from the default where not listed."""

    default: float | None = Field(default=1.0, description="Value for unlisted pairs.")
    entries: list[PairValue] = Field(default_factory=list, description="Explicit values.")


class VertexEdgeTable(CamelCaseModel):
    """Table of delta or lambda values, filled from the default where not listed."""

    default: float | None = Field(default=0.0, ge=0.0, description="Value for unlisted pairs.")
    entries: list[VertexEdgeValue] = Field(
        default_factory=list, description="Explicit values."
    )


class TransferTable(CamelCaseModel):
    """Table of gamma values, filled from the default where not listed."""

    default: float | None = Field(default=0.0, ge=0.0, description="Value for unlisted pairs.")
    entries: list[TransferValue] = Field(default_factory=list, description="Explicit values.")


class CouplingCoefficients(CamelCaseModel):
    """All exchange coefficient tables of the model."""

    alpha: PairTable = Field(default_factory=PairTable, description="Edge-to-subdomain rate.")
    beta: PairTable = Field(default_factory=PairTable, description="Subdomain-to-edge rate.")
    gamma: TransferTable = Field(
        default_factory=TransferTable, description="Edge-to-edge transfer at vertices."
    )
    delta: VertexEdgeTable = Field(
        default_factory=VertexEdgeTable, description="Edge-to-vertex rate."
    )
    lambda_: VertexEdgeTable = Field(
        default_factory=VertexEdgeTable,
        alias="lambda",
        description="Vertex-to-edge rate.",
    )


class ModelSpec(CamelCaseModel):
    """The full reaction-diffusion model on subdomains, edges and vertices."""

    subdomain_flux: FluxLaw = Field(default_factory=FluxLaw, description="Flux kappa.")
    edge_flux: FluxLaw = Field(default_factory=FluxLaw, description="Flux eta.")
    subdomain_reaction: ReactionLaw = Field(
        default_factory=ReactionLaw, description="Reaction f."
    )
    edge_reaction: ReactionLaw = Field(default_factory=ReactionLaw, description="Reaction g.")
    coefficients: CouplingCoefficients = Field(
        default_factory=CouplingCoefficients, description="Coupling coefficient tables."
    )
