"""Specification of the polygonal partition and its embedded metric graph."""

from __future__ import annotations

from collections import Counter

from pydantic import Field
from pydantic import field_validator

from netdiff.schema.base import CamelCaseModel


def _ensure_unique_ids(kind: str, ids: list[int]) -> None:
    duplicates = sorted(id_ for id_, count in Counter(ids).items() if count > 1)
    if duplicates:
        msg = f"Duplicate {kind} ids detected: {duplicates}."
        raise ValueError(msg)


class VertexSpec(CamelCaseModel):
    """A graph vertex at a point of the plane.

    Examples:
        >>> VertexSpec(id=1, position=(2.0, 1.2))
        VertexSpec(id=1, position=(2.0, 1.2))
    """

    id: int = Field(..., description="Vertex id k.")  # noqa: A003
    position: tuple[float, float] = Field(..., description="Planar position (x, y).")


class EdgeSpec(CamelCaseModel):
    """A straight edge oriented from its source to its terminal vertex.

    The local coordinate runs from 0 at the source to the edge length at the
    terminal. Waypoints describe a polyline or curved edge; they are accepted by
    the schema so that geometry validation can report them.
    """

    id: int = Field(..., description="Edge id j.")  # noqa: A003
    source: int = Field(..., description="Source vertex id (local coordinate 0).")
    terminal: int = Field(..., description="Terminal vertex id (local coordinate l_j).")
    length: float | None = Field(
        default=None, gt=0, description="Declared length; checked against endpoints."
    )
    waypoints: list[tuple[float, float]] = Field(
        default_factory=list, description="Intermediate points of a non-straight edge."
    )
    subdomains: list[int] | None = Field(
        default=None, description="Declared adjacent subdomain ids; checked against loops."
    )


class LoopEntry(CamelCaseModel):
    """One edge of a subdomain boundary loop with its traversal direction."""

    edge: int = Field(..., description="Edge id.")
    reversed: bool = Field(  # noqa: A003
        default=False, description="Traverse the edge from terminal to source."
    )


class SubdomainSpec(CamelCaseModel):
    """A polygonal subdomain described by its closed boundary loop."""

    id: int = Field(..., description="Subdomain id i.")  # noqa: A003
    loop: list[LoopEntry] = Field(..., min_length=1, description="Ordered boundary loop.")


class GeometrySpec(CamelCaseModel):
    """The full partition: vertices, edges and subdomain loops."""

    vertices: list[VertexSpec] = Field(..., description="Graph vertices.")
    edges: list[EdgeSpec] = Field(..., description="Graph edges.")
    subdomains: list[SubdomainSpec] = Field(..., description="Polygonal subdomains.")

    @field_validator("vertices")
    @classmethod
    def ensure_unique_vertices(cls, vertices: list[VertexSpec]) -> list[VertexSpec]:
        """Check vertex ids are unique."""
        _ensure_unique_ids("vertex", [vertex.id for vertex in vertices])
        return vertices

    @field_validator("edges")
    @classmethod
    def ensure_unique_edges(cls, edges: list[EdgeSpec]) -> list[EdgeSpec]:
        """Check edge ids are unique."""
        _ensure_unique_ids("edge", [edge.id for edge in edges])
        return edges

    @field_validator("subdomains")
    @classmethod
    def ensure_unique_subdomains(cls, subdomains: list[SubdomainSpec]) -> list[SubdomainSpec]:
        """Check subdomain ids are unique."""
        _ensure_unique_ids("subdomain", [subdomain.id for subdomain in subdomains])
        return subdomains
