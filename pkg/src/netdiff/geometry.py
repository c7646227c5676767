"""Polygonal partition of the domain by an embedded metric graph.

The partition is ingested from a :class:`~netdiff.schema.geometry.GeometrySpec`
and validated, never inferred. Vertices, edges and subdomains keep the ids
of the configuration; positions in the ascending id order are available
through bijective maps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from dataclasses import field
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import shapely
from bidict import frozenbidict
from shapely.geometry import LineString
from shapely.geometry import Polygon

from netdiff.exceptions import GeometryError

if TYPE_CHECKING:
    from shapely.geometry.base import BaseGeometry

    from netdiff.schema.geometry import GeometrySpec

logger = logging.getLogger(__name__)


class EdgeEnd(StrEnum):
    """Which end of an edge touches a vertex."""

    SOURCE = "source"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class Vertex:
    """A graph vertex v_k."""

    id: int  # noqa: A003
    position: tuple[float, float]


@dataclass(frozen=True)
class Edge:
    """A straight graph edge e_j with local coordinate 0 at the source."""

    id: int  # noqa: A003
    source: int
    terminal: int
    length: float
    adjacent_subdomains: frozenset[int]
    declared_length: float | None = None
    declared_subdomains: frozenset[int] | None = None
    waypoints: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Subdomain:
    """A polygonal subdomain given by its boundary loop of (edge id, reversed)."""

    id: int  # noqa: A003
    boundary_loop: tuple[tuple[int, bool], ...]


@dataclass(frozen=True)
class Violation:
    """One violated admissibility condition.

    Attributes:
        kind: Short machine readable category.
        location: Entity the violation refers to, e.g. ``vertex 5``.
        message: Human readable description.
    """

    kind: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


@dataclass(frozen=True)
class PartitionedDomain:
    """Vertices, edges and subdomains of the partition with incidence queries.

    Instances are immutable and safe to share between threads.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    subdomains: tuple[Subdomain, ...]
    tolerance: float = 1e-12
    _vertex_by_id: dict[int, Vertex] = field(init=False, repr=False, compare=False)
    _edge_by_id: dict[int, Edge] = field(init=False, repr=False, compare=False)
    _subdomain_by_id: dict[int, Subdomain] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_vertex_by_id", {v.id: v for v in self.vertices})
        object.__setattr__(self, "_edge_by_id", {e.id: e for e in self.edges})
        object.__setattr__(self, "_subdomain_by_id", {s.id: s for s in self.subdomains})

    @classmethod
    def from_spec(cls, spec: GeometrySpec, tolerance: float = 1e-12) -> PartitionedDomain:
        """Build the domain from its configuration section.

        Edge lengths are computed from the endpoint positions; a declared
        length is kept for validation. Adjacent subdomains come from the loops.
        """
        positions = {vertex.id: vertex.position for vertex in spec.vertices}

        adjacency: dict[int, set[int]] = {edge.id: set() for edge in spec.edges}
        for subdomain in spec.subdomains:
            for entry in subdomain.loop:
                adjacency.setdefault(entry.edge, set()).add(subdomain.id)

        edges = []
        for edge in spec.edges:
            if edge.source in positions and edge.terminal in positions:
                start = np.asarray(positions[edge.source])
                end = np.asarray(positions[edge.terminal])
                length = float(np.hypot(*(end - start)))
            else:
                length = math.nan

            declared = frozenset(edge.subdomains) if edge.subdomains is not None else None
            edges.append(
                Edge(
                    id=edge.id,
                    source=edge.source,
                    terminal=edge.terminal,
                    length=length,
                    adjacent_subdomains=frozenset(adjacency[edge.id]),
                    declared_length=edge.length,
                    declared_subdomains=declared,
                    waypoints=tuple(edge.waypoints),
                )
            )

        vertices = [Vertex(id=v.id, position=v.position) for v in spec.vertices]
        subdomains = [
            Subdomain(
                id=s.id,
                boundary_loop=tuple((entry.edge, entry.reversed) for entry in s.loop),
            )
            for s in spec.subdomains
        ]

        return cls(
            vertices=tuple(sorted(vertices, key=lambda v: v.id)),
            edges=tuple(sorted(edges, key=lambda e: e.id)),
            subdomains=tuple(sorted(subdomains, key=lambda s: s.id)),
            tolerance=tolerance,
        )

    @cached_property
    def vertex_index(self) -> frozenbidict[int, int]:
        """Vertex id to position in ascending id order."""
        return frozenbidict({vertex.id: idx for idx, vertex in enumerate(self.vertices)})

    @cached_property
    def edge_index(self) -> frozenbidict[int, int]:
        """Edge id to position in ascending id order."""
        return frozenbidict({edge.id: idx for idx, edge in enumerate(self.edges)})

    @cached_property
    def subdomain_index(self) -> frozenbidict[int, int]:
        """Subdomain id to position in ascending id order."""
        return frozenbidict({sub.id: idx for idx, sub in enumerate(self.subdomains)})

    def vertex(self, k: int) -> Vertex:
        """Vertex by id."""
        try:
            return self._vertex_by_id[k]
        except KeyError as err:
            msg = f"Unknown vertex id {k}."
            raise GeometryError(msg) from err

    def edge(self, j: int) -> Edge:
        """Edge by id."""
        try:
            return self._edge_by_id[j]
        except KeyError as err:
            msg = f"Unknown edge id {j}."
            raise GeometryError(msg) from err

    def subdomain(self, i: int) -> Subdomain:
        """Subdomain by id."""
        try:
            return self._subdomain_by_id[i]
        except KeyError as err:
            msg = f"Unknown subdomain id {i}."
            raise GeometryError(msg) from err

    def edge_points(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Source and terminal positions of an edge."""
        edge = self.edge(j)
        start = np.asarray(self.vertex(edge.source).position, dtype=np.float64)
        end = np.asarray(self.vertex(edge.terminal).position, dtype=np.float64)
        return start, end

    def degree(self, k: int) -> int:
        """Number of edge ends at a vertex (D_k)."""
        return len(edges_at_vertex(self, k))

    def is_interior(self, j: int) -> bool:
        """True when the edge separates two subdomains."""
        return len(self.edge(j).adjacent_subdomains) == 2  # noqa: PLR2004

    def loop_vertices(self, i: int) -> list[int]:
        """Vertex ids visited by the boundary loop, start of each oriented edge."""
        ids = []
        for j, reverse in self.subdomain(i).boundary_loop:
            edge = self.edge(j)
            ids.append(edge.terminal if reverse else edge.source)
        return ids

    def polygon(self, i: int) -> Polygon:
        """Shapely polygon of a subdomain."""
        coords = [self.vertex(k).position for k in self.loop_vertices(i)]
        return Polygon(coords)

    @cached_property
    def hull(self) -> BaseGeometry:
        """Union of all subdomain closures."""
        return shapely.union_all([self.polygon(s.id) for s in self.subdomains])

    @property
    def diameter(self) -> float:
        """Diameter of the vertex set bounding box."""
        points = np.array([vertex.position for vertex in self.vertices])
        return float(np.hypot(*np.ptp(points, axis=0)))


def edges_at_vertex(domain: PartitionedDomain, k: int) -> list[tuple[int, EdgeEnd]]:
    """Edges touching a vertex, ascending by edge id.

    Args:
        domain: The partitioned domain.
        k: Vertex id.

    Returns:
        Pairs of edge id and the end of that edge located at the vertex.

    Raises:
        GeometryError: If the vertex id is unknown.
    """
    domain.vertex(k)

    incident = []
    for edge in domain.edges:
        if edge.source == k:
            incident.append((edge.id, EdgeEnd.SOURCE))
        if edge.terminal == k and edge.source != k:
            incident.append((edge.id, EdgeEnd.TERMINAL))
    return sorted(incident, key=lambda item: item[0])


def edges_of_subdomain(domain: PartitionedDomain, i: int) -> list[int]:
    """Edge ids on the boundary loop of a subdomain, deduplicated and ascending.

    Raises:
        GeometryError: If the subdomain id is unknown.
    """
    subdomain = domain.subdomain(i)
    return sorted({j for j, _ in subdomain.boundary_loop})


def validate_geometry(domain: PartitionedDomain) -> list[Violation]:  # noqa: C901, PLR0912
    """Report every violated admissibility condition of a partition.

    Checks cover dangling references, vertex degree, edge lengths, curved and
    degenerate edges, loop closure and simplicity, orphan and overused edges,
    declared adjacency, hull consistency, overlaps and connectedness. The
    function has no side effects; an empty list means the partition is admissible.
    """
    violations: list[Violation] = []
    vertex_ids = {vertex.id for vertex in domain.vertices}
    edge_ids = {edge.id for edge in domain.edges}
    rtol = domain.tolerance

    def add(kind: str, location: str, message: str) -> None:
        violations.append(Violation(kind=kind, location=location, message=message))

    broken_edges = set()
    for edge in domain.edges:
        for end, k in (("source", edge.source), ("terminal", edge.terminal)):
            if k not in vertex_ids:
                add("reference", f"edge {edge.id}", f"{end} vertex {k} does not exist")
                broken_edges.add(edge.id)

    broken_loops = set()
    for subdomain in domain.subdomains:
        for j, _ in subdomain.boundary_loop:
            if j not in edge_ids:
                add("reference", f"subdomain {subdomain.id}", f"edge {j} does not exist")
                broken_loops.add(subdomain.id)
            elif j in broken_edges:
                broken_loops.add(subdomain.id)

    for vertex in domain.vertices:
        degree = domain.degree(vertex.id)
        if degree < 2:  # noqa: PLR2004
            add("degree", f"vertex {vertex.id}", f"degree {degree} is below 2")

    for edge in domain.edges:
        location = f"edge {edge.id}"
        if edge.id in broken_edges:
            continue
        if edge.source == edge.terminal or edge.length <= rtol * domain.diameter:
            add("degenerate", location, "endpoints coincide")
            continue
        if edge.waypoints:
            add("curved", location, "only straight edges are supported")
        if edge.declared_length is not None and not math.isclose(
            edge.declared_length, edge.length, rel_tol=rtol, abs_tol=0.0
        ):
            add(
                "length",
                location,
                f"declared length {edge.declared_length!r} differs from endpoint "
                f"distance {edge.length!r}",
            )
        uses = len(edge.adjacent_subdomains)
        if uses == 0:
            add("orphan", location, "edge belongs to no subdomain loop")
        if uses > 2:  # noqa: PLR2004
            add("overused", location, f"edge belongs to {uses} subdomain loops")
        declared = edge.declared_subdomains
        if declared is not None and declared != edge.adjacent_subdomains:
            add(
                "adjacency",
                location,
                f"declared subdomains {sorted(declared)} differ from loops "
                f"{sorted(edge.adjacent_subdomains)}",
            )

    polygons = {}
    for subdomain in domain.subdomains:
        if subdomain.id in broken_loops:
            continue
        location = f"subdomain {subdomain.id}"
        if _loop_is_open(domain, subdomain):
            add("open_loop", location, "boundary loop is not closed")
            continue
        polygon = domain.polygon(subdomain.id)
        if not polygon.is_valid or polygon.area <= rtol * domain.diameter**2:
            add("polygon", location, "boundary loop is not a simple polygon")
            continue
        polygons[subdomain.id] = polygon

    if len(polygons) == len(domain.subdomains) and polygons:
        violations.extend(_check_union(domain, polygons))

    return violations


def _loop_is_open(domain: PartitionedDomain, subdomain: Subdomain) -> bool:
    ends = []
    for j, reverse in subdomain.boundary_loop:
        edge = domain.edge(j)
        start, end = (edge.terminal, edge.source) if reverse else (edge.source, edge.terminal)
        ends.append((start, end))
    return any(ends[n][1] != ends[(n + 1) % len(ends)][0] for n in range(len(ends)))


def _check_union(domain: PartitionedDomain, polygons: dict[int, Polygon]) -> list[Violation]:
    violations = []
    scale = domain.diameter
    area_tol = domain.tolerance * max(scale**2, 1.0) * 1e3

    ids = sorted(polygons)
    for n, first in enumerate(ids):
        for second in ids[n + 1 :]:
            overlap = polygons[first].intersection(polygons[second]).area
            if overlap > area_tol:
                violations.append(
                    Violation(
                        kind="overlap",
                        location=f"subdomain {first}",
                        message=f"interior overlaps subdomain {second}",
                    )
                )

    hull = shapely.union_all(list(polygons.values()))
    if hull.geom_type != "Polygon":
        violations.append(
            Violation(kind="disconnected", location="domain", message="union is not connected")
        )
        return violations

    boundary = hull.boundary
    width = 1e-9 * max(scale, 1.0)
    for edge in domain.edges:
        if not edge.adjacent_subdomains or edge.waypoints:
            continue
        start, end = domain.edge_points(edge.id)
        on_hull = boundary.buffer(width).covers(LineString([start, end]))
        interior = len(edge.adjacent_subdomains) == 2  # noqa: PLR2004
        if interior and on_hull:
            violations.append(
                Violation(
                    kind="hull",
                    location=f"edge {edge.id}",
                    message="edge separates two subdomains but lies on the outer boundary",
                )
            )
        if not interior and not on_hull:
            violations.append(
                Violation(
                    kind="hull",
                    location=f"edge {edge.id}",
                    message="edge bounds one subdomain but lies inside the domain",
                )
            )

    logger.debug("Validated partition with %d subdomains", len(polygons))
    return violations
