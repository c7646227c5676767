"""Conforming P1 meshes of subdomains and edges with their trace maps.

Every edge is partitioned first. Each subdomain triangulation then reuses
exactly those edge nodes on its boundary, so subdomain traces and edge
functions live on the same nodes and the coupling integrals are exact for
piecewise linear functions.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import shapely
from bidict import frozenbidict
from scipy import sparse
from scipy.spatial import Delaunay
from shapely.geometry import Polygon

from netdiff.exceptions import MeshError
from netdiff.geometry import EdgeEnd
from netdiff.geometry import edges_at_vertex

if TYPE_CHECKING:
    from collections.abc import Iterator

    from numpy.typing import NDArray

    from netdiff.geometry import PartitionedDomain
    from netdiff.geometry import Subdomain

logger = logging.getLogger(__name__)

# Steiner points closer than this fraction of h to the boundary are dropped.
BOUNDARY_CLEARANCE = 0.45
MAX_EDGE_REFINEMENTS = 5
MAX_DIAMETER_PASSES = 10

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_LOCAL_EDGE_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


@dataclass(frozen=True)
class EdgeMesh:
    """Uniform 1D partition of an edge in its local arclength coordinate.

    Attributes:
        edge_id: Edge id.
        nodes: Ascending arclength coordinates, first 0 and last the edge length.
        start: Planar position of the source vertex.
        end: Planar position of the terminal vertex.
    """

    edge_id: int
    nodes: NDArray[np.float64]
    start: NDArray[np.float64]
    end: NDArray[np.float64]

    @classmethod
    def uniform(
        cls, edge_id: int, start: NDArray[np.float64], end: NDArray[np.float64], cells: int
    ) -> EdgeMesh:
        """Partition an edge into equal cells."""
        length = float(np.hypot(*(end - start)))
        nodes = np.linspace(0.0, length, cells + 1)
        nodes[-1] = length
        return cls(edge_id=edge_id, nodes=nodes, start=start, end=end)

    @property
    def length(self) -> float:
        """Edge length."""
        return float(self.nodes[-1])

    @property
    def num_nodes(self) -> int:
        """Number of nodes."""
        return int(self.nodes.size)

    @property
    def cells(self) -> NDArray[np.int64]:
        """Consecutive node pairs."""
        idx = np.arange(self.num_nodes - 1)
        return np.column_stack([idx, idx + 1])

    @cached_property
    def cell_lengths(self) -> NDArray[np.float64]:
        """Length of every cell."""
        return np.diff(self.nodes)

    @cached_property
    def positions(self) -> NDArray[np.float64]:
        """Planar coordinates of the nodes."""
        direction = (self.end - self.start) / self.length
        return self.start[None, :] + self.nodes[:, None] * direction[None, :]

    @cached_property
    def node_weights(self) -> NDArray[np.float64]:
        """Integrals of the P1 basis functions."""
        weights = np.zeros(self.num_nodes)
        weights[:-1] += 0.5 * self.cell_lengths
        weights[1:] += 0.5 * self.cell_lengths
        return weights

    @cached_property
    def mass_matrix(self) -> sparse.csr_matrix:
        """Consistent P1 mass matrix."""
        cells = self.cells
        local = self.cell_lengths[:, None, None] * _LOCAL_EDGE_MASS[None, :, :]
        rows = np.repeat(cells, 2, axis=1).ravel()
        cols = np.tile(cells, (1, 2)).ravel()
        shape = (self.num_nodes, self.num_nodes)
        return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()


@dataclass(frozen=True)
class SubdomainMesh:
    """P1 triangulation of a subdomain.

    Attributes:
        subdomain_id: Subdomain id.
        nodes: Planar node coordinates.
        triangles: Counter-clockwise node triples.
        boundary_facets: Per edge id, the facets on that edge ordered by
            arclength, as (node pair, facet length).
        edge_nodes: Per edge id, the subdomain node ids aligned with the edge
            mesh nodes.
    """

    subdomain_id: int
    nodes: NDArray[np.float64]
    triangles: NDArray[np.int64]
    boundary_facets: dict[int, list[tuple[tuple[int, int], float]]]
    edge_nodes: dict[int, NDArray[np.int64]] = field(repr=False)

    @property
    def num_nodes(self) -> int:
        """Number of nodes."""
        return int(self.nodes.shape[0])

    @cached_property
    def areas(self) -> NDArray[np.float64]:
        """Triangle areas."""
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def gradients(self) -> NDArray[np.float64]:
        """Constant gradients of the three local basis functions, shape (nt, 3, 2)."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice_area = 2.0 * self.areas
        grads = np.empty((self.triangles.shape[0], 3, 2))
        grads[:, 0, 0] = y[:, 1] - y[:, 2]
        grads[:, 0, 1] = x[:, 2] - x[:, 1]
        grads[:, 1, 0] = y[:, 2] - y[:, 0]
        grads[:, 1, 1] = x[:, 0] - x[:, 2]
        grads[:, 2, 0] = y[:, 0] - y[:, 1]
        grads[:, 2, 1] = x[:, 1] - x[:, 0]
        return grads / twice_area[:, None, None]

    @cached_property
    def node_weights(self) -> NDArray[np.float64]:
        """Integrals of the P1 basis functions."""
        weights = np.repeat(self.areas / 3.0, 3)
        return np.bincount(self.triangles.ravel(), weights=weights, minlength=self.num_nodes)

    @cached_property
    def mass_matrix(self) -> sparse.csr_matrix:
        """Consistent P1 mass matrix."""
        local = self.areas[:, None, None] * _LOCAL_MASS[None, :, :]
        rows = np.repeat(self.triangles, 3, axis=1).ravel()
        cols = np.tile(self.triangles, (1, 3)).ravel()
        shape = (self.num_nodes, self.num_nodes)
        return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()

    @cached_property
    def side_lengths(self) -> NDArray[np.float64]:
        """Lengths of the sides opposite each local vertex, shape (nt, 3)."""
        p = self.nodes[self.triangles]
        return np.stack(
            [
                np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
                np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            ],
            axis=1,
        )

    @property
    def max_diameter(self) -> float:
        """Largest triangle diameter."""
        return float(self.side_lengths.max())

    @property
    def min_angle(self) -> float:
        """Smallest interior angle in degrees."""
        a, b, c = self.side_lengths.T
        cos_a = (b**2 + c**2 - a**2) / (2 * b * c)
        cos_b = (a**2 + c**2 - b**2) / (2 * a * c)
        cos_c = (a**2 + b**2 - c**2) / (2 * a * b)
        angles = np.degrees(np.arccos(np.clip([cos_a, cos_b, cos_c], -1.0, 1.0)))
        return float(angles.min())


@dataclass(frozen=True)
class TraceMap:
    """Bijections between edge mesh nodes and subdomain boundary nodes.

    ``pairs[(i, j)]`` maps edge node index to subdomain node index for every
    incident pair of subdomain i and edge j.
    """

    pairs: dict[tuple[int, int], frozenbidict[int, int]]

    def subdomain_nodes(self, i: int, j: int) -> NDArray[np.int64]:
        """Subdomain node ids in edge node order.

        Raises:
            MeshError: If edge j is not on the boundary of subdomain i.
        """
        mapping = self._get(i, j)
        return np.array([mapping[n] for n in range(len(mapping))], dtype=np.int64)

    def _get(self, i: int, j: int) -> frozenbidict[int, int]:
        try:
            return self.pairs[(i, j)]
        except KeyError as err:
            msg = f"Edge {j} is not on the boundary of subdomain {i}."
            raise MeshError(msg) from err

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.pairs))


@dataclass(frozen=True)
class VertexTrace:
    """Edge mesh node realizing each (edge, vertex) incidence."""

    nodes: dict[tuple[int, int], int]

    def node(self, j: int, k: int) -> int:
        """Edge node index of edge j located at vertex k.

        Raises:
            MeshError: If the edge does not touch the vertex.
        """
        try:
            return self.nodes[(j, k)]
        except KeyError as err:
            msg = f"Edge {j} does not touch vertex {k}."
            raise MeshError(msg) from err


@dataclass(frozen=True)
class DomainMesh:
    """All meshes of a partition together with their trace maps."""

    domain: PartitionedDomain
    h: float
    subdomains: tuple[SubdomainMesh, ...]
    edges: tuple[EdgeMesh, ...]
    traces: TraceMap
    vertex_traces: VertexTrace

    def subdomain_mesh(self, i: int) -> SubdomainMesh:
        """Mesh of a subdomain by id."""
        return self.subdomains[self.domain.subdomain_index[i]]

    def edge_mesh(self, j: int) -> EdgeMesh:
        """Mesh of an edge by id."""
        return self.edges[self.domain.edge_index[j]]

    @property
    def min_angle(self) -> float:
        """Smallest triangle angle over all subdomains, in degrees."""
        return min(mesh.min_angle for mesh in self.subdomains)

    @property
    def num_triangles(self) -> int:
        """Total triangle count."""
        return sum(mesh.triangles.shape[0] for mesh in self.subdomains)


def lift_edge_values(
    mesh: DomainMesh, i: int, j: int, edge_values: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Copy edge nodal values onto the matching boundary nodes of a subdomain.

    Returns a full subdomain nodal vector that is zero away from edge j.

    Raises:
        MeshError: If edge j is not on the boundary of subdomain i.
    """
    target = mesh.traces.subdomain_nodes(i, j)
    values = np.asarray(edge_values, dtype=np.float64)
    if values.shape != target.shape:
        msg = f"Expected {target.size} edge values for edge {j}, got {values.size}."
        raise MeshError(msg)
    lifted = np.zeros(mesh.subdomain_mesh(i).num_nodes)
    lifted[target] = values
    return lifted


def scatter_to_edge(
    mesh: DomainMesh, i: int, j: int, subdomain_values: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Transpose of :func:`lift_edge_values`: restrict subdomain values to edge j.

    Raises:
        MeshError: If edge j is not on the boundary of subdomain i.
    """
    source = mesh.traces.subdomain_nodes(i, j)
    return np.asarray(subdomain_values, dtype=np.float64)[source].copy()


def mesh_domain(domain: PartitionedDomain, target_h: float, threads: int = 1) -> DomainMesh:
    """Build conforming meshes of all edges and subdomains.

    Args:
        domain: A validated partition.
        target_h: Target mesh size; edge cells are at most this long.
        threads: Subdomains are triangulated concurrently when above 1.

    Returns:
        Subdomain meshes, edge meshes, trace map and vertex trace.

    Raises:
        MeshError: On a non-positive size, a degenerate polygon or when a
            conforming triangulation cannot be found.
    """
    if not target_h > 0:
        msg = f"Mesh size must be positive, got {target_h}."
        raise MeshError(msg)

    lengths = {edge.id: edge.length for edge in domain.edges}
    shortest = min(lengths.values())
    h = target_h
    if h > shortest:
        h = 0.5 * shortest
        logger.warning(
            "Mesh size %g exceeds the shortest edge length %g; using %g.", target_h, shortest, h
        )

    cells = {j: max(1, math.ceil(length / h - 1e-9)) for j, length in lengths.items()}

    for attempt in range(MAX_EDGE_REFINEMENTS + 1):
        edge_meshes = {
            edge.id: EdgeMesh.uniform(edge.id, *domain.edge_points(edge.id), cells[edge.id])
            for edge in domain.edges
        }

        def build(subdomain: Subdomain) -> tuple[SubdomainMesh, set[int]]:
            return _triangulate(domain, subdomain, edge_meshes, h)  # noqa: B023

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                results = list(executor.map(build, domain.subdomains))
        else:
            results = [build(subdomain) for subdomain in domain.subdomains]

        missing = set().union(*(result[1] for result in results))
        if not missing:
            break

        logger.info("Refining edges %s to recover boundary segments.", sorted(missing))
        for j in missing:
            cells[j] *= 2
    else:
        msg = (
            f"Could not recover boundary segments of edges {sorted(missing)} after "
            f"{attempt} refinements."
        )
        raise MeshError(msg)

    subdomain_meshes = tuple(result[0] for result in results)
    edges = tuple(edge_meshes[edge.id] for edge in domain.edges)

    traces = _build_traces(domain, subdomain_meshes, edge_meshes)
    vertex_traces = _build_vertex_traces(domain, edge_meshes)

    logger.debug(
        "Meshed %d subdomains with %d triangles and %d edges.",
        len(subdomain_meshes),
        sum(mesh.triangles.shape[0] for mesh in subdomain_meshes),
        len(edges),
    )
    return DomainMesh(
        domain=domain,
        h=h,
        subdomains=subdomain_meshes,
        edges=edges,
        traces=traces,
        vertex_traces=vertex_traces,
    )


def _boundary_nodes(
    domain: PartitionedDomain, subdomain: Subdomain, edge_meshes: dict[int, EdgeMesh]
) -> tuple[NDArray[np.float64], dict[int, NDArray[np.int64]], NDArray[np.int64]]:
    """Loop nodes, per-edge node ids and the edge id owning each boundary segment."""
    loop = subdomain.boundary_loop
    total = sum(edge_meshes[j].num_nodes - 1 for j, _ in loop)

    points = []
    edge_nodes = {}
    segment_edge = np.empty(total, dtype=np.int64)
    offset = 0
    for j, reverse in loop:
        mesh = edge_meshes[j]
        n = mesh.num_nodes
        oriented = mesh.positions[::-1] if reverse else mesh.positions
        points.append(oriented[:-1])

        along = np.arange(n)
        steps = n - 1 - along if reverse else along
        edge_nodes[j] = (offset + steps) % total
        segment_edge[offset : offset + n - 1] = j
        offset += n - 1

    return np.vstack(points), edge_nodes, segment_edge


def _steiner_points(polygon: Polygon, h: float) -> NDArray[np.float64]:
    """Equilateral lattice points inside the polygon, clear of its boundary."""
    minx, miny, maxx, maxy = polygon.bounds
    dy = h * math.sqrt(3.0) / 2.0
    rows = np.arange(miny, maxy + dy, dy)
    cols = np.arange(minx, maxx + h, h)

    xx, yy = np.meshgrid(cols, rows)
    xx = xx + 0.5 * h * (np.arange(rows.size) % 2)[:, None]
    candidates = np.column_stack([xx.ravel(), yy.ravel()])

    inside = shapely.contains_xy(polygon, candidates[:, 0], candidates[:, 1])
    candidates = candidates[inside]
    if candidates.size == 0:
        return candidates.reshape(0, 2)

    clearance = shapely.distance(polygon.exterior, shapely.points(candidates))
    return candidates[clearance > BOUNDARY_CLEARANCE * h]


def _triangulate(
    domain: PartitionedDomain,
    subdomain: Subdomain,
    edge_meshes: dict[int, EdgeMesh],
    h: float,
) -> tuple[SubdomainMesh, set[int]]:
    boundary, edge_nodes, segment_edge = _boundary_nodes(domain, subdomain, edge_meshes)
    polygon = Polygon(boundary)
    if not polygon.is_valid or polygon.area <= 0.0:
        msg = f"Subdomain {subdomain.id} has a degenerate boundary polygon."
        raise MeshError(msg)

    num_boundary = boundary.shape[0]
    points = np.vstack([boundary, _steiner_points(polygon, h)])

    for _ in range(MAX_DIAMETER_PASSES):
        triangles = _delaunay_inside(points, polygon, h)
        sides = _side_vectors(points, triangles)
        lengths = np.linalg.norm(sides, axis=2)
        oversized = lengths.max(axis=1) > 2.0 * h
        if not oversized.any():
            break

        longest = lengths[oversized].argmax(axis=1)
        tri = triangles[oversized]
        first = tri[np.arange(tri.shape[0]), (longest + 1) % 3]
        second = tri[np.arange(tri.shape[0]), (longest + 2) % 3]
        midpoints = np.unique(0.5 * (points[first] + points[second]), axis=0)
        inside = shapely.contains_xy(polygon, midpoints[:, 0], midpoints[:, 1])
        if not inside.any():
            break
        points = np.vstack([points, midpoints[inside]])
    else:
        logger.warning("Subdomain %d keeps triangles above twice the mesh size.", subdomain.id)

    # Drop Steiner points that ended up outside every kept triangle.
    used = np.zeros(points.shape[0], dtype=bool)
    used[triangles.ravel()] = True
    used[:num_boundary] = True
    renumber = np.cumsum(used) - 1
    points = points[used]
    triangles = renumber[triangles]

    present = {tuple(sorted(pair)) for pair in triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)}
    missing = set()
    for b in range(num_boundary):
        segment = tuple(sorted((b, (b + 1) % num_boundary)))
        if segment not in present:
            missing.add(int(segment_edge[b]))

    if not missing:
        p = points[triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        area = float(0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]).sum())
        if not math.isclose(area, polygon.area, rel_tol=1e-10):
            msg = (
                f"Triangle areas of subdomain {subdomain.id} sum to {area!r}, "
                f"polygon area is {polygon.area!r}."
            )
            raise MeshError(msg)

    facets = {}
    for j, ids in edge_nodes.items():
        mesh = edge_meshes[j]
        facets[j] = [
            ((int(ids[n]), int(ids[n + 1])), float(mesh.cell_lengths[n]))
            for n in range(mesh.num_nodes - 1)
        ]

    result = SubdomainMesh(
        subdomain_id=subdomain.id,
        nodes=points,
        triangles=triangles.astype(np.int64),
        boundary_facets=facets,
        edge_nodes=edge_nodes,
    )
    return result, missing


def _side_vectors(points: NDArray[np.float64], triangles: NDArray[np.int64]) -> NDArray[np.float64]:
    """Side vectors p1-p2, p2-p0 and p0-p1 of every triangle, shape (nt, 3, 2)."""
    p = points[triangles]
    return np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)


def _delaunay_inside(
    points: NDArray[np.float64], polygon: Polygon, h: float
) -> NDArray[np.int64]:
    """Delaunay triangles with centroids inside the polygon, oriented counter-clockwise."""
    simplices = Delaunay(points).simplices
    centroids = points[simplices].mean(axis=1)
    simplices = simplices[shapely.contains_xy(polygon, centroids[:, 0], centroids[:, 1])]

    p = points[simplices]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    simplices = simplices[np.abs(signed) > 1e-12 * h * h]
    signed = signed[np.abs(signed) > 1e-12 * h * h]

    flip = signed < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    return simplices.astype(np.int64)


def _build_traces(
    domain: PartitionedDomain,
    subdomain_meshes: tuple[SubdomainMesh, ...],
    edge_meshes: dict[int, EdgeMesh],
) -> TraceMap:
    pairs = {}
    for mesh in subdomain_meshes:
        for j, ids in mesh.edge_nodes.items():
            edge_mesh = edge_meshes[j]
            mismatch = np.abs(mesh.nodes[ids] - edge_mesh.positions).max()
            if mismatch > 1e-10 * edge_mesh.length:
                msg = (
                    f"Boundary nodes of subdomain {mesh.subdomain_id} do not match "
                    f"edge {j} nodes (mismatch {mismatch:.3e})."
                )
                raise MeshError(msg)
            pairs[(mesh.subdomain_id, j)] = frozenbidict(
                {n: int(node) for n, node in enumerate(ids)}
            )

    for edge in domain.edges:
        for i in edge.adjacent_subdomains:
            if (i, edge.id) not in pairs:
                msg = f"No trace map for subdomain {i} and edge {edge.id}."
                raise MeshError(msg)

    return TraceMap(pairs=pairs)


def _build_vertex_traces(
    domain: PartitionedDomain, edge_meshes: dict[int, EdgeMesh]
) -> VertexTrace:
    nodes = {}
    for vertex in domain.vertices:
        position = np.asarray(vertex.position)
        for j, end in edges_at_vertex(domain, vertex.id):
            mesh = edge_meshes[j]
            index = 0 if end == EdgeEnd.SOURCE else mesh.num_nodes - 1
            gap = np.hypot(*(mesh.positions[index] - position))
            if gap > 1e-10 * max(mesh.length, 1.0):
                msg = f"Edge {j} endpoint does not match vertex {vertex.id}."
                raise MeshError(msg)
            nodes[(j, vertex.id)] = index
    return VertexTrace(nodes=nodes)
