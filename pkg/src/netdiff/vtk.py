"""Legacy VTK ASCII writers for subdomain and edge snapshots.

Files are rendered to text and written through an fsspec filesystem, so the
same code targets local directories and in-memory stores.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from fsspec import AbstractFileSystem
    from numpy.typing import NDArray

    from netdiff.mesh import EdgeMesh
    from netdiff.mesh import SubdomainMesh

VTK_LINE = 3
VTK_TRIANGLE = 5

_HEADER = "# vtk DataFile Version 3.0"


def _points_block(points: NDArray[np.float64]) -> list[str]:
    lines = [f"POINTS {points.shape[0]} double"]
    lines.extend(f"{x:.17g} {y:.17g} 0" for x, y in points)
    return lines


def _cells_block(keyword: str, cells: NDArray[np.int64]) -> list[str]:
    count, size = cells.shape
    lines = [f"{keyword} {count} {count * (size + 1)}"]
    lines.extend(f"{size} " + " ".join(str(int(n)) for n in cell) for cell in cells)
    return lines


def _point_data(name: str, values: NDArray[np.float64]) -> list[str]:
    lines = [f"POINT_DATA {values.size}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines.extend(f"{v:.17g}" for v in values)
    return lines


def render_unstructured(
    mesh: SubdomainMesh, values: NDArray[np.float64], name: str = "u", title: str = "netdiff"
) -> str:
    """Render a subdomain triangulation with nodal values as an UnstructuredGrid."""
    lines = [_HEADER, title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines += _points_block(mesh.nodes)
    lines += _cells_block("CELLS", mesh.triangles)
    lines.append(f"CELL_TYPES {mesh.triangles.shape[0]}")
    lines.extend([str(VTK_TRIANGLE)] * mesh.triangles.shape[0])
    lines += _point_data(name, np.asarray(values, dtype=np.float64))
    return "\n".join(lines) + "\n"


def render_polydata(
    mesh: EdgeMesh, values: NDArray[np.float64], name: str = "w", title: str = "netdiff"
) -> str:
    """Render an edge mesh with nodal values as PolyData lines."""
    lines = [_HEADER, title, "ASCII", "DATASET POLYDATA"]
    lines += _points_block(mesh.positions)
    lines += _cells_block("LINES", mesh.cells)
    lines += _point_data(name, np.asarray(values, dtype=np.float64))
    return "\n".join(lines) + "\n"


def write_vtk_unstructured(
    fs: AbstractFileSystem, path: str, mesh: SubdomainMesh, values: NDArray[np.float64]
) -> None:
    """Write a subdomain snapshot to ``path`` on ``fs``."""
    with fs.open(path, "w") as fp:
        fp.write(render_unstructured(mesh, values, title=f"subdomain {mesh.subdomain_id}"))


def write_vtk_polydata(
    fs: AbstractFileSystem, path: str, mesh: EdgeMesh, values: NDArray[np.float64]
) -> None:
    """Write an edge snapshot to ``path`` on ``fs``."""
    with fs.open(path, "w") as fp:
        fp.write(render_polydata(mesh, values, title=f"edge {mesh.edge_id}"))
