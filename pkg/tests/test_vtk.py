"""Tests for the legacy VTK writers."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from netdiff.mesh import EdgeMesh
from netdiff.mesh import mesh_domain
from netdiff.vtk import VTK_LINE
from netdiff.vtk import VTK_TRIANGLE
from netdiff.vtk import render_polydata
from netdiff.vtk import render_unstructured
from netdiff.vtk import write_vtk_polydata
from netdiff.vtk import write_vtk_unstructured

if TYPE_CHECKING:
    from fsspec.implementations.memory import MemoryFileSystem

    from netdiff.geometry import PartitionedDomain


@pytest.fixture()
def edge_mesh() -> EdgeMesh:
    """Edge of length 2 with two cells."""
    return EdgeMesh.uniform(4, np.array([0.0, 0.0]), np.array([0.0, 2.0]), 2)


def test_polydata_layout(edge_mesh: EdgeMesh) -> None:
    """Header, points, lines and point data in order."""
    text = render_polydata(edge_mesh, np.array([1.0, 0.5, 0.25]), title="edge 4")
    lines = text.splitlines()
    assert lines[:4] == ["# vtk DataFile Version 3.0", "edge 4", "ASCII", "DATASET POLYDATA"]
    assert lines[4] == "POINTS 3 double"
    assert lines[6] == "0 1 0"
    assert lines[8:11] == ["LINES 2 6", "2 0 1", "2 1 2"]
    assert lines[11:14] == ["POINT_DATA 3", "SCALARS w double 1", "LOOKUP_TABLE default"]
    assert lines[14:] == ["1", "0.5", "0.25"]
    assert VTK_LINE == 3


def test_unstructured_layout(unit_square: PartitionedDomain) -> None:
    """Triangles are written with their cell type."""
    sub = mesh_domain(unit_square, 0.5).subdomain_mesh(1)
    text = render_unstructured(sub, np.zeros(sub.num_nodes), name="u")
    lines = text.splitlines()
    nt = sub.triangles.shape[0]
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert f"CELLS {nt} {4 * nt}" in lines
    assert f"CELL_TYPES {nt}" in lines
    assert lines.count(str(VTK_TRIANGLE)) >= nt
    assert f"POINT_DATA {sub.num_nodes}" in lines
    assert "SCALARS u double 1" in lines


def test_full_precision(edge_mesh: EdgeMesh) -> None:
    """Values are written with enough digits to round trip."""
    value = 1.0 / 3.0
    text = render_polydata(edge_mesh, np.full(3, value))
    assert float(text.splitlines()[-1]) == value


def test_write_to_filesystem(
    mock_filesystem: MemoryFileSystem, unit_square: PartitionedDomain, edge_mesh: EdgeMesh
) -> None:
    """Writers go through the given filesystem."""
    sub = mesh_domain(unit_square, 0.5).subdomain_mesh(1)
    write_vtk_unstructured(mock_filesystem, "/vtk/u_1.vtk", sub, np.ones(sub.num_nodes))
    write_vtk_polydata(mock_filesystem, "/vtk/w_4.vtk", edge_mesh, np.ones(3))

    with mock_filesystem.open("/vtk/u_1.vtk", "r") as fp:
        assert fp.read().splitlines()[1] == "subdomain 1"
    with mock_filesystem.open("/vtk/w_4.vtk", "r") as fp:
        assert fp.read().splitlines()[1] == "edge 4"
