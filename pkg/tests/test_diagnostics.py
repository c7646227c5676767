"""Tests for mass, norm and energy diagnostics."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from netdiff.analysis.diagnostics import DIAGNOSTIC_COLUMNS
from netdiff.analysis.diagnostics import RunReport
from netdiff.analysis.diagnostics import energy
from netdiff.analysis.diagnostics import relative_mass_drift
from netdiff.analysis.diagnostics import squared_norm
from netdiff.analysis.diagnostics import sup_norms
from netdiff.analysis.diagnostics import total_mass
from netdiff.assembly import DiscreteState
from netdiff.assembly import StateLayout
from netdiff.geometry import PartitionedDomain
from netdiff.mesh import DomainMesh
from netdiff.mesh import mesh_domain
from netdiff.schema.model import ModelSpec


@pytest.fixture()
def square_mesh(unit_square: PartitionedDomain) -> DomainMesh:
    """Unit square meshed with h = 0.25."""
    return mesh_domain(unit_square, 0.25)


def _constant(mesh: DomainMesh, u: float, w: float, z: float) -> DiscreteState:
    state = StateLayout(mesh).zeros()
    for values in state.u.values():
        values[:] = u
    for values in state.w.values():
        values[:] = w
    state.z = dict.fromkeys(state.z, z)
    return state


def test_total_mass(square_mesh: DomainMesh) -> None:
    """Area plus perimeter plus one per vertex."""
    state = _constant(square_mesh, 1.0, 1.0, 1.0)
    assert total_mass(state, square_mesh) == pytest.approx(9.0, rel=1e-12)


def test_squared_norm(square_mesh: DomainMesh) -> None:
    """X of constants is c_u^2 |Omega| + c_w^2 |edges|."""
    state = _constant(square_mesh, 2.0, 0.5, 3.0)
    assert squared_norm(state, square_mesh) == pytest.approx(4.0 + 0.25 * 4.0, rel=1e-12)


def test_energy_linear(square_mesh: DomainMesh) -> None:
    """A unit slope in x has Dirichlet energy 1/2 on the unit square."""
    state = _constant(square_mesh, 0.0, 0.0, 0.0)
    state.u[1] = square_mesh.subdomain_mesh(1).nodes[:, 0].copy()
    assert energy(state, square_mesh, ModelSpec()) == pytest.approx(0.5, rel=1e-12)


def test_energy_edges(square_mesh: DomainMesh) -> None:
    """Edge slopes enter through the edge flux potential."""
    state = _constant(square_mesh, 0.0, 0.0, 0.0)
    edge = square_mesh.edge_mesh(1)
    state.w[1] = 2.0 * edge.nodes
    model = ModelSpec.model_validate({"edgeFlux": {"exponent": 4.0, "regularization": 0.0}})
    assert energy(state, square_mesh, model) == pytest.approx(16.0 / 4.0, rel=1e-12)


def test_sup_norms() -> None:
    """Maximum absolute values per kind."""
    state = DiscreteState(
        u={1: np.array([1.0, -3.0]), 2: np.array([2.0])},
        w={1: np.array([-0.5, 0.25])},
        z={1: 10.0},
    )
    assert sup_norms(state) == (3.0, 0.5)


class TestRunReport:
    """Rows of diagnostics over time."""

    def test_columns(self, square_mesh: DomainMesh) -> None:
        """Scalar columns then one column per vertex."""
        report = RunReport(square_mesh, ModelSpec(), extinction_threshold=1e-12)
        assert report.columns == [*DIAGNOSTIC_COLUMNS, "z_1", "z_2", "z_3", "z_4"]

    def test_rows_and_extinction(self, square_mesh: DomainMesh) -> None:
        """X is compared against its initial value."""
        report = RunReport(square_mesh, ModelSpec(), extinction_threshold=1e-3)
        report.append(0.0, _constant(square_mesh, 1.0, 1.0, 0.0))
        report.append(0.5, _constant(square_mesh, 0.1, 0.1, 0.0))
        report.append(1.0, _constant(square_mesh, 0.01, 0.01, 0.0))

        frame = report.to_dataframe()
        assert isinstance(frame, pd.DataFrame)
        assert list(frame.columns) == [*report.columns[:6], "extinct", *report.columns[6:]]
        assert frame["extinct"].tolist() == [False, False, True]
        np.testing.assert_allclose(report.column("time"), [0.0, 0.5, 1.0])
        assert report.edge_sup == dict.fromkeys((1, 2, 3, 4), 1.0)

    def test_threshold_from_settings(
        self, square_mesh: DomainMesh, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """The threshold defaults to the environment setting."""
        monkeypatch.setenv("NETDIFF_EXTINCTION_THRESHOLD", "0.25")
        assert RunReport(square_mesh, ModelSpec()).extinction_threshold == 0.25


def test_relative_mass_drift() -> None:
    """Drift is scaled by one plus the initial mass."""
    frame = pd.DataFrame({"total_mass": [3.0, 3.5, 2.0]})
    assert relative_mass_drift(frame) == pytest.approx(0.25)
