"""Tests for the junction matrices, state layout and residual assembly."""

from __future__ import annotations

import math
from typing import Any

import numpy as np
import pytest

from netdiff.assembly import DiscreteState
from netdiff.assembly import StateLayout
from netdiff.assembly import SystemAssembler
from netdiff.assembly import build_junction_system
from netdiff.exceptions import AssemblyError
from netdiff.exceptions import CoefficientError
from netdiff.geometry import PartitionedDomain
from netdiff.mesh import DomainMesh
from netdiff.mesh import mesh_domain
from netdiff.model import CouplingTable
from netdiff.schema.geometry import GeometrySpec
from netdiff.schema.model import ModelSpec
from netdiff.schema.run import VertexUpdate


def _star(degree: int, rng: np.random.Generator) -> PartitionedDomain:
    """A vertex 0 with ``degree`` edges of random orientation."""
    vertices = [{"id": 0, "position": [0.0, 0.0]}]
    edges = []
    for j in range(1, degree + 1):
        angle = 2.0 * math.pi * j / degree
        vertices.append({"id": j, "position": [math.cos(angle), math.sin(angle)]})
        ends = (0, j) if rng.random() < 0.5 else (j, 0)
        edges.append({"id": j, "source": ends[0], "terminal": ends[1]})
    spec = GeometrySpec.model_validate({"vertices": vertices, "edges": edges, "subdomains": []})
    return PartitionedDomain.from_spec(spec)


def _random_table(
    degree: int, rng: np.random.Generator, *, symmetric: bool = False
) -> CouplingTable:
    gamma = {}
    for a in range(1, degree + 1):
        for b in range(a + 1, degree + 1):
            forward = float(rng.uniform(0.0, 1.0))
            backward = forward if symmetric else float(rng.uniform(0.0, 1.0))
            gamma[(0, a, b)] = forward
            gamma[(0, b, a)] = backward
    return CouplingTable(
        alpha={},
        beta={},
        gamma=gamma,
        delta={(0, j): float(rng.uniform(0.0, 2.0)) for j in range(1, degree + 1)},
        lam={(0, j): float(rng.uniform(0.0, 1.0)) for j in range(1, degree + 1)},
    )


class TestJunctionSystem:
    """Algebraic properties of N, E and lambda."""

    def test_random_sweep(self) -> None:
        """Columns of N sum to zero and row dominance matches the balance condition."""
        rng = np.random.default_rng(2024)
        for draw in range(1000):
            degree = 2 + draw % 4
            domain = _star(degree, rng)
            table = _random_table(degree, rng)
            junction = build_junction_system(domain, table, 0)
            n = junction.transfer
            operator = junction.operator

            np.testing.assert_allclose(n.sum(axis=0), 0.0, atol=1e-14)
            assert np.all(np.diag(n) >= 0.0)
            assert np.all(n - np.diag(np.diag(n)) <= 0.0)

            off = np.abs(operator).sum(axis=1) - np.abs(np.diag(operator))
            inflow = -(n.sum(axis=1) - np.diag(n))
            outflow = np.diag(n)
            dominant = np.abs(np.diag(operator)) >= off - 1e-14
            balanced = junction.delta + outflow >= inflow - 1e-14
            np.testing.assert_array_equal(dominant, balanced)

            column_off = np.abs(operator).sum(axis=0) - np.abs(np.diag(operator))
            assert np.all(np.diag(operator) >= column_off - 1e-14)

    @pytest.mark.parametrize("degree", [2, 3, 4, 5])
    def test_symmetric_rows_vanish(self, degree: int) -> None:
        """Rows of N sum to zero when transfer is symmetric."""
        rng = np.random.default_rng(degree)
        table = _random_table(degree, rng, symmetric=True)
        junction = build_junction_system(_star(degree, rng), table, 0)
        np.testing.assert_allclose(junction.transfer.sum(axis=1), 0.0, atol=1e-14)

    def test_asymmetric_rows(self) -> None:
        """One-way transfer leaves non-zero row sums."""
        rng = np.random.default_rng(0)
        table = _random_table(2, rng)
        table.gamma[(0, 1, 2)] = 1.0
        table.gamma[(0, 2, 1)] = 0.0
        junction = build_junction_system(_star(2, rng), table, 0)
        np.testing.assert_array_equal(junction.transfer, [[1.0, 0.0], [-1.0, 0.0]])
        np.testing.assert_array_equal(junction.transfer.sum(axis=1), [1.0, -1.0])

    def test_accessors(self, two_rect: PartitionedDomain) -> None:
        """Edge order, rates and positions at a degree three vertex."""
        coefficients = ModelSpec.model_validate(
            {"coefficients": {"delta": {"default": 2.0}, "lambda": {"default": 0.5}}}
        ).coefficients
        junction = build_junction_system(two_rect, CouplingTable.resolve(two_rect, coefficients), 2)
        assert junction.edge_order == (1, 2, 7)
        np.testing.assert_array_equal(junction.delta, [2.0, 2.0, 2.0])
        assert junction.total_rate == 1.5
        assert junction.populated
        assert junction.position(7) == 2
        with pytest.raises(AssemblyError, match="does not meet"):
            junction.position(4)

    def test_unpopulated(self, two_rect: PartitionedDomain) -> None:
        """Zero delta and lambda leave the vertex unpopulated."""
        table = CouplingTable.resolve(two_rect, ModelSpec().coefficients)
        assert not build_junction_system(two_rect, table, 1).populated

    def test_missing_gamma(self, two_rect: PartitionedDomain) -> None:
        """A transfer rate with no default is reported."""
        coefficients = ModelSpec.model_validate(
            {"coefficients": {"gamma": {"default": None}}}
        ).coefficients
        table = CouplingTable.resolve(two_rect, coefficients)
        with pytest.raises(CoefficientError, match="gamma at vertex 2"):
            build_junction_system(two_rect, table, 2)


class TestStateLayout:
    """Flattening of discrete states."""

    def test_blocks(self, unit_square: PartitionedDomain) -> None:
        """Subdomains come first, then edges, then vertices."""
        mesh = mesh_domain(unit_square, 0.5)
        layout = StateLayout(mesh)
        sub = mesh.subdomain_mesh(1)
        assert layout.u_slice(1) == slice(0, sub.num_nodes)
        assert layout.w_slice(1).start == sub.num_nodes
        assert layout.num_field == sub.num_nodes + 4 * 3
        assert layout.size == layout.num_field + 4
        assert layout.z_index(4) == layout.size - 1

    def test_vector_round_trip(self, unit_square: PartitionedDomain) -> None:
        """A random vector survives splitting and flattening."""
        layout = StateLayout(mesh_domain(unit_square, 0.5))
        x = np.random.default_rng(1).normal(size=layout.size)
        np.testing.assert_array_equal(layout.to_vector(layout.from_vector(x)), x)

    def test_bad_vector(self, unit_square: PartitionedDomain) -> None:
        """Vectors of the wrong size are rejected."""
        layout = StateLayout(mesh_domain(unit_square, 0.5))
        with pytest.raises(AssemblyError, match="Expected a vector"):
            layout.from_vector(np.zeros(3))

    def test_missing_block(self, unit_square: PartitionedDomain) -> None:
        """A state without an edge block cannot be flattened."""
        layout = StateLayout(mesh_domain(unit_square, 0.5))
        state = layout.zeros()
        del state.w[3]
        with pytest.raises(AssemblyError, match="no block for id 3"):
            layout.to_vector(state)

    def test_block_size(self, unit_square: PartitionedDomain) -> None:
        """A block of the wrong length is rejected."""
        layout = StateLayout(mesh_domain(unit_square, 0.5))
        state = layout.zeros()
        state.w[2] = np.zeros(7)
        with pytest.raises(AssemblyError, match="edge 2"):
            layout.to_vector(state)

    def test_state_helpers(self) -> None:
        """Copies are deep and finiteness covers every block."""
        state = DiscreteState(u={1: np.ones(2)}, w={1: np.ones(2)}, z={1: 0.0})
        copy = state.copy()
        copy.u[1][0] = math.nan
        assert state.is_finite()
        assert not copy.is_finite()
        copy.u[1][0] = 1.0
        copy.z[1] = math.inf
        assert not copy.is_finite()


def _assembler(mesh: DomainMesh, model: dict[str, Any], **kwargs: Any) -> SystemAssembler:
    return SystemAssembler(mesh, ModelSpec.model_validate(model), **kwargs)


_NONLINEAR_MODEL = {
    "subdomainFlux": {"exponent": 4.0, "regularization": 1e-3},
    "edgeFlux": {"exponent": 3.0, "regularization": 1e-3},
    "subdomainReaction": {"kind": "power", "coefficient": 1.0, "exponent": 1.5},
    "edgeReaction": {"kind": "power", "coefficient": 0.5, "exponent": 1.5},
    "coefficients": {
        "alpha": {"default": 1.5},
        "beta": {"default": 0.75},
        "gamma": {
            "default": 0.2,
            "entries": [{"vertex": 2, "source": 1, "target": 7, "value": 0.6}],
        },
        "delta": {"default": 1.0},
        "lambda": {"default": 0.5},
    },
}


class TestSystemAssembler:
    """Residual and tangent of one step."""

    def test_constant_state_is_stationary(self, two_rect: PartitionedDomain) -> None:
        """A constant state balances when alpha equals beta and transfer is symmetric."""
        mesh = mesh_domain(two_rect, 0.25)
        assembler = _assembler(mesh, {"coefficients": {"gamma": {"default": 0.7}}})
        x = np.full(assembler.size, 1.5)
        x[assembler.layout.num_field :] = 0.0
        residual = assembler.assemble_residual(x, x, 0.1)
        np.testing.assert_allclose(residual, 0.0, atol=1e-12)

    @pytest.mark.parametrize("update", [VertexUpdate.BACKWARD_EULER, VertexUpdate.EXACT])
    def test_tangent_matches_difference(
        self, two_rect: PartitionedDomain, update: VertexUpdate
    ) -> None:
        """The tangent agrees with central differences of the residual."""
        mesh = mesh_domain(two_rect, 0.5)
        assembler = _assembler(mesh, _NONLINEAR_MODEL, vertex_update=update)
        rng = np.random.default_rng(11)
        x = rng.uniform(1.0, 2.0, assembler.size)
        x_prev = rng.uniform(1.0, 2.0, assembler.size)
        dt = 0.1

        tangent = assembler.assemble_tangent(x, x_prev, dt).toarray()
        step = 1e-6
        columns = []
        for n in range(assembler.size):
            e = np.zeros(assembler.size)
            e[n] = step
            plus = assembler.assemble_residual(x + e, x_prev, dt)
            minus = assembler.assemble_residual(x - e, x_prev, dt)
            columns.append((plus - minus) / (2 * step))
        np.testing.assert_allclose(tangent, np.column_stack(columns), rtol=1e-5, atol=1e-6)

    def test_threads_bitwise_equal(self, figure1: PartitionedDomain) -> None:
        """The residual does not depend on the worker count."""
        mesh = mesh_domain(figure1, 0.5)
        serial = _assembler(mesh, _NONLINEAR_MODEL, threads=1)
        threaded = _assembler(mesh, _NONLINEAR_MODEL, threads=4)
        x = np.random.default_rng(3).uniform(1.0, 2.0, serial.size)
        np.testing.assert_array_equal(
            serial.assemble_residual(x, x, 0.01), threaded.assemble_residual(x, x, 0.01)
        )

    def test_residual_state(self, unit_square: PartitionedDomain) -> None:
        """States and flat vectors give the same residual."""
        assembler = _assembler(mesh_domain(unit_square, 0.5), {})
        state = assembler.layout.zeros()
        state.u[1][:] = 1.0
        x = assembler.layout.to_vector(state)
        np.testing.assert_array_equal(
            assembler.residual_state(state, state, 0.1), assembler.assemble_residual(x, x, 0.1)
        )

    @pytest.mark.parametrize(
        ("size_delta", "dt", "bad_value", "match"),
        [
            (1, 0.1, None, "Expected state vectors"),
            (0, 0.0, None, "Time step must be positive"),
            (0, 0.1, math.nan, "NaN"),
        ],
    )
    def test_invalid_input(
        self,
        unit_square: PartitionedDomain,
        size_delta: int,
        dt: float,
        bad_value: float | None,
        match: str,
    ) -> None:
        """Sizes, steps and values are checked before assembly."""
        assembler = _assembler(mesh_domain(unit_square, 0.5), {})
        x = np.zeros(assembler.size + size_delta)
        if bad_value is not None:
            x[0] = bad_value
        with pytest.raises(AssemblyError, match=match):
            assembler.assemble_residual(x, x, dt)
        with pytest.raises(AssemblyError, match=match):
            assembler.assemble_tangent(x, x, dt)

    def test_missing_robin_coefficient(self, unit_square: PartitionedDomain) -> None:
        """alpha is needed on every incident pair."""
        with pytest.raises(CoefficientError, match="Missing alpha or beta"):
            _assembler(
                mesh_domain(unit_square, 0.5), {"coefficients": {"alpha": {"default": None}}}
            )

    def test_robin_coefficients(self, unit_square: PartitionedDomain) -> None:
        """Entries override the table default per pair."""
        assembler = _assembler(
            mesh_domain(unit_square, 0.5),
            {"coefficients": {"beta": {"entries": [{"subdomain": 1, "edge": 3, "value": 4.0}]}}},
        )
        assert assembler.robin_coefficients(1, 3) == (1.0, 4.0)
        assert assembler.robin_coefficients(1, 2) == (1.0, 1.0)
