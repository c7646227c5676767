"""Tests for flux and reaction laws, coupling tables and assumption checks."""

from __future__ import annotations

import numpy as np
import pytest

from netdiff.exceptions import CoefficientError
from netdiff.exceptions import DegenerateFluxError
from netdiff.geometry import PartitionedDomain
from netdiff.kernels import power_coefficient
from netdiff.kernels import power_reaction
from netdiff.kernels import power_reaction_derivative
from netdiff.model import CouplingTable
from netdiff.model import antiderivative_eval
from netdiff.model import check_assumptions
from netdiff.model import edge_growth_bound
from netdiff.model import flux_eval
from netdiff.model import flux_jacobian
from netdiff.model import reaction_derivative
from netdiff.model import reaction_eval
from netdiff.model import subdomain_growth_bound
from netdiff.schema.model import CouplingCoefficients
from netdiff.schema.model import FluxLaw
from netdiff.schema.model import FluxVariant
from netdiff.schema.model import ModelSpec
from netdiff.schema.model import ReactionKind
from netdiff.schema.model import ReactionLaw


class TestKernels:
    """Pointwise numba kernels."""

    def test_laplacian_coefficient(self) -> None:
        """p = 2 has a unit coefficient everywhere."""
        s = np.array([0.0, 1.0, 4.0])
        np.testing.assert_array_equal(power_coefficient(s, 2.0, 0.0), 1.0)

    def test_unregularized_zero(self) -> None:
        """The p > 2 coefficient vanishes at a zero gradient."""
        assert power_coefficient(0.0, 4.0, 0.0) == 0.0
        assert power_coefficient(4.0, 4.0, 0.0) == pytest.approx(4.0)

    def test_power_reaction_odd(self) -> None:
        """The power law is odd with f(0) = 0."""
        s = np.array([-4.0, 0.0, 4.0])
        np.testing.assert_allclose(power_reaction(s, 2.0, 1.5), [-4.0, 0.0, 4.0])

    @pytest.mark.parametrize(("sigma", "expected"), [(1.5, 0.0), (2.0, 3.0)])
    def test_power_reaction_derivative_at_zero(self, sigma: float, expected: float) -> None:
        """The derivative at zero is c for sigma = 2 and 0 below."""
        assert power_reaction_derivative(0.0, 3.0, sigma) == expected


class TestFlux:
    """Flux evaluation and its derivatives."""

    def test_laplacian_identity(self) -> None:
        """For p = 2 the flux is the gradient itself."""
        gradient = np.array([[1.0, -2.0], [0.5, 0.25]])
        law = FluxLaw(exponent=2.0)
        np.testing.assert_array_equal(flux_eval(law, gradient), gradient)
        expected = np.broadcast_to(np.eye(2), (2, 2, 2))
        np.testing.assert_array_equal(flux_jacobian(law, gradient), expected)

    def test_p_laplacian_scalar(self) -> None:
        """|g|^(p-2) g for a scalar edge slope."""
        law = FluxLaw(exponent=3.0, regularization=0.0)
        assert flux_eval(law, -2.0) == pytest.approx(-4.0)
        assert flux_jacobian(law, -2.0) == pytest.approx(4.0)

    def test_linear_plus_variant(self) -> None:
        """The linear-plus flux adds the gradient."""
        law = FluxLaw(exponent=4.0, variant=FluxVariant.LINEAR_PLUS, regularization=0.0)
        np.testing.assert_allclose(flux_eval(law, np.array([[1.0, 1.0]])), [[3.0, 3.0]])

    @pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
    def test_jacobian_matches_difference(self, p: float) -> None:
        """The Jacobian agrees with central differences of the flux."""
        law = FluxLaw(exponent=p, regularization=1e-3)
        g = np.array([0.7, -0.4])
        step = 1e-6
        columns = [
            (flux_eval(law, g + step * e) - flux_eval(law, g - step * e)) / (2 * step)
            for e in np.eye(2)
        ]
        np.testing.assert_allclose(flux_jacobian(law, g), np.column_stack(columns), rtol=1e-6)

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_antiderivative(self, p: float) -> None:
        """The potential is |g|^p / p without smoothing."""
        law = FluxLaw(exponent=p, regularization=0.0)
        g = np.array([3.0, 4.0])
        assert antiderivative_eval(law, g) == pytest.approx(5.0**p / p)
        assert antiderivative_eval(law, np.zeros(2)) == 0.0

    def test_degenerate_jacobian(self) -> None:
        """An unregularized p > 2 flux has no Jacobian at a zero gradient."""
        law = FluxLaw(exponent=3.0, regularization=0.0)
        with pytest.raises(DegenerateFluxError, match="regularization"):
            flux_jacobian(law, np.zeros((1, 2)))

    def test_regularized_jacobian_at_zero(self) -> None:
        """Smoothing makes the Jacobian finite at a zero gradient."""
        law = FluxLaw(exponent=3.0, regularization=1e-8)
        assert np.isfinite(flux_jacobian(law, np.zeros((1, 2)))).all()


class TestReaction:
    """Reaction laws."""

    @pytest.mark.parametrize(
        ("law", "s", "value", "derivative"),
        [
            (ReactionLaw(), 3.0, 0.0, 0.0),
            (ReactionLaw(kind=ReactionKind.LINEAR, coefficient=0.5), -2.0, -1.0, 0.5),
            (ReactionLaw(kind=ReactionKind.POWER, coefficient=2.0, exponent=1.5), 4.0, 4.0, 0.5),
            (ReactionLaw(kind=ReactionKind.POWER, coefficient=1.0, exponent=3.0), -2.0, -4.0, 4.0),
        ],
    )
    def test_values(self, law: ReactionLaw, s: float, value: float, derivative: float) -> None:
        """Worked values of f and f'."""
        assert reaction_eval(law, s) == pytest.approx(value)
        assert reaction_derivative(law, s) == pytest.approx(derivative)


class TestGrowthBounds:
    """Admissibility bounds on the reaction growth."""

    @pytest.mark.parametrize(("p", "bound"), [(2.0, 3.0), (3.0, 2.0 * 4.0 / 3.0 + 2.0)])
    def test_subdomain_bound(self, p: float, bound: float) -> None:
        """2 (p-1)^2 / p + 2."""
        assert subdomain_growth_bound(p) == pytest.approx(bound)

    @pytest.mark.parametrize(("p", "bound"), [(2.0, 4.0), (4.0, 10.0 * 3.0 / 4.0 + 2.0)])
    def test_edge_bound(self, p: float, bound: float) -> None:
        """(3p-2)(p-1)/p + 2."""
        assert edge_growth_bound(p) == pytest.approx(bound)


class TestCouplingTable:
    """Resolving coefficient tables on the incidence pairs."""

    def test_defaults_fill_pairs(self, two_rect: PartitionedDomain) -> None:
        """Every incident pair gets the default."""
        table = CouplingTable.resolve(two_rect, CouplingCoefficients())
        pairs = {(1, 1), (1, 5), (1, 6), (1, 7), (2, 2), (2, 3), (2, 4), (2, 7)}
        assert set(table.alpha) == pairs
        assert all(value == 1.0 for value in table.alpha.values())
        assert (2, 1, 2) in table.gamma
        assert (2, 2, 1) in table.gamma
        assert table.gamma[(2, 1, 7)] == 0.0
        assert not table.is_populated(2, [1, 2, 7])

    def test_entries_override(self, two_rect: PartitionedDomain) -> None:
        """Entries replace the default on their pair only."""
        coefficients = CouplingCoefficients.model_validate(
            {
                "gamma": {
                    "default": 1.0,
                    "entries": [{"vertex": 2, "source": 1, "target": 7, "value": 3.0}],
                },
                "delta": {"entries": [{"vertex": 5, "edge": 7, "value": 2.0}]},
            }
        )
        table = CouplingTable.resolve(two_rect, coefficients)
        assert table.gamma[(2, 1, 7)] == 3.0
        assert table.gamma[(2, 7, 1)] == 1.0
        assert table.delta[(5, 7)] == 2.0
        assert table.is_populated(5, [4, 5, 7])

    def test_missing_default(self, two_rect: PartitionedDomain) -> None:
        """Without a default only listed pairs are present."""
        coefficients = CouplingCoefficients.model_validate({"alpha": {"default": None}})
        table = CouplingTable.resolve(two_rect, coefficients)
        assert table.alpha == {}

    def test_non_incident_entries(self, two_rect: PartitionedDomain) -> None:
        """Entries naming non-incident pairs are located errors."""
        coefficients = CouplingCoefficients.model_validate(
            {
                "alpha": {"entries": [{"subdomain": 1, "edge": 3, "value": 1.0}]},
                "gamma": {"entries": [{"vertex": 1, "source": 1, "target": 4, "value": 1.0}]},
                "lambda": {"entries": [{"vertex": 3, "edge": 1, "value": 1.0}]},
            }
        )
        with pytest.raises(CoefficientError) as excinfo:
            CouplingTable.resolve(two_rect, coefficients)
        lines = str(excinfo.value).splitlines()
        assert lines[0].startswith("model.coefficients.alpha.entries[0]: ")
        assert lines[1].startswith("model.coefficients.lambda.entries[0]: ")
        assert lines[2].startswith("model.coefficients.gamma.entries[0]: ")


class TestCheckAssumptions:
    """Admissibility of a model on a partition."""

    def test_default_model_passes(
        self, figure1: PartitionedDomain, two_rect: PartitionedDomain
    ) -> None:
        """The default model is admissible."""
        assert check_assumptions(ModelSpec(), figure1) == []
        assert check_assumptions(ModelSpec(), two_rect) == []

    def test_growth_violation(self, unit_square: PartitionedDomain) -> None:
        """A reaction growing too fast for p = 2 is reported."""
        spec = ModelSpec.model_validate(
            {"subdomainReaction": {"kind": "power", "coefficient": 1.0, "exponent": 4.5}}
        )
        violations = check_assumptions(spec, unit_square)
        assert [(v.kind, v.location) for v in violations] == [
            ("growth", "model.subdomainReaction")
        ]

    def test_growth_respects_p(self, unit_square: PartitionedDomain) -> None:
        """A larger p admits faster growth."""
        spec = ModelSpec.model_validate(
            {"subdomainReaction": {"kind": "power", "coefficient": 1.0, "exponent": 4.5}}
        )
        assert check_assumptions(spec, unit_square, p=4.0) == []

    def test_non_monotone(self, unit_square: PartitionedDomain) -> None:
        """Power laws with sigma <= 1 are not monotone."""
        spec = ModelSpec.model_validate(
            {"edgeReaction": {"kind": "power", "coefficient": 1.0, "exponent": 0.5}}
        )
        kinds = {v.kind for v in check_assumptions(spec, unit_square)}
        assert kinds == {"monotone"}

    def test_non_positive_alpha(self, unit_square: PartitionedDomain) -> None:
        """alpha must be positive on every pair."""
        spec = ModelSpec.model_validate(
            {"coefficients": {"alpha": {"entries": [{"subdomain": 1, "edge": 2, "value": 0.0}]}}}
        )
        violations = check_assumptions(spec, unit_square)
        assert [(v.kind, v.location) for v in violations] == [
            ("coefficient", "subdomain 1, edge 2")
        ]

    def test_partially_populated(self, unit_square: PartitionedDomain) -> None:
        """delta and lambda are all zero or all positive at a vertex."""
        spec = ModelSpec.model_validate(
            {"coefficients": {"delta": {"entries": [{"vertex": 1, "edge": 1, "value": 1.0}]}}}
        )
        violations = check_assumptions(spec, unit_square)
        assert ("population", "vertex 1") in {(v.kind, v.location) for v in violations}

    def test_balance(self, unit_square: PartitionedDomain) -> None:
        """Inflow by transfer must not exceed delta plus outflow."""
        spec = ModelSpec.model_validate(
            {
                "coefficients": {
                    "gamma": {
                        "entries": [{"vertex": 2, "source": 1, "target": 2, "value": 1.0}]
                    }
                }
            }
        )
        violations = check_assumptions(spec, unit_square)
        assert [(v.kind, v.location) for v in violations] == [("balance", "vertex 2, edge 2")]
