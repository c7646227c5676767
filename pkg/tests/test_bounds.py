"""Tests for the comparison bound on subdomain values."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING
from typing import Any

import pytest

from netdiff.analysis.bounds import check_comparison_bound
from netdiff.analysis.bounds import comparison_bound
from netdiff.model import CouplingTable
from netdiff.simulation import Simulation

if TYPE_CHECKING:
    from collections.abc import Callable

    from netdiff.schema.run import RunConfig
    from netdiff.timestepper import TimeSeries


def _table(
    alpha: dict[tuple[int, int], float], beta: dict[tuple[int, int], float]
) -> CouplingTable:
    return CouplingTable(alpha=alpha, beta=beta, gamma={}, delta={}, lam={})


class TestComparisonBound:
    """The bound M from coefficients and data."""

    def test_edge_term(self) -> None:
        """alpha / beta scales the edge sup."""
        table = _table({(1, 1): 2.0, (1, 2): 1.0}, {(1, 1): 1.0, (1, 2): 1.0})
        assert comparison_bound(table, {1: 1.5, 2: 4.0}, {1: 0.5}) == 4.0
        assert comparison_bound(table, {1: 3.0, 2: 1.0}, {1: 0.5}) == 6.0

    def test_initial_term(self) -> None:
        """Large initial data dominate."""
        table = _table({(1, 1): 1.0}, {(1, 1): 1.0})
        assert comparison_bound(table, {1: 1.0}, {1: 7.0, 2: 3.0}) == 7.0

    def test_non_positive_beta(self) -> None:
        """beta must be positive on every pair."""
        table = _table({(1, 1): 1.0}, {(1, 1): 0.0})
        with pytest.raises(ValueError, match="beta must be positive"):
            comparison_bound(table, {1: 1.0}, {1: 1.0})


@pytest.fixture()
def constant_series(
    make_config: Callable[..., RunConfig], unit_square_geometry: dict[str, Any]
) -> tuple[Simulation, TimeSeries]:
    """A stationary run with u = w = 1 on the unit square."""
    config = make_config(
        unit_square_geometry,
        initial={"u": {"default": "1"}, "w": {"default": "1"}},
        discretization={"h": 0.25, "dt": 0.01, "tEnd": 0.03},
    )
    simulation = Simulation(config)
    return simulation, simulation.run()


def test_bound_holds(constant_series: tuple[Simulation, TimeSeries]) -> None:
    """A stationary state sits on its bound."""
    simulation, series = constant_series
    check = check_comparison_bound(series, simulation.mesh, simulation.assembler.coefficients)
    assert check.passed
    assert check.bound == pytest.approx(1.0)
    assert check.max_sup_u == pytest.approx(1.0)


def test_bound_holds_with_edge_peak(
    make_config: Callable[..., RunConfig], unit_square_geometry: dict[str, Any]
) -> None:
    """Edge data peaking at 2 bound the subdomain values."""
    config = make_config(
        unit_square_geometry,
        initial={
            "u": {"default": "0.5 + 0.25 * cos(pi * x)"},
            "w": {"default": "1 + sin(pi * arclength)"},
        },
        discretization={"h": 0.1, "dt": 0.01, "tEnd": 0.2},
    )
    simulation = Simulation(config)
    series = simulation.run()
    check = check_comparison_bound(
        series, simulation.mesh, simulation.assembler.coefficients, tolerance=1e-6
    )
    assert check.bound == pytest.approx(2.0)
    assert check.passed
    assert check.max_sup_u > 0.75


def test_exceedance_logged(
    constant_series: tuple[Simulation, TimeSeries], caplog: pytest.LogCaptureFixture
) -> None:
    """Exceedances are collected and logged with the mesh quality."""
    simulation, series = constant_series
    with caplog.at_level(logging.WARNING, logger="netdiff.analysis.bounds"):
        check = check_comparison_bound(
            series, simulation.mesh, simulation.assembler.coefficients, tolerance=-0.5
        )
    assert not check.passed
    assert [time for time, _ in check.exceedances] == series.times
    assert "minimum triangle angle" in caplog.text
