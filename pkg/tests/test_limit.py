"""Tests for the shrinking vertex-region study."""

from __future__ import annotations

from typing import TYPE_CHECKING
from typing import Any

import numpy as np
import pytest

from netdiff.analysis.limit import STUDY_COLUMNS
from netdiff.analysis.limit import solve_delta_model
from netdiff.analysis.limit import solve_limit_model
from netdiff.analysis.limit import vertex_limit_study
from netdiff.exceptions import LimitStudyError
from netdiff.schema.run import VertexLimitConfig

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path


def _config(**overrides: Any) -> VertexLimitConfig:
    document = {
        "h": 0.05,
        "vertexCells": 4,
        "deltas": [0.2, 0.1],
        "solver": {"dt": 0.01, "tEnd": 0.05},
    }
    document.update(overrides)
    return VertexLimitConfig.model_validate(document)


class TestSymmetry:
    """Equal exchange rates and mirrored data give mirrored solutions."""

    def test_delta_model(self) -> None:
        """v is u reflected through the origin."""
        config = _config(
            theta=0.7,
            mu=0.7,
            u0="1 + x",
            v0="1 - x",
            reaction={"kind": "linear", "coefficient": 0.3},
        )
        solution = solve_delta_model(config, 0.1)
        np.testing.assert_allclose(solution.left_x, -solution.right_x[::-1], atol=1e-14)
        np.testing.assert_allclose(solution.v[::-1], solution.u, atol=1e-10)
        np.testing.assert_allclose(solution.w, solution.w[::-1], atol=1e-10)

    def test_limit_model(self) -> None:
        """The limit problem keeps the same symmetry."""
        config = _config(theta=2.0, mu=2.0, u0="1 + x", v0="1 - x")
        solution = solve_limit_model(config)
        np.testing.assert_allclose(solution.v[::-1], solution.u, atol=1e-10)
        assert solution.vertex_x.size == 0


class TestConservation:
    """Without decay and reactions the weighted mass is constant."""

    def test_delta_model(self) -> None:
        """Edge masses plus the region mass scaled by 1/delta."""
        solution = solve_delta_model(_config(u0="1 + cos(pi * x)", v0="0.5", w0=1.0), 0.2)
        before, after = solution.conserved
        assert after == pytest.approx(before, abs=1e-9)

    def test_limit_model(self) -> None:
        """Edge masses plus the vertex value."""
        solution = solve_limit_model(_config(u0="1 + cos(pi * x)", v0="0.5", w0=1.0))
        before, after = solution.conserved
        assert after == pytest.approx(before, abs=1e-9)

    def test_decay_loses_mass(self) -> None:
        """A positive lambda drains the vertex."""
        solution = solve_limit_model(_config(**{"lambda": 1.0, "w0": 1.0}))
        before, after = solution.conserved
        assert after < before


class TestStudy:
    """Discrepancy table over decreasing widths."""

    def test_columns(self) -> None:
        """One row per width with non-negative errors."""
        frame = vertex_limit_study(_config())
        assert list(frame.columns) == list(STUDY_COLUMNS)
        assert frame["delta"].tolist() == [0.2, 0.1]
        assert (frame[list(STUDY_COLUMNS[1:])] >= 0.0).all().all()
        np.testing.assert_allclose(
            frame["discrepancy"], frame["vertex_discrepancy"] + frame["edge_l2_error"]
        )

    @pytest.mark.parametrize("deltas", [[0.1, 0.2], [0.1, 0.1]])
    def test_non_decreasing_widths(self, deltas: list[float]) -> None:
        """Widths must strictly decrease."""
        with pytest.raises(LimitStudyError, match="strictly decreasing"):
            vertex_limit_study(_config(deltas=deltas))

    @pytest.mark.parametrize("delta", [0.0, 2.0, 3.0])
    def test_width_out_of_range(self, delta: float) -> None:
        """The region must fit inside the line."""
        with pytest.raises(LimitStudyError, match="must lie in"):
            solve_delta_model(_config(), delta)

    @pytest.mark.slow
    def test_shipped_study_converges(self, configs_dir: Path) -> None:
        """The discrepancy shrinks with the region width."""
        text = (configs_dir / "vertex_limit.json").read_text()
        config = VertexLimitConfig.model_validate_json(text)
        frame = vertex_limit_study(config)
        assert np.all(np.diff(frame["discrepancy"].to_numpy()) < 0.0)


def test_loader_fixture(load_document: Callable[[str], dict[str, Any]]) -> None:
    """The shipped study document validates."""
    config = VertexLimitConfig.model_validate(load_document("vertex_limit.json"))
    assert config.lambda_ == 0.5
    assert config.mu == 0.5
