"""Shared fixtures for tests."""

from __future__ import annotations

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest
from fsspec.implementations.memory import MemoryFileSystem

from netdiff.geometry import PartitionedDomain
from netdiff.schema.geometry import GeometrySpec
from netdiff.schema.run import RunConfig

CONFIGS = Path(__file__).parent.parent / "configs"


def _unit_square() -> dict[str, Any]:
    return {
        "vertices": [
            {"id": 1, "position": [0.0, 0.0]},
            {"id": 2, "position": [1.0, 0.0]},
            {"id": 3, "position": [1.0, 1.0]},
            {"id": 4, "position": [0.0, 1.0]},
        ],
        "edges": [
            {"id": 1, "source": 1, "terminal": 2},
            {"id": 2, "source": 2, "terminal": 3},
            {"id": 3, "source": 3, "terminal": 4},
            {"id": 4, "source": 4, "terminal": 1},
        ],
        "subdomains": [
            {"id": 1, "loop": [{"edge": 1}, {"edge": 2}, {"edge": 3}, {"edge": 4}]},
        ],
    }


def _load(name: str) -> dict[str, Any]:
    """Raw JSON document of a shipped configuration."""
    with (CONFIGS / name).open() as f:
        return json.load(f)


def _make_config(geometry: dict[str, Any], **sections: Any) -> RunConfig:  # noqa: ANN401
    document: dict[str, Any] = {
        "geometry": geometry,
        "discretization": {"h": 0.25, "dt": 0.01, "tEnd": 0.05},
    }
    document.update(sections)
    return RunConfig.model_validate(document)


ConfigFactory = Callable[..., RunConfig]


@pytest.fixture(scope="session")
def mock_filesystem() -> MemoryFileSystem:
    """Return a mocked filesystem implementation in memory."""
    return MemoryFileSystem()


@pytest.fixture()
def configs_dir() -> Path:
    """Directory of the shipped configurations."""
    return CONFIGS


@pytest.fixture()
def unit_square_geometry() -> dict[str, Any]:
    """One unit square subdomain bounded by four edges."""
    return _unit_square()


@pytest.fixture()
def two_rect_geometry() -> dict[str, Any]:
    """Unit square split at x = 0.5 into two rectangles."""
    return _load("two_rect_mass.json")["geometry"]


@pytest.fixture()
def figure1_geometry() -> dict[str, Any]:
    """Three subdomains, nine edges and seven vertices."""
    return _load("figure1.json")["geometry"]


@pytest.fixture()
def load_document() -> Callable[[str], dict[str, Any]]:
    """Loader of shipped configuration documents by file name."""
    return _load


@pytest.fixture()
def make_config() -> ConfigFactory:
    """Factory of run configurations with small defaults for omitted sections."""
    return _make_config


@pytest.fixture()
def unit_square(unit_square_geometry: dict[str, Any]) -> PartitionedDomain:
    """The unit square partition."""
    return PartitionedDomain.from_spec(GeometrySpec.model_validate(unit_square_geometry))


@pytest.fixture()
def two_rect(two_rect_geometry: dict[str, Any]) -> PartitionedDomain:
    """The two-rectangle partition."""
    return PartitionedDomain.from_spec(GeometrySpec.model_validate(two_rect_geometry))


@pytest.fixture()
def figure1(figure1_geometry: dict[str, Any]) -> PartitionedDomain:
    """The three-subdomain partition."""
    return PartitionedDomain.from_spec(GeometrySpec.model_validate(figure1_geometry))
