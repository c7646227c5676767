"""Common components for the CLI."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from typing import Annotated
from typing import Optional

import typer

from netdiff.exceptions import DegenerateFluxError
from netdiff.exceptions import NetdiffError
from netdiff.exceptions import OutputError
from netdiff.exceptions import SolverError

logger = logging.getLogger("netdiff")

EXIT_VALIDATION = 1
EXIT_SOLVER = 2

ConfigOption = Annotated[
    str, typer.Option("--config", "-c", help="Path or URL of the JSON configuration.")
]

OutDirOption = Annotated[
    Optional[str],  # noqa: UP007
    typer.Option("--out", "-o", help="Output directory or URL; overrides the configuration."),
]

OverrideOption = Annotated[
    list[str],
    typer.Option(
        "--override",
        default_factory=list,
        help="Dotted key=value override, e.g. discretization.dt=0.005. Repeatable.",
    ),
]

AllowViolationsOption = Annotated[
    bool,
    typer.Option("--allow-violations", help="Warn instead of failing on model assumptions."),
]

DiagnosticsOption = Annotated[
    str, typer.Option("--diagnostics", "-d", help="Path or URL of a diagnostics.csv.")
]

ToleranceOption = Annotated[
    float, typer.Option("--tolerance", help="Allowed relative mass drift.")
]


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Log library errors and exit with 1 for invalid input or 2 for failed runs."""
    try:
        yield
    except (SolverError, DegenerateFluxError, OutputError) as err:
        logger.error(err)  # noqa: TRY400
        raise typer.Exit(code=EXIT_SOLVER) from err
    except NetdiffError as err:
        logger.error(err)  # noqa: TRY400
        raise typer.Exit(code=EXIT_VALIDATION) from err
