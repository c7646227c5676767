"""Writing run outputs: diagnostics table, VTK snapshots and a JSON summary.

Layout below the output directory::

    diagnostics.csv
    snapshots/step_<n>/subdomain_<id>.vtk
    snapshots/step_<n>/edge_<id>.vtk
    summary.json
"""

from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING

import pandas as pd
from fsspec.core import url_to_fs

from netdiff.exceptions import OutputError
from netdiff.io import config_hash
from netdiff.vtk import write_vtk_polydata
from netdiff.vtk import write_vtk_unstructured

if TYPE_CHECKING:
    from fsspec import AbstractFileSystem

    from netdiff.assembly import DiscreteState
    from netdiff.mesh import DomainMesh
    from netdiff.schema.run import RunConfig
    from netdiff.timestepper import TimeSeries

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
PARTIAL_MARKER = "_PARTIAL_OUTPUT"


def snapshot_steps(num_times: int, every: int, enabled: bool) -> list[int]:
    """Time level indices that get a VTK snapshot: every n-th and the last."""
    if not enabled:
        return []
    steps = set(range(0, num_times, every)) if every > 0 else set()
    steps.add(num_times - 1)
    return sorted(steps)


def write_diagnostics(fs: AbstractFileSystem, path: str, series: TimeSeries) -> None:
    """Write the diagnostics rows as CSV with 17 significant digits."""
    report = series.report
    frame = pd.DataFrame(report.rows, columns=report.columns)
    with fs.open(path, "w") as f:
        frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_snapshot(
    fs: AbstractFileSystem, directory: str, mesh: DomainMesh, state: DiscreteState
) -> None:
    """Write one VTK file per subdomain and per edge."""
    fs.makedirs(directory, exist_ok=True)
    for sub in mesh.subdomains:
        path = f"{directory}/subdomain_{sub.subdomain_id}.vtk"
        write_vtk_unstructured(fs, path, sub, state.u[sub.subdomain_id])
    for edge in mesh.edges:
        path = f"{directory}/edge_{edge.edge_id}.vtk"
        write_vtk_polydata(fs, path, edge, state.w[edge.edge_id])


def render_summary(series: TimeSeries, config: RunConfig) -> str:
    """JSON summary with the config hash, final diagnostics and solver statistics."""
    final = dict(series.report.rows[-1])
    final["extinct"] = bool(final["extinct"])
    summary = {
        "configHash": config_hash(config),
        "finalDiagnostics": final,
        "solver": series.summary(),
        "timeLevels": len(series.times),
    }
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def _mark_partial(fs: AbstractFileSystem, root: str, err: Exception) -> None:
    try:
        with fs.open(f"{root}/{PARTIAL_MARKER}", "w") as f:
            f.write(f"{err}\n")
    except OSError:
        logger.exception("Could not write the partial output marker in %s", root)


def emit_outputs(
    series: TimeSeries,
    mesh: DomainMesh,
    config: RunConfig,
    directory: str | None = None,
) -> list[str]:
    """Write every output of a finished run.

    Args:
        series: The computed run.
        mesh: Meshes the states live on.
        config: Configuration of the run; hashed into the summary.
        directory: Output directory or URL; ``config.outputs.directory`` when omitted.

    Returns:
        Paths written, in order.

    Raises:
        OutputError: If a write fails. A partial-output marker is left behind.
    """
    outputs = config.outputs
    fs, root = url_to_fs(directory if directory is not None else outputs.directory)
    root = root.rstrip("/")
    written: list[str] = []

    try:
        fs.makedirs(root, exist_ok=True)

        path = f"{root}/diagnostics.csv"
        write_diagnostics(fs, path, series)
        written.append(path)

        for n in snapshot_steps(len(series.times), outputs.vtk_every, outputs.vtk):
            folder = f"{root}/snapshots/step_{n}"
            write_snapshot(fs, folder, mesh, series.states[n])
            written.append(folder)

        path = f"{root}/summary.json"
        with fs.open(path, "w") as f:
            f.write(render_summary(series, config))
        written.append(path)
    except OSError as err:
        _mark_partial(fs, root, err)
        msg = f"Writing outputs to {root} failed: {err}"
        raise OutputError(msg) from err

    for path in written:
        logger.info("Wrote %s", path)
    return written


def read_diagnostics(path: str) -> pd.DataFrame:
    """Read a diagnostics CSV from a local path or URL.

    Raises:
        OutputError: If the file cannot be read or lacks the mass column.
    """
    try:
        fs, url = url_to_fs(path)
        with fs.open(url, "r") as f:
            frame = pd.read_csv(f)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        msg = f"Cannot read diagnostics from {path}: {err}"
        raise OutputError(msg) from err

    if "total_mass" not in frame.columns:
        msg = f"{path} has no total_mass column."
        raise OutputError(msg)
    return frame
