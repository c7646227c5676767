"""Main entrypoint to the netdiff cli."""

import logging

import typer
from rich import print
from rich.table import Table

from netdiff.cli.common import EXIT_VALIDATION
from netdiff.cli.common import AllowViolationsOption
from netdiff.cli.common import ConfigOption
from netdiff.cli.common import DiagnosticsOption
from netdiff.cli.common import OutDirOption
from netdiff.cli.common import OverrideOption
from netdiff.cli.common import ToleranceOption
from netdiff.cli.common import exit_on_error
from netdiff.config import NetdiffSettings

FORMAT = "%(message)s"


def _configure_logging() -> None:
    from rich.logging import RichHandler

    logging.basicConfig(
        level=NetdiffSettings().log_level.upper(),
        format=FORMAT,
        datefmt="[%X]",
        handlers=[RichHandler()],
    )


_configure_logging()
logger = logging.getLogger("netdiff")

app = typer.Typer(
    name="netdiff",
    no_args_is_help=True,
    pretty_exceptions_show_locals=False,
    help="Reaction-diffusion on domains partitioned by metric graphs.",
)


@app.command(rich_help_panel="Setup Commands")
def check(config: ConfigOption, override: OverrideOption) -> None:
    """Report entity counts, geometry violations and model assumption failures."""
    from netdiff.io import parse_config
    from netdiff.simulation import Simulation

    with exit_on_error():
        run_config = parse_config(config, override)
        simulation = Simulation(run_config)
        violations = simulation.geometry_violations + simulation.assumption_violations

    domain = simulation.domain
    print(
        f"{len(domain.subdomains)} subdomains, {len(domain.edges)} edges, "
        f"{len(domain.vertices)} vertices"
    )

    if not violations:
        print("All geometry and model assumptions pass.")
        return

    table = Table("kind", "location", "message", title="Violations")
    for violation in violations:
        table.add_row(violation.kind, violation.location, violation.message)
    print(table)
    raise typer.Exit(code=EXIT_VALIDATION)


@app.command(rich_help_panel="Simulation Commands")
def run(
    config: ConfigOption,
    override: OverrideOption,
    out: OutDirOption = None,
    allow_violations: AllowViolationsOption = False,
) -> None:
    """Simulate a configuration and write diagnostics, snapshots and a summary."""
    from netdiff.io import parse_config
    from netdiff.output import emit_outputs
    from netdiff.simulation import Simulation

    with exit_on_error():
        run_config = parse_config(config, override)
        simulation = Simulation(run_config, allow_violations=allow_violations)
        series = simulation.run()
        paths = emit_outputs(series, simulation.mesh, run_config, out)

    final = series.report.rows[-1]
    print(f"Finished at t={final['time']:.6g}, total mass {final['total_mass']:.12g}")
    print(f"Wrote {len(paths)} outputs")


@app.command(rich_help_panel="Simulation Commands")
def extinction(
    config: ConfigOption,
    override: OverrideOption,
    out: OutDirOption = None,
    allow_violations: AllowViolationsOption = False,
) -> None:
    """Simulate and fit the decay of X(t) towards extinction."""
    from netdiff.analysis.extinction import extinction_exponents
    from netdiff.analysis.extinction import extinction_fit
    from netdiff.io import parse_config
    from netdiff.output import emit_outputs
    from netdiff.simulation import Simulation

    with exit_on_error():
        run_config = parse_config(config, override)
        model = run_config.model
        exponents = extinction_exponents(
            model.subdomain_flux.exponent, model.subdomain_reaction.exponent
        )
        simulation = Simulation(run_config, allow_violations=allow_violations)
        series = simulation.run()
        emit_outputs(series, simulation.mesh, run_config, out)
        fit = extinction_fit(series.report, exponents)

    table = Table("quantity", "value", title="Extinction")
    table.add_row("s1", f"{exponents.s1:.6g}")
    table.add_row("s2", f"{exponents.s2:.6g}")
    if fit.extinct:
        table.add_row("t_extinct", f"{fit.t_extinct:.6g}")
    else:
        table.add_row("t_extinct", "no extinction before t_end")
    table.add_row("slope", f"{fit.slope:.6g}")
    table.add_row("intercept", f"{fit.intercept:.6g}")
    table.add_row("R^2", f"{fit.r_squared:.6f}")
    table.add_row("max second difference", f"{fit.max_second_difference:.3e}")
    order = f"{fit.decay_order:.4g} (reaction {exponents.reaction_order:.4g})"
    table.add_row("decay order", order)
    table.add_row("fit window", f"[{fit.window[0]:.6g}, {fit.window[1]:.6g}]")
    print(table)


@app.command(rich_help_panel="Simulation Commands")
def vertex_limit(config: ConfigOption, override: OverrideOption, out: OutDirOption = None) -> None:
    """Compare shrinking vertex regions with the limit vertex ODE."""
    from fsspec.core import url_to_fs

    from netdiff.analysis.limit import vertex_limit_study
    from netdiff.io import apply_overrides
    from netdiff.io import read_document
    from netdiff.io import validate_document
    from netdiff.output import CSV_FLOAT_FORMAT
    from netdiff.schema.run import VertexLimitConfig

    with exit_on_error():
        document = apply_overrides(read_document(config), override)
        study_config = validate_document(document, VertexLimitConfig)
        table = vertex_limit_study(study_config)

    print(table.to_string(index=False))

    if out is not None:
        fs, root = url_to_fs(out)
        fs.makedirs(root, exist_ok=True)
        path = f"{root.rstrip('/')}/vertex_limit.csv"
        with fs.open(path, "w") as f:
            table.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        print(f"Saved vertex-limit table to {path}")


@app.command(rich_help_panel="Audit Commands")
def mass_report(diagnostics: DiagnosticsOption, tolerance: ToleranceOption = 1e-8) -> None:
    """Audit total mass conservation of an existing diagnostics.csv."""
    from netdiff.analysis.diagnostics import relative_mass_drift
    from netdiff.output import read_diagnostics

    with exit_on_error():
        frame = read_diagnostics(diagnostics)

    drift = relative_mass_drift(frame)
    mass = frame["total_mass"]
    print(f"initial mass {mass.iloc[0]:.12g}, final mass {mass.iloc[-1]:.12g}")
    print(f"relative drift {drift:.3e} (tolerance {tolerance:.1e})")
    if drift > tolerance:
        print("Mass drift exceeds the tolerance.")
        raise typer.Exit(code=EXIT_VALIDATION)
