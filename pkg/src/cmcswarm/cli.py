"""Command-line interface.

Exit codes: 0 success, 2 scenario failed the feasibility pre-check,
3 hard runtime error (artifacts with diagnostics are still written).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import artifacts as artifacts_mod
from . import scenario as scenario_mod
from .errors import CmcError, HardRunError, PrecheckError
from .plots import plot_run

EXIT_PRECHECK = 2
EXIT_HARD_ERROR = 3


@click.group()
def main() -> None:
    """Decentralized, communication-free swarm collision avoidance."""


@main.command(name="run")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the recorded seed (metadata).")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--dump-programs", is_flag=True, help="Dump each assembled conic program.")
def run_command(scenario_path, out_dir, seed, threads, dump_programs) -> None:
    """Execute a scenario file and write logs, summary, and figures."""
    scenario = scenario_mod.load_scenario(scenario_path)
    if seed is not None:
        scenario = scenario_mod.with_seed(scenario, seed)
    try:
        result = artifacts_mod.run(
            scenario, Path(out_dir), threads=threads, dump_programs=dump_programs
        )
    except PrecheckError as exc:
        click.echo(f"pre-check failed: {exc}", err=True)
        sys.exit(EXIT_PRECHECK)
    except HardRunError as exc:
        click.echo(f"hard runtime error: {exc}", err=True)
        sys.exit(EXIT_HARD_ERROR)
    summary = artifacts_mod.read_summary(result.out_dir)
    click.echo(
        f"run complete: {summary['ticks']} ticks, "
        f"min pair distance {summary['min_pair_distance']}, "
        f"fallbacks {summary['fallback_count']}"
    )


@main.command(name="gen-rtp")
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def gen_rtp_command(seed, out_path) -> None:
    """Generate a randomized-target-points scenario file."""
    scenario_mod.save_scenario(scenario_mod.gen_rtp(seed), out_path)
    click.echo(f"wrote {out_path}")


@main.command(name="gen-btn")
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def gen_btn_command(seed, out_path) -> None:
    """Generate a bottleneck scenario file."""
    scenario_mod.save_scenario(scenario_mod.gen_btn(seed), out_path)
    click.echo(f"wrote {out_path}")


@main.command(name="check")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
def check_command(scenario_path) -> None:
    """Run the initial feasibility pre-check only."""
    scenario = scenario_mod.load_scenario(scenario_path)
    problems = scenario_mod.precheck(scenario)
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        sys.exit(EXIT_PRECHECK)
    click.echo("scenario passes the feasibility pre-check")


@main.command(name="plot")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
def plot_command(run_dir) -> None:
    """Re-render figures from an existing run directory."""
    try:
        written = plot_run(run_dir)
    except CmcError as exc:
        click.echo(f"cannot plot: {exc}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
