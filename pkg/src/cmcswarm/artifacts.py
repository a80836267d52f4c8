"""Run orchestration and on-disk artifacts.

A run directory contains:

    scenario.json      copy of the scenario that was executed
    trajectories.csv   tick, agent, x, y, [z], vx, vy, [vz], ax, ay, [az],
                       branch, candidate_horizon, validated, status
    distances.csv      tick, id_i, id_j, d
    events.jsonl       one JSON record per event
    summary.json       aggregate results (timing fields are wall-clock and
                       excluded from byte-determinism)
    trajectory_*.svg, distances.svg   rendered figures

All numeric fields are written with 17 significant digits; identical
scenario + seed reproduce trajectory/distance/event files byte-for-byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dynamics import AgentState
from .errors import ArtifactError, HardRunError, PrecheckError
from .ftocp import CostParams
from .scenario import Scenario, precheck, save_scenario
from .sim import SimLog, Simulator, detect_deadlock


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    scenario_path: Path
    trajectories_path: Path
    distances_path: Path
    events_path: Path
    summary_path: Path
    plot_paths: tuple[Path, ...]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _trajectory_header(dim: int) -> list[str]:
    axes = ["x", "y", "z"][:dim]
    return (
        ["tick", "agent"]
        + axes
        + [f"v{a}" for a in axes]
        + [f"a{a}" for a in axes]
        + ["branch", "candidate_horizon", "validated", "status"]
    )


def write_trajectories(log: SimLog, dim: int, path: Path) -> None:
    rows = [",".join(_trajectory_header(dim))]
    for record in sorted(log.steps, key=lambda r: (r.tick, r.agent)):
        cells = [str(record.tick), str(record.agent)]
        cells += [_fmt(v) for v in record.state.p]
        cells += [_fmt(v) for v in record.state.v]
        if record.applied is None:
            cells += ["" for _ in range(dim)]
            cells += ["", "", "", ""]
        else:
            cells += [_fmt(v) for v in record.applied]
            cells += [
                record.branch,
                str(record.candidate_horizon),
                "true" if record.validated else "false",
                record.status,
            ]
        rows.append(",".join(cells))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_distances(log: SimLog, path: Path) -> None:
    rows = ["tick,id_i,id_j,d"]
    for tick, i, j, d in sorted(log.distances):
        rows.append(f"{tick},{i},{j},{_fmt(d)}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def _event_text(event: dict) -> str:
    def norm(value):
        if isinstance(value, (float, np.floating)):
            return float(_fmt(value))
        if isinstance(value, (list, tuple)):
            return [norm(v) for v in value]
        if isinstance(value, (int, np.integer)):
            return int(value)
        return value

    return json.dumps({k: norm(v) for k, v in sorted(event.items())}, sort_keys=True)


def write_events(events: list[dict], path: Path) -> None:
    path.write_text("".join(_event_text(e) + "\n" for e in events), encoding="utf-8")


def run(
    scenario: Scenario,
    out_dir: Path | str,
    threads: int = 1,
    dump_programs: bool = False,
    render_plots: bool = True,
) -> RunArtifacts:
    """Execute a scenario and write the full artifact set."""
    problems = precheck(scenario)
    if problems:
        raise PrecheckError("; ".join(problems))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_dir = None
    if dump_programs:
        dump_dir = out_dir / "programs"
        dump_dir.mkdir(exist_ok=True)

    r_weight, q_weight, s_weight = scenario.cost_weights
    initial_targets = scenario.target_schedule[0][1]
    simulator = Simulator(
        params=scenario.params,
        workspace=scenario.workspace,
        initial_states={i: s for i, s in enumerate(scenario.agents)},
        costs={
            i: CostParams(r_weight, q_weight, s_weight, target=initial_targets[i])
            for i in range(len(scenario.agents))
        },
        sensor_range=scenario.sensor_range,
        threads=threads,
        dump_dir=dump_dir,
    )

    schedule = {tick: targets for tick, targets in scenario.target_schedule}
    wall_start = time.perf_counter()
    hard_error: str | None = None
    try:
        for tick in range(scenario.duration_ticks):
            if tick in schedule:
                for agent_id, target in enumerate(schedule[tick]):
                    simulator.set_target(agent_id, target)
            simulator.tick()
        simulator.record_final()
    except HardRunError as exc:
        hard_error = str(exc)
    wall_elapsed = time.perf_counter() - wall_start

    log = simulator.log
    deadlocks = detect_deadlock(log, scenario.params)
    events = log.events + deadlocks

    scenario_path = out_dir / "scenario.json"
    trajectories_path = out_dir / "trajectories.csv"
    distances_path = out_dir / "distances.csv"
    events_path = out_dir / "events.jsonl"
    summary_path = out_dir / "summary.json"

    save_scenario(scenario, scenario_path)
    write_trajectories(log, scenario.space_dim, trajectories_path)
    write_distances(log, distances_path)
    write_events(events, events_path)

    final_states: dict[int, AgentState] = {}
    final_targets: dict[int, np.ndarray] = {}
    for record in log.steps:
        if record.applied is None:
            final_states[record.agent] = record.state
            if record.target is not None:
                final_targets[record.agent] = record.target
    tracking_errors = {
        str(agent): float(np.linalg.norm(final_states[agent].p - final_targets[agent]))
        for agent in sorted(final_states)
        if agent in final_targets
    }

    branch_counts = log.branch_counts()
    solve_records = [r for r in log.steps if r.applied is not None]
    summary = {
        "schema_version": 1,
        "scenario": scenario.name,
        "seed": scenario.seed,
        "ticks": scenario.duration_ticks,
        "agents": len(scenario.agents),
        "min_pair_distance": log.min_pair_distance() if log.distances else None,
        "branch_counts": branch_counts,
        "fallback_count": log.fallback_count(),
        "hard_error": hard_error,
        "safety_violations": sum(1 for e in events if e["type"] == "safety-violation"),
        "deadlock_suspects": sorted({e["agent"] for e in deadlocks}),
        "final_tracking_errors": tracking_errors,
        "timing": {
            "wall_s": wall_elapsed,
            "planned_steps": len(solve_records),
            "generated_at": datetime.now(timezone.utc).isoformat(),
        },
    }
    summary_path.write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8"
    )

    plot_paths: tuple[Path, ...] = ()
    if render_plots:
        from .plots import plot_run  # deferred so headless runs stay light

        plot_paths = tuple(plot_run(out_dir))

    if hard_error is not None:
        raise HardRunError(f"{hard_error} (diagnostic artifacts written to {out_dir})")

    return RunArtifacts(
        out_dir=out_dir,
        scenario_path=scenario_path,
        trajectories_path=trajectories_path,
        distances_path=distances_path,
        events_path=events_path,
        summary_path=summary_path,
        plot_paths=plot_paths,
    )


def read_summary(run_dir: Path | str) -> dict:
    path = Path(run_dir) / "summary.json"
    if not path.exists():
        raise ArtifactError(f"missing summary: {path}")
    return json.loads(path.read_text(encoding="utf-8"))
