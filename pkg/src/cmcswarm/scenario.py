"""Scenario definition, benchmark generators, and scenario file I/O.

Scenario files are schema-versioned JSON with every float written at 17
significant digits, so serialize -> parse -> serialize is byte-stable and
runs are reproducible across platforms.

Randomness comes from PCG64 with one spawned substream per generator call
site: substream 0 draws agent spawn positions, substreams 1..n draw the
successive target sets. Identical seeds therefore give identical
scenarios regardless of draw order changes elsewhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import AgentState, ModelParams, validate_space_dim
from .errors import ConfigurationError, GeneratorError, OutOfWorkspaceError
from .geometry import ConvexCell, Workspace, rect_cell, select_cell

SCHEMA_VERSION = 1

# Benchmark defaults shared by both generators.
DEFAULT_PARAMS = ModelParams(dt=0.2, a_max=3.0, v_max=3.0, rho=1.0, n_pred=12)
DEFAULT_WEIGHTS = (1.0, 2.0, 20.0)  # (r, q, s)
N_AGENTS = 5
SPAWN_CLEARANCE = 0.2  # extra spawn separation beyond one diameter
MAX_SAMPLING_ATTEMPTS = 100_000

# Bottleneck geometry defaults. These are configuration choices of this
# package, not values from any published benchmark; adjust in the scenario
# file if needed.
BTN_WALL_THICKNESS = 2.0
BTN_GAP_WIDTH = 6.0
BTN_CORRIDOR_REACH = 4.0  # how far the corridor cell extends into each room


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to reproduce one run."""

    name: str
    seed: int
    space_dim: int
    params: ModelParams
    cost_weights: tuple[float, float, float]  # (r, q, s)
    workspace: Workspace
    agents: tuple[AgentState, ...]
    target_schedule: tuple[tuple[int, tuple[np.ndarray, ...]], ...]
    duration_ticks: int
    sensor_range: float = math.inf

    def __post_init__(self) -> None:
        validate_space_dim(self.space_dim)
        if self.duration_ticks < 0:
            raise ConfigurationError("duration must be nonnegative")
        if not self.target_schedule:
            raise ConfigurationError("at least one target set required")
        ticks = [entry[0] for entry in self.target_schedule]
        if ticks != sorted(ticks) or ticks[0] != 0:
            raise ConfigurationError("target schedule must start at tick 0 and be sorted")
        for _, targets in self.target_schedule:
            if len(targets) != len(self.agents):
                raise ConfigurationError("each target set needs one target per agent")

    def targets_at(self, tick: int) -> tuple[np.ndarray, ...]:
        current = self.target_schedule[0][1]
        for activation, targets in self.target_schedule:
            if activation <= tick:
                current = targets
        return current


def precheck(scenario: Scenario) -> list[str]:
    """Initial-feasibility problems; empty list means the scenario may run."""
    problems = []
    params = scenario.params
    for idx, state in enumerate(scenario.agents):
        if state.dim != scenario.space_dim:
            problems.append(f"agent {idx}: dimension {state.dim} != {scenario.space_dim}")
            continue
        if state.speed > params.v_max:
            problems.append(f"agent {idx}: initial speed {state.speed:.3f} exceeds bound")
        try:
            select_cell(state.p, scenario.workspace, params.rho)
        except OutOfWorkspaceError:
            problems.append(f"agent {idx}: initial position outside inset free space")
    for i in range(len(scenario.agents)):
        for j in range(i + 1, len(scenario.agents)):
            d = float(np.linalg.norm(scenario.agents[j].p - scenario.agents[i].p))
            if d < 2.0 * params.rho:
                problems.append(f"agents {i},{j}: initial distance {d:.3f} < {2 * params.rho}")
    return problems


# --- generators ---------------------------------------------------------------


def _substream(seed: int, site: int) -> np.random.Generator:
    """One independent, portable random stream per generator call site."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(site,))))


def _sample_separated(
    rng: np.random.Generator, lo, hi, count: int, min_dist: float
) -> list[np.ndarray]:
    """Uniform points in a box with pairwise separation, by rejection."""
    points: list[np.ndarray] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > MAX_SAMPLING_ATTEMPTS:
            raise GeneratorError(
                f"rejection sampling exhausted after {MAX_SAMPLING_ATTEMPTS} attempts"
            )
        candidate = rng.uniform(lo, hi)
        if all(np.linalg.norm(candidate - p) >= min_dist for p in points):
            points.append(candidate)
    return points


def gen_rtp(seed: int) -> Scenario:
    """Randomized target points: 5 agents, 20 m x 20 m room, 4 target sets.

    Agents spawn at rest with pairwise clearance; target sets are drawn
    uniformly in the inset room with no mutual separation requirement (two
    targets may be closer than a diameter) and rotate every 100 ticks.
    """
    params = DEFAULT_PARAMS
    side = 20.0
    workspace = Workspace(boundary=(np.zeros(2), np.array([side, side])))
    rho = params.rho
    lo = np.array([rho, rho])
    hi = np.array([side - rho, side - rho])

    spawn_rng = _substream(seed, 0)
    spawns = _sample_separated(spawn_rng, lo, hi, N_AGENTS, 2.0 * rho + SPAWN_CLEARANCE)
    agents = tuple(AgentState(p, np.zeros(2)) for p in spawns)

    schedule = []
    for window in range(4):
        target_rng = _substream(seed, 1 + window)
        targets = tuple(target_rng.uniform(lo, hi) for _ in range(N_AGENTS))
        schedule.append((window * 100, targets))

    return Scenario(
        name=f"rtp-seed{seed}",
        seed=seed,
        space_dim=2,
        params=params,
        cost_weights=DEFAULT_WEIGHTS,
        workspace=workspace,
        agents=agents,
        target_schedule=tuple(schedule),
        duration_ticks=400,
        sensor_range=math.inf,
    )


def btn_workspace(
    wall_thickness: float = BTN_WALL_THICKNESS,
    gap_width: float = BTN_GAP_WIDTH,
    corridor_reach: float = BTN_CORRIDOR_REACH,
) -> Workspace:
    """60 m x 20 m room split by a wall with one central gap.

    Free space is declared as three overlapping convex cells (left room,
    corridor through the gap, right room); planning always happens inside
    one cell, so every program stays convex. The corridor reaches into both
    rooms so the inset cells overlap with nonempty interior.
    """
    width, height = 60.0, 20.0
    wall_lo = (width - wall_thickness) / 2.0
    wall_hi = (width + wall_thickness) / 2.0
    gap_lo = (height - gap_width) / 2.0
    gap_hi = (height + gap_width) / 2.0
    cells = (
        rect_cell([0.0, 0.0], [wall_lo, height]),
        rect_cell([wall_lo - corridor_reach, gap_lo], [wall_hi + corridor_reach, gap_hi]),
        rect_cell([wall_hi, 0.0], [width, height]),
    )
    obstacles = (
        (np.array([wall_lo, 0.0]), np.array([wall_hi, gap_lo])),
        (np.array([wall_lo, gap_hi]), np.array([wall_hi, height])),
    )
    return Workspace(
        boundary=(np.zeros(2), np.array([width, height])),
        obstacles=obstacles,
        cells=cells,
    )


def gen_btn(seed: int) -> Scenario:
    """Bottleneck: spawn left of the wall, targets on the right in reverse order.

    The topmost spawn gets the bottommost target and vice versa, forcing
    all agents through the gap. Targets keep a clearance of one diameter
    plus 0.5 m from each other and sit inside the corridor's vertical band:
    an agent pressed against the wall slides toward its target height, so
    in-band targets steer that slide straight into the funnel instead of
    pinning the agent against the wall face.
    """
    params = DEFAULT_PARAMS
    workspace = btn_workspace()
    rho = params.rho
    wall_lo = (60.0 - BTN_WALL_THICKNESS) / 2.0
    wall_hi = (60.0 + BTN_WALL_THICKNESS) / 2.0
    gap_lo = (20.0 - BTN_GAP_WIDTH) / 2.0
    gap_hi = (20.0 + BTN_GAP_WIDTH) / 2.0

    spawn_rng = _substream(seed, 0)
    spawn_lo = np.array([rho, rho])
    spawn_hi = np.array([wall_lo - rho - 1.0, 20.0 - rho])
    spawns = _sample_separated(spawn_rng, spawn_lo, spawn_hi, N_AGENTS, 2.0 * rho + SPAWN_CLEARANCE)
    agents = tuple(AgentState(p, np.zeros(2)) for p in spawns)

    target_rng = _substream(seed, 1)
    target_lo = np.array([wall_hi + rho + 4.0, gap_lo + rho])
    target_hi = np.array([60.0 - rho, gap_hi - rho])
    targets = _sample_separated(target_rng, target_lo, target_hi, N_AGENTS, 2.0 * rho + 0.5)

    # reverse vertical order: topmost spawn -> bottommost target
    spawn_order = sorted(range(N_AGENTS), key=lambda i: -spawns[i][1])
    targets_by_y = sorted(targets, key=lambda t: t[1])
    assigned: list[np.ndarray] = [np.zeros(2)] * N_AGENTS
    for rank, agent_idx in enumerate(spawn_order):
        assigned[agent_idx] = targets_by_y[rank]

    return Scenario(
        name=f"btn-seed{seed}",
        seed=seed,
        space_dim=2,
        params=params,
        cost_weights=DEFAULT_WEIGHTS,
        workspace=workspace,
        agents=agents,
        target_schedule=((0, tuple(assigned)),),
        duration_ticks=150,
        sensor_range=math.inf,
    )


# --- file format ----------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isinf(value) or math.isnan(value):
            raise ConfigurationError("non-finite numbers are not representable; use null")
        if value == 0.0:
            return "0"  # canonicalize negative zero
        return format(float(value), ".17g")
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        return _format_value(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        items = ", ".join(f"{json.dumps(k)}: {_format_value(v)}" for k, v in value.items())
        return "{" + items + "}"
    raise ConfigurationError(f"cannot serialize {type(value).__name__}")


def _write_json(document: dict) -> str:
    """JSON text with floats at 17 significant digits (exact round-trip)."""
    lines = ["{"]
    keys = list(document)
    for idx, key in enumerate(keys):
        comma = "," if idx < len(keys) - 1 else ""
        lines.append(f"  {json.dumps(key)}: {_format_value(document[key])}{comma}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def scenario_to_text(scenario: Scenario) -> str:
    workspace = scenario.workspace
    document = {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "seed": scenario.seed,
        "space_dim": scenario.space_dim,
        "params": {
            "dt": scenario.params.dt,
            "a_max": scenario.params.a_max,
            "v_max": scenario.params.v_max,
            "rho": scenario.params.rho,
            "n_pred": scenario.params.n_pred,
        },
        "cost": {
            "r_weight": scenario.cost_weights[0],
            "q_weight": scenario.cost_weights[1],
            "s_weight": scenario.cost_weights[2],
        },
        "workspace": {
            "boundary": {"min": workspace.boundary[0], "max": workspace.boundary[1]},
            "obstacles": [{"min": lo, "max": hi} for lo, hi in workspace.obstacles],
            "cells": [
                {"normals": cell.normals, "offsets": cell.offsets} for cell in workspace.cells
            ],
        },
        "agents": [{"p": s.p, "v": s.v} for s in scenario.agents],
        "target_schedule": [
            {"tick": tick, "targets": list(targets)} for tick, targets in scenario.target_schedule
        ],
        "duration_ticks": scenario.duration_ticks,
        "sensor_range": None if math.isinf(scenario.sensor_range) else scenario.sensor_range,
    }
    return _write_json(document)


def scenario_from_text(text: str) -> Scenario:
    document = json.loads(text)
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported scenario schema version {version!r}")
    params = ModelParams(**document["params"])
    cost = document["cost"]
    ws = document["workspace"]
    workspace = Workspace(
        boundary=(np.asarray(ws["boundary"]["min"], float), np.asarray(ws["boundary"]["max"], float)),
        obstacles=tuple(
            (np.asarray(o["min"], float), np.asarray(o["max"], float)) for o in ws["obstacles"]
        ),
        cells=tuple(
            ConvexCell(np.asarray(c["normals"], float), np.asarray(c["offsets"], float))
            for c in ws["cells"]
        ),
    )
    agents = tuple(AgentState(np.asarray(a["p"], float), np.asarray(a["v"], float)) for a in document["agents"])
    schedule = tuple(
        (int(entry["tick"]), tuple(np.asarray(t, float) for t in entry["targets"]))
        for entry in document["target_schedule"]
    )
    sensor_range = document.get("sensor_range")
    return Scenario(
        name=document["name"],
        seed=int(document["seed"]),
        space_dim=int(document["space_dim"]),
        params=params,
        cost_weights=(cost["r_weight"], cost["q_weight"], cost["s_weight"]),
        workspace=workspace,
        agents=agents,
        target_schedule=schedule,
        duration_ticks=int(document["duration_ticks"]),
        sensor_range=math.inf if sensor_range is None else float(sensor_range),
    )


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(scenario_to_text(scenario))


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        return scenario_from_text(handle.read())


def with_seed(scenario: Scenario, seed: int) -> Scenario:
    """Same scenario under a different recorded seed (metadata only)."""
    return replace(scenario, seed=seed)
