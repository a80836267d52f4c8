"""Synchronous closed-loop swarm world.

Each tick has three phases: every active agent reads the same frozen
snapshot of all states, all agents plan independently (optionally in
parallel), then all first inputs are applied simultaneously under the
exact model dynamics. Overlaps are never prevented physically; they are
detected and logged, so the safety property is observable rather than
enforced by the plant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import FALLBACK, CmcController, CmcDecision, FaultHook
from .contingency import contingency_horizon, contingency_plan
from .dynamics import AgentState, ModelParams, step
from .errors import (
    ConfigurationError,
    DegenerateGeometryError,
    InfeasibleStartError,
    HardRunError,
    OutOfWorkspaceError,
)
from .ftocp import (
    DEFAULT_SOLVER_CONFIG,
    OPTIMAL,
    CostParams,
    FtocpProblem,
    SolverConfig,
    solve,
)
from .geometry import Workspace, build_pair_constraints, sensor_range_filter, workspace_constraints

SAFETY_EVENT = "safety-violation"
FALLBACK_EVENT = "fallback"
DEADLOCK_EVENT = "deadlock-suspect"
ADMISSION_EVENT = "admission"
HARD_ERROR_EVENT = "hard-error"


@dataclass
class WorldState:
    """All agent states at one tick; `active` selects the live agents."""

    tick: int
    agents: dict[int, AgentState]
    active: set[int]


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One agent's state and decision at one tick (decision absent on the final record)."""

    tick: int
    agent: int
    state: AgentState
    target: np.ndarray | None
    applied: np.ndarray | None
    branch: str | None
    candidate_horizon: int | None
    validated: bool | None
    status: str | None


@dataclass
class SimLog:
    """Append-only run log: one record per (tick, agent) and per (tick, pair)."""

    steps: list[StepRecord] = field(default_factory=list)
    distances: list[tuple[int, int, int, float]] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    def min_pair_distance(self) -> float:
        if not self.distances:
            return math.inf
        return min(d for _, _, _, d in self.distances)

    def branch_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for record in self.steps:
            if record.branch is not None:
                counts[record.branch] = counts.get(record.branch, 0) + 1
        return counts

    def fallback_count(self) -> int:
        return self.branch_counts().get(FALLBACK, 0)


@dataclass(frozen=True)
class AdmissionResult:
    accepted: bool
    agent_id: int
    reason: str
    violating_agent: int | None = None


class Simulator:
    """Owns the world, one controller per agent, and the run log."""

    def __init__(
        self,
        params: ModelParams,
        workspace: Workspace,
        initial_states: dict[int, AgentState],
        costs: dict[int, CostParams],
        sensor_range: float = math.inf,
        threads: int = 1,
        solver_config: SolverConfig = DEFAULT_SOLVER_CONFIG,
        fault_hook: FaultHook | None = None,
        dump_dir: Path | None = None,
    ):
        if set(initial_states) != set(costs):
            raise ConfigurationError("one cost spec per agent required")
        self.params = params
        self.workspace = workspace
        self.sensor_range = sensor_range
        self.threads = max(1, int(threads))
        self.solver_config = solver_config
        self.world = WorldState(tick=0, agents=dict(initial_states), active=set(initial_states))
        self.controllers: dict[int, CmcController] = {
            agent_id: CmcController(
                agent_id,
                costs[agent_id],
                params,
                workspace,
                solver_config=solver_config,
                fault_hook=fault_hook,
                dump_dir=dump_dir,
            )
            for agent_id in initial_states
        }
        self.log = SimLog()

    # -- helpers --------------------------------------------------------------

    def set_target(self, agent_id: int, target: np.ndarray) -> None:
        self.controllers[agent_id].retarget(target)

    def remove_agent(self, agent_id: int) -> None:
        """Drop an agent immediately; others stop constraining against it next tick."""
        self.world.active.discard(agent_id)

    def _neighbors(self, me: int, ids: list[int], snapshot: dict[int, AgentState]) -> list[AgentState]:
        mine = snapshot[me]
        return [
            snapshot[other]
            for other in ids
            if other != me
            and sensor_range_filter(mine.p, snapshot[other].p, self.params, self.sensor_range)
        ]

    def _record_distances(self, tick: int, ids: list[int], snapshot: dict[int, AgentState]) -> None:
        for a_idx, i in enumerate(ids):
            for j in ids[a_idx + 1 :]:
                d = float(np.linalg.norm(snapshot[j].p - snapshot[i].p))
                self.log.distances.append((tick, i, j, d))
                if d < 2.0 * self.params.rho - 1e-9:
                    self.log.events.append(
                        {"tick": tick, "type": SAFETY_EVENT, "pair": [i, j], "distance": d}
                    )

    # -- main loop ------------------------------------------------------------

    def tick(self) -> None:
        """Measure, plan for all agents, apply all first inputs, advance time."""
        k = self.world.tick
        snapshot = {agent_id: self.world.agents[agent_id] for agent_id in self.world.active}
        ids = sorted(snapshot)
        self._record_distances(k, ids, snapshot)

        def plan_one(agent_id: int) -> CmcDecision:
            return self.controllers[agent_id].decide(
                snapshot[agent_id], self._neighbors(agent_id, ids, snapshot), tick=k
            )

        decisions: dict[int, CmcDecision] = {}
        try:
            if self.threads == 1 or len(ids) <= 1:
                for agent_id in ids:
                    decisions[agent_id] = plan_one(agent_id)
            else:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    for agent_id, decision in zip(ids, pool.map(plan_one, ids)):
                        decisions[agent_id] = decision
        except InfeasibleStartError as exc:
            self.log.events.append(
                {"tick": k, "type": HARD_ERROR_EVENT, "detail": str(exc)}
            )
            raise HardRunError(f"tick {k}: {exc}") from exc

        for agent_id in ids:
            decision = decisions[agent_id]
            self.log.steps.append(
                StepRecord(
                    tick=k,
                    agent=agent_id,
                    state=snapshot[agent_id],
                    target=self.controllers[agent_id].cost.target.copy(),
                    applied=decision.applied_input,
                    branch=decision.branch,
                    candidate_horizon=decision.candidate_horizon,
                    validated=decision.validated,
                    status=decision.status,
                )
            )
            if decision.branch == FALLBACK:
                self.log.events.append({"tick": k, "type": FALLBACK_EVENT, "agent": agent_id})

        for agent_id in ids:
            self.world.agents[agent_id] = step(
                snapshot[agent_id], decisions[agent_id].applied_input, self.params
            )
        self.world.tick = k + 1

    def record_final(self) -> None:
        """Log states and distances at the current tick without planning."""
        k = self.world.tick
        snapshot = {agent_id: self.world.agents[agent_id] for agent_id in self.world.active}
        ids = sorted(snapshot)
        self._record_distances(k, ids, snapshot)
        for agent_id in ids:
            self.log.steps.append(
                StepRecord(
                    tick=k,
                    agent=agent_id,
                    state=snapshot[agent_id],
                    target=self.controllers[agent_id].cost.target.copy(),
                    applied=None,
                    branch=None,
                    candidate_horizon=None,
                    validated=None,
                    status=None,
                )
            )

    # -- plug & play ----------------------------------------------------------

    def admit_agent(
        self, new_state: AgentState, target: np.ndarray, agent_id: int | None = None
    ) -> AdmissionResult:
        """Admit a newcomer iff it leaves every agent's safe branch feasible.

        Two checks: the newcomer's own program must be feasible against all
        existing braking plans, and every existing agent's most conservative
        branch must stay feasible with the newcomer's plan added. Pairs
        outside sensor range of each other impose no constraints.
        """
        if agent_id is None:
            agent_id = max(self.world.agents, default=-1) + 1
        snapshot = {aid: self.world.agents[aid] for aid in self.world.active}
        ids = sorted(snapshot)

        def branch_problem(state, neighbors, conservative: bool):
            horizon = contingency_horizon(state.v, self.params)
            candidate = max(0, horizon - 1) if conservative else horizon
            own_plan = contingency_plan(state, self.params)
            avoid = []
            for idx, other in enumerate(neighbors):
                if not sensor_range_filter(state.p, other.p, self.params, self.sensor_range):
                    continue
                avoid.extend(
                    build_pair_constraints(
                        own_plan,
                        contingency_plan(other, self.params),
                        self.params.rho,
                        self.params,
                        owner=0,
                        other=idx,
                    )
                )
            env = workspace_constraints(state.p, self.workspace, self.params.rho)
            return FtocpProblem(
                initial_state=state,
                candidate_horizon=candidate,
                avoid_constraints=tuple(avoid),
                workspace_constraints=tuple(env),
                cost=CostParams(1.0, 1.0, 1.0, target=np.asarray(target, dtype=float)),
                params=self.params,
                extra_speed_bound=self.params.a_max * candidate * self.params.dt,
            )

        def reject(reason: str, violating: int | None = None) -> AdmissionResult:
            result = AdmissionResult(False, agent_id, reason, violating)
            self.log.events.append(
                {
                    "tick": self.world.tick,
                    "type": ADMISSION_EVENT,
                    "agent": agent_id,
                    "accepted": False,
                    "reason": reason,
                }
            )
            return result

        try:
            newcomer_problem = branch_problem(
                new_state, [snapshot[i] for i in ids], conservative=False
            )
        except (DegenerateGeometryError, OutOfWorkspaceError) as exc:
            return reject(str(exc))
        if solve(newcomer_problem, self.solver_config).status != OPTIMAL:
            return reject("newcomer's own program is infeasible")

        for existing_id in ids:
            others = [snapshot[i] for i in ids if i != existing_id] + [new_state]
            try:
                existing_problem = branch_problem(
                    snapshot[existing_id], others, conservative=True
                )
            except DegenerateGeometryError as exc:
                return reject(str(exc), violating=existing_id)
            check_config = (
                self.solver_config.terminal_rest()
                if existing_problem.candidate_horizon == 0
                else self.solver_config.relaxed()
            )
            if solve(existing_problem, check_config).status != OPTIMAL:
                return reject(
                    f"agent {existing_id} would lose its safe branch", violating=existing_id
                )

        if self.controllers:
            reference = next(iter(self.controllers.values())).cost
            weights = (reference.r_weight, reference.q_weight, reference.s_weight)
        else:
            weights = (1.0, 2.0, 20.0)
        self.world.agents[agent_id] = new_state
        self.world.active.add(agent_id)
        self.controllers[agent_id] = CmcController(
            agent_id,
            CostParams(*weights, target=np.asarray(target, dtype=float)),
            self.params,
            self.workspace,
            solver_config=self.solver_config,
        )
        self.log.events.append(
            {
                "tick": self.world.tick,
                "type": ADMISSION_EVENT,
                "agent": agent_id,
                "accepted": True,
                "reason": "feasible for newcomer and all existing agents",
            }
        )
        return AdmissionResult(True, agent_id, "accepted")


def detect_deadlock(
    log: SimLog,
    params: ModelParams,
    speed_threshold: float = 0.05,
    window: int = 25,
    distance_threshold: float = 0.5,
) -> list[dict]:
    """Flag agents that sit nearly still, far from target, for `window` ticks.

    Returns one event per contiguous stuck episode; detection only, no
    resolution.
    """
    by_agent: dict[int, list[StepRecord]] = {}
    for record in log.steps:
        by_agent.setdefault(record.agent, []).append(record)

    events = []
    for agent_id in sorted(by_agent):
        records = sorted(by_agent[agent_id], key=lambda r: r.tick)
        run = 0
        flagged = False
        for record in records:
            stuck = (
                record.target is not None
                and record.state.speed < speed_threshold
                and float(np.linalg.norm(record.state.p - record.target)) > distance_threshold
            )
            if stuck:
                run += 1
                if run >= window and not flagged:
                    events.append(
                        {"tick": record.tick, "type": DEADLOCK_EVENT, "agent": agent_id}
                    )
                    flagged = True
            else:
                run = 0
                flagged = False
    return events
