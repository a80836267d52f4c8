"""Per-agent, per-step decision procedure.

Each step an agent tries up to three candidate braking horizons, in order:

  A. current horizon + 1 (skipped at the maximum horizon); accepted only
     if the solve is optimal and the realized one-step velocity confirms
     the candidate,
  B. current horizon, with an extra cap ||v_1|| <= a_max*horizon*dt;
     accepted under the same confirmation,
  C. current horizon - 1 (only if >= 1), with the cap one step tighter;
     applied without confirmation.

If every attempted branch fails, the agent falls back to the braking
input it stored on its last successful step, which is feasible by
construction. The planner sees nothing about its neighbors except their
measured positions and velocities: no targets, plans, or costs cross the
agent boundary.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .contingency import contingency_horizon, contingency_plan
from .dynamics import AgentState, ModelParams, step
from .errors import InfeasibleStartError
from .ftocp import (
    DEFAULT_SOLVER_CONFIG,
    OPTIMAL,
    CostParams,
    FtocpProblem,
    FtocpSolution,
    SolverConfig,
    assemble,
    dump_program,
    solve,
    validate_candidate,
)
from .geometry import Workspace, build_pair_constraints, workspace_constraints

BRANCH_A = "A"
BRANCH_B = "B"
BRANCH_C = "C"
FALLBACK = "FALLBACK"

# Test-only hook: (branch, problem) -> forced status string or None to solve
# normally. Lets tests drive the cascade into specific failure paths.
FaultHook = Callable[[str, FtocpProblem], str | None]


@dataclass
class AgentMemory:
    """Braking input sequence stored from the last successful step.

    Popping the head yields the next fallback input; the remainder is the
    fallback braking plan after that. Empty only before the first step.
    """

    inputs: np.ndarray  # (k, dim), k >= 0

    @classmethod
    def fresh(cls, dim: int) -> "AgentMemory":
        return cls(inputs=np.zeros((0, dim)))

    @property
    def is_empty(self) -> bool:
        return self.inputs.shape[0] == 0

    def pop(self) -> tuple[np.ndarray, np.ndarray]:
        """Head input and remaining sequence (padded so at least one row stays)."""
        if self.is_empty:
            raise InfeasibleStartError("no stored braking plan to fall back on")
        head = self.inputs[0].copy()
        rest = self.inputs[1:]
        if rest.shape[0] == 0:
            rest = np.zeros((1, self.inputs.shape[1]))
        return head, rest


def shift_memory(solution: FtocpSolution) -> AgentMemory:
    """Store an optimal solution's braking inputs for later fallback use.

    The stored sequence is the solution's braking input sequence up to its
    standstill; a solution that already rests stores a single zero input.
    """
    if solution.status != OPTIMAL:
        raise InfeasibleStartError("only optimal solutions update the stored plan")
    inputs = solution.contingency_inputs
    nonzero = np.flatnonzero(np.any(inputs != 0.0, axis=1))
    if nonzero.size == 0:
        return AgentMemory(inputs=np.zeros((1, inputs.shape[1])))
    return AgentMemory(inputs=inputs[: nonzero[-1] + 1].copy())


@dataclass
class CmcDecision:
    """What one agent decided in one step."""

    applied_input: np.ndarray
    branch: str
    candidate_horizon: int
    validated: bool
    objective: float | None
    solve_times: dict[str, float]
    status: str = OPTIMAL  # solve status backing the applied input


def _rest_memory(state_next: AgentState, params: ModelParams) -> AgentMemory:
    """Braking plan of the predicted next state, as stored inputs."""
    plan = contingency_plan(state_next, params)
    if plan.horizon == 0:
        return AgentMemory(inputs=np.zeros((1, state_next.dim)))
    return AgentMemory(inputs=plan.accels.copy())


def plan_step(
    self_state: AgentState,
    neighbor_states: list[AgentState],
    workspace: Workspace,
    cost: CostParams,
    params: ModelParams,
    memory: AgentMemory,
    solver_config: SolverConfig = DEFAULT_SOLVER_CONFIG,
    fault_hook: FaultHook | None = None,
    dump_to: Path | None = None,
    dump_tag: str = "",
) -> CmcDecision:
    """Run the full decision procedure for one agent and one step.

    Mutates `memory` in place with the braking plan backing the next step.
    Neighbors must already be sensor-range filtered and must satisfy the
    velocity bound to tolerance.
    """
    horizon = contingency_horizon(self_state.v, params)
    own_plan = contingency_plan(self_state, params)

    avoid = []
    for idx, other_state in enumerate(neighbor_states):
        other_plan = contingency_plan(other_state, params)
        avoid.extend(
            build_pair_constraints(own_plan, other_plan, params.rho, params, owner=0, other=idx)
        )
    env = workspace_constraints(self_state.p, workspace, params.rho)

    # Last branch in the cascade runs with widened acceptance margins so
    # the stored plan (or standstill) stays strictly feasible under
    # accumulated solver noise; see SolverConfig.
    branches: list[tuple[str, int, float | None, bool, SolverConfig]] = []
    if horizon < params.n_cont_max:
        branches.append((BRANCH_A, horizon + 1, None, True, solver_config))
    if horizon >= 1:
        branches.append(
            (BRANCH_B, horizon, params.a_max * horizon * params.dt, True, solver_config)
        )
        branches.append(
            (
                BRANCH_C,
                horizon - 1,
                params.a_max * (horizon - 1) * params.dt,
                False,
                solver_config.relaxed(),
            )
        )
    else:
        branches.append((BRANCH_B, 0, 0.0, True, solver_config.terminal_rest()))

    solve_times: dict[str, float] = {}
    for name, candidate, speed_bound, needs_confirmation, branch_config in branches:
        problem = FtocpProblem(
            initial_state=self_state,
            candidate_horizon=candidate,
            avoid_constraints=tuple(avoid),
            workspace_constraints=tuple(env),
            cost=cost,
            params=params,
            extra_speed_bound=speed_bound,
        )
        if dump_to is not None:
            dump_program(assemble(problem, branch_config), dump_to / f"{dump_tag}branch{name}.mtx")
        forced = fault_hook(name, problem) if fault_hook is not None else None
        if forced is not None:
            solve_times[name] = 0.0
            continue
        solution = solve(problem, branch_config)
        solve_times[name] = solution.solve_time
        if solution.status != OPTIMAL:
            continue
        if needs_confirmation and not validate_candidate(solution, candidate, params):
            continue
        applied = solution.nominal_inputs[0]
        if name in (BRANCH_A, BRANCH_B):
            memory.inputs = shift_memory(solution).inputs
        else:
            memory.inputs = _rest_memory(step(self_state, applied, params), params).inputs
        return CmcDecision(
            applied_input=applied,
            branch=name,
            candidate_horizon=candidate,
            validated=needs_confirmation,
            objective=solution.objective,
            solve_times=solve_times,
            status=OPTIMAL,
        )

    # Every branch failed: apply the stored braking input. Feasible by the
    # stored-plan construction, but theoretically unreachable from a
    # feasible start; kept as an engineering guard against solver noise.
    start = time.perf_counter()
    head, _ = memory.pop()
    memory.inputs = _rest_memory(step(self_state, head, params), params).inputs
    solve_times[FALLBACK] = time.perf_counter() - start
    return CmcDecision(
        applied_input=head,
        branch=FALLBACK,
        candidate_horizon=-1,
        validated=False,
        objective=None,
        solve_times=solve_times,
        status="fallback",
    )


class CmcController:
    """Owns one agent's cost, memory, and planner configuration.

    The controller never sees neighbor identities, targets, or plans; the
    simulator passes bare measured states.
    """

    def __init__(
        self,
        agent_id: int,
        cost: CostParams,
        params: ModelParams,
        workspace: Workspace,
        solver_config: SolverConfig = DEFAULT_SOLVER_CONFIG,
        fault_hook: FaultHook | None = None,
        dump_dir: Path | None = None,
    ):
        self.agent_id = agent_id
        self.cost = cost
        self.params = params
        self.workspace = workspace
        self.solver_config = solver_config
        self.fault_hook = fault_hook
        self.dump_dir = dump_dir
        self.memory = AgentMemory.fresh(workspace.dim)

    def decide(
        self, self_state: AgentState, neighbor_states: list[AgentState], tick: int = 0
    ) -> CmcDecision:
        dump_tag = f"agent{self.agent_id:02d}_tick{tick:05d}_"
        return plan_step(
            self_state,
            neighbor_states,
            self.workspace,
            self.cost,
            self.params,
            self.memory,
            solver_config=self.solver_config,
            fault_hook=self.fault_hook,
            dump_to=self.dump_dir,
            dump_tag=dump_tag,
        )

    def retarget(self, target: np.ndarray) -> None:
        self.cost = CostParams(
            r_weight=self.cost.r_weight,
            q_weight=self.cost.q_weight,
            s_weight=self.cost.s_weight,
            target=np.asarray(target, dtype=float),
        )
