import numpy as np
import pytest

from cmcswarm.agent import (
    BRANCH_A,
    BRANCH_B,
    BRANCH_C,
    FALLBACK,
    AgentMemory,
    CmcController,
    plan_step,
    shift_memory,
)
from cmcswarm.contingency import contingency_plan
from cmcswarm.dynamics import AgentState, ModelParams, step
from cmcswarm.errors import InfeasibleStartError
from cmcswarm.ftocp import OPTIMAL, CostParams, solve
from cmcswarm.geometry import Workspace

PARAMS = ModelParams(dt=0.2, a_max=3.0, v_max=3.0, rho=1.0, n_pred=12)
WORKSPACE = Workspace(boundary=(np.zeros(2), np.array([20.0, 20.0])))


def cost_toward(target):
    return CostParams(1.0, 2.0, 20.0, target=np.asarray(target, dtype=float))


def run_plan(state, neighbors=(), target=(15.0, 10.0), memory=None, fault_hook=None):
    memory = memory if memory is not None else AgentMemory.fresh(2)
    decision = plan_step(
        state,
        list(neighbors),
        WORKSPACE,
        cost_toward(target),
        PARAMS,
        memory,
        fault_hook=fault_hook,
    )
    return decision, memory


class TestBranches:
    def test_rest_clear_workspace_takes_branch_a(self):
        decision, memory = run_plan(AgentState([5.0, 10.0], [0.0, 0.0]))
        assert decision.branch == BRANCH_A
        assert decision.candidate_horizon == 1
        assert decision.validated
        assert decision.applied_input[0] > 0.1  # accelerates toward the target
        assert not memory.is_empty

    def test_at_max_speed_first_solve_is_b(self):
        attempted = []

        def recorder(branch, problem):
            attempted.append(branch)
            return None

        state = AgentState([5.0, 10.0], [3.0, 0.0])  # braking horizon = max
        decision, _ = run_plan(state, target=(18.0, 10.0), fault_hook=recorder)
        assert attempted[0] == BRANCH_B  # branch A skipped at the top horizon
        assert decision.branch in (BRANCH_B, BRANCH_C)

    def test_fault_injection_forces_fallback(self):
        state = AgentState([5.0, 10.0], [1.2, 0.0])
        plan = contingency_plan(state, PARAMS)
        memory = AgentMemory(inputs=plan.accels.copy())
        decision, memory_after = run_plan(
            state, memory=memory, fault_hook=lambda branch, prob: "numerical-failure"
        )
        assert decision.branch == FALLBACK
        assert not decision.validated
        assert np.array_equal(decision.applied_input, plan.accels[0])
        # memory now holds the braking plan of the predicted next state
        assert not memory_after.is_empty

    def test_all_branches_fail_empty_memory_is_hard_error(self):
        with pytest.raises(InfeasibleStartError):
            run_plan(
                AgentState([5.0, 10.0], [0.0, 0.0]),
                fault_hook=lambda branch, prob: "infeasible",
            )

    def test_deterministic(self):
        state = AgentState([4.0, 9.0], [0.8, -0.2])
        neighbor = AgentState([8.0, 9.0], [-0.5, 0.0])
        first, mem_a = run_plan(state, [neighbor])
        second, mem_b = run_plan(state, [neighbor])
        assert first.branch == second.branch
        assert np.array_equal(first.applied_input, second.applied_input)
        assert np.array_equal(mem_a.inputs, mem_b.inputs)

    def test_branch_c_applied_without_confirmation(self):
        # force A and B to fail so the cascade lands on C
        state = AgentState([5.0, 10.0], [1.1, 0.0])
        plan = contingency_plan(state, PARAMS)
        memory = AgentMemory(inputs=plan.accels.copy())

        def fail_ab(branch, problem):
            return "infeasible" if branch in (BRANCH_A, BRANCH_B) else None

        decision, _ = run_plan(state, memory=memory, fault_hook=fail_ab)
        assert decision.branch == BRANCH_C
        assert decision.candidate_horizon == plan.horizon - 1
        assert not decision.validated


class TestMemory:
    def make_solution(self, state, candidate, target=(15.0, 10.0)):
        from cmcswarm.geometry import workspace_constraints
        from cmcswarm.ftocp import FtocpProblem

        prob = FtocpProblem(
            initial_state=state,
            candidate_horizon=candidate,
            avoid_constraints=(),
            workspace_constraints=tuple(workspace_constraints(state.p, WORKSPACE, PARAMS.rho)),
            cost=cost_toward(target),
            params=PARAMS,
        )
        sol = solve(prob)
        assert sol.status == OPTIMAL
        return sol

    def test_length_matches_braking_horizon(self):
        sol = self.make_solution(AgentState([5.0, 10.0], [2.5, 0.0]), 5)
        memory = shift_memory(sol)
        assert memory.inputs.shape == (5, 2)

    def test_rest_solution_stores_single_zero(self):
        sol = self.make_solution(AgentState([15.0, 10.0], [0.0, 0.0]), 0)
        memory = shift_memory(sol)
        assert memory.inputs.shape == (1, 2)
        assert np.all(memory.inputs == 0.0)

    def test_pop_preserves_braking_magnitude(self):
        # braking from 3 m/s: each stored deceleration has magnitude 3
        plan = contingency_plan(AgentState([0.0, 0.0], [3.0, 0.0]), PARAMS)
        memory = AgentMemory(inputs=plan.accels.copy())
        head, rest = memory.pop()
        assert np.linalg.norm(head) == pytest.approx(3.0, rel=1e-12)
        assert np.linalg.norm(rest[0]) == pytest.approx(3.0, rel=1e-12)

    def test_pop_on_empty_raises(self):
        with pytest.raises(InfeasibleStartError):
            AgentMemory.fresh(2).pop()

    def test_pop_zero_pads(self):
        memory = AgentMemory(inputs=np.array([[1.0, 0.0]]))
        head, rest = memory.pop()
        assert np.array_equal(head, [1.0, 0.0])
        assert np.array_equal(rest, [[0.0, 0.0]])


class TestNoCommunication:
    def test_planner_sees_only_measured_states(self):
        import inspect

        signature = inspect.signature(plan_step)
        neighbor_param = signature.parameters["neighbor_states"]
        assert "AgentState" in str(neighbor_param.annotation)
        # an AgentState carries position and velocity, nothing else
        fields = {f for f in AgentState.__dataclass_fields__}
        assert fields == {"p", "v"}


class TestController:
    def test_retarget(self):
        controller = CmcController(0, cost_toward([1.0, 1.0]), PARAMS, WORKSPACE)
        controller.retarget(np.array([9.0, 9.0]))
        assert np.array_equal(controller.cost.target, [9.0, 9.0])
        assert controller.cost.s_weight == 20.0

    def test_decide_updates_memory(self):
        controller = CmcController(0, cost_toward([15.0, 10.0]), PARAMS, WORKSPACE)
        decision = controller.decide(AgentState([5.0, 10.0], [0.0, 0.0]), [])
        assert decision.branch == BRANCH_A
        assert not controller.memory.is_empty
