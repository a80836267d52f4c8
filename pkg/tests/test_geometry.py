import math

import numpy as np
import pytest

from cmcswarm.contingency import contingency_plan
from cmcswarm.dynamics import AgentState, ModelParams
from cmcswarm.errors import ConfigurationError, DegenerateGeometryError, OutOfWorkspaceError
from cmcswarm.geometry import (
    ConvexCell,
    Workspace,
    build_pair_constraints,
    default_sensor_range,
    pairwise_constraint,
    rect_cell,
    select_cell,
    sensor_range_filter,
    workspace_constraints,
)

PARAMS = ModelParams(dt=0.2, a_max=3.0, v_max=3.0, rho=1.0, n_pred=12)


class TestPairwise:
    def test_symmetric_midpoint(self):
        c = pairwise_constraint([0.0, 0.0], [2.0, 0.0], 1.0, 1)
        assert np.allclose(c.normal, [1.0, 0.0])
        assert c.offset == pytest.approx(0.0, abs=1e-15)
        swapped = pairwise_constraint([2.0, 0.0], [0.0, 0.0], 1.0, 1)
        # owner must keep x <= 0; swapped role keeps x >= 2
        assert np.allclose(swapped.normal, [-1.0, 0.0])
        assert swapped.offset == pytest.approx(-2.0, abs=1e-15)

    def test_tightening(self):
        c = pairwise_constraint([0.0, 0.0], [4.0, 0.0], 1.0, 1)
        assert c.offset == pytest.approx(1.0, abs=1e-15)
        assert not c.collision_imminent

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            pairwise_constraint([1.0, 1.0], [1.0, 1.0], 1.0, 1)

    def test_imminent_flag(self):
        c = pairwise_constraint([0.0, 0.0], [1.5, 0.0], 1.0, 1)
        assert c.collision_imminent
        assert c.violation([0.0, 0.0]) > 0  # own position already violates

    def test_unit_normal(self):
        c = pairwise_constraint([0.3, -0.7], [5.1, 2.2], 1.0, 3)
        assert abs(np.linalg.norm(c.normal) - 1.0) < 1e-9


class TestPairConstraints:
    def test_resting_pair_constant(self):
        plan_m = contingency_plan(AgentState([0.0, 0.0], [0.0, 0.0]), PARAMS)
        plan_j = contingency_plan(AgentState([4.0, 0.0], [0.0, 0.0]), PARAMS)
        constraints = build_pair_constraints(plan_m, plan_j, 1.0, PARAMS)
        assert len(constraints) == PARAMS.n_cont_max + 1
        for c in constraints:
            assert c.offset == pytest.approx(1.0, abs=1e-15)
            assert np.allclose(c.normal, [1.0, 0.0])

    def test_head_on_gap_preserved(self):
        state_m = AgentState([-2.0, 0.0], [3.0, 0.0])
        state_j = AgentState([2.0, 0.0], [-3.0, 0.0])
        plan_m = contingency_plan(state_m, PARAMS)
        plan_j = contingency_plan(state_j, PARAMS)
        ours = build_pair_constraints(plan_m, plan_j, 1.0, PARAMS, owner=0, other=1)
        theirs = build_pair_constraints(plan_j, plan_m, 1.0, PARAMS, owner=1, other=0)
        for c_m, c_j in zip(ours, theirs):
            assert np.allclose(c_m.normal, -c_j.normal)  # anti-parallel
            # gap between the two feasible half-spaces equals 2*rho
            gap = -(c_m.offset + c_j.offset)
            assert gap == pytest.approx(2.0, abs=1e-9)

    def test_one_agent_moving(self):
        plan_m = contingency_plan(AgentState([0.0, 0.0], [1.0, 0.0]), PARAMS)
        plan_j = contingency_plan(AgentState([5.0, 0.0], [0.0, 0.0]), PARAMS)
        for i, c in enumerate(build_pair_constraints(plan_m, plan_j, 1.0, PARAMS), start=1):
            assert c.pred_step == i
            assert np.array_equal(plan_j.position(i), plan_j.stop_position)

    def test_coincident_positions_report_step_index(self):
        plan_m = contingency_plan(AgentState([1.0, 1.0], [0.0, 0.0]), PARAMS)
        plan_j = contingency_plan(AgentState([1.0, 1.0], [0.0, 0.0]), PARAMS)
        with pytest.raises(DegenerateGeometryError, match="prediction step 1"):
            build_pair_constraints(plan_m, plan_j, 1.0, PARAMS)

    def test_separation_property_random(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            p_m = rng.uniform(-10, 10, size=2)
            offset_dir = rng.normal(size=2)
            offset_dir /= np.linalg.norm(offset_dir)
            d = rng.uniform(2.0, 12.0)
            p_j = p_m + d * offset_dir
            c_m = pairwise_constraint(p_m, p_j, 1.0, 1)
            c_j = pairwise_constraint(p_j, p_m, 1.0, 1)
            gap = -(c_m.offset + c_j.offset)
            assert abs(gap - 2.0) < 1e-9
            # both own positions satisfied whenever d >= 2*rho
            assert c_m.violation(p_m) <= 1e-12
            assert c_j.violation(p_j) <= 1e-12


class TestWorkspace:
    def test_rtp_boundary_inset(self):
        ws = Workspace(boundary=(np.zeros(2), np.array([20.0, 20.0])))
        constraints = workspace_constraints([10.0, 10.0], ws, 1.0)
        assert len(constraints) == 4
        # inset box: x <= 19, y <= 19, x >= 1, y >= 1
        corners = sorted((tuple(c.normal), c.offset) for c in constraints)
        assert corners == [
            ((-1.0, 0.0), -1.0),
            ((0.0, -1.0), -1.0),
            ((0.0, 1.0), 19.0),
            ((1.0, 0.0), 19.0),
        ]

    def test_cell_selection_max_margin(self):
        left = rect_cell([0.0, 0.0], [6.0, 4.0])
        right = rect_cell([4.0, 0.0], [10.0, 4.0])
        ws = Workspace(boundary=(np.zeros(2), np.array([10.0, 4.0])), cells=(left, right))
        assert select_cell([4.4, 2.0], ws, 1.0) == 0
        assert select_cell([5.6, 2.0], ws, 1.0) == 1

    def test_tie_break_lowest_index(self):
        left = rect_cell([0.0, 0.0], [6.0, 4.0])
        right = rect_cell([4.0, 0.0], [10.0, 4.0])
        ws = Workspace(boundary=(np.zeros(2), np.array([10.0, 4.0])), cells=(left, right))
        assert select_cell([5.0, 2.0], ws, 1.0) == 0  # equidistant from both inset edges

    def test_out_of_workspace(self):
        ws = Workspace(boundary=(np.zeros(2), np.array([20.0, 20.0])))
        with pytest.raises(OutOfWorkspaceError):
            workspace_constraints([0.5, 10.0], ws, 1.0)

    def test_cell_normalization(self):
        cell = ConvexCell(normals=[[2.0, 0.0]], offsets=[4.0])
        assert np.allclose(cell.normals, [[1.0, 0.0]])
        assert np.allclose(cell.offsets, [2.0])

    def test_invalid_rect(self):
        with pytest.raises(ConfigurationError):
            rect_cell([0.0, 0.0], [0.0, 5.0])


class TestSensorRange:
    def test_default_range_from_benchmark_params(self):
        # braking distance 1.5 m -> 2*1.5 + 2*rho + 1 = 6 m
        assert default_sensor_range(PARAMS) == pytest.approx(6.0)
        assert sensor_range_filter([0.0, 0.0], [5.0, 0.0], PARAMS)

    def test_far_pair_dropped(self):
        assert not sensor_range_filter([0.0, 0.0], [100.0, 0.0], PARAMS)

    def test_infinite_range_keeps_all(self):
        assert sensor_range_filter([0.0, 0.0], [100.0, 0.0], PARAMS, sensor_range=math.inf)
