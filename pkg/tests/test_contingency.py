import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmcswarm.contingency import contingency_horizon, contingency_plan
from cmcswarm.dynamics import AgentState, ModelParams, propagate
from cmcswarm.errors import VelocityBoundError

PARAMS = ModelParams(dt=0.2, a_max=3.0, v_max=3.0, rho=1.0, n_pred=12)


def random_state(rng, dim=2, speed_cap=3.0):
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    speed = rng.uniform(0.0, speed_cap)
    return AgentState(rng.uniform(-10, 10, size=dim), speed * direction)


class TestHorizon:
    def test_benchmark_max_speed(self):
        assert contingency_horizon(np.array([3.0, 0.0]), PARAMS) == 5

    def test_at_rest(self):
        assert contingency_horizon(np.array([0.0, 0.0]), PARAMS) == 0

    def test_exact_rational(self):
        # ceil(1.3 / 0.6) = ceil(13/6) = 3
        assert contingency_horizon(np.array([0.0, 1.3]), PARAMS) == 3

    def test_velocity_bound_violation(self):
        with pytest.raises(VelocityBoundError):
            contingency_horizon(np.array([3.1, 0.0]), PARAMS)

    def test_speed_at_bound_plus_noise_clamped(self):
        assert contingency_horizon(np.array([3.0 + 5e-7, 0.0]), PARAMS) == 5


class TestPlan:
    def test_benchmark_example(self):
        plan = contingency_plan(AgentState([0.0, 0.0], [3.0, 0.0]), PARAMS)
        assert plan.horizon == 5
        assert plan.accels.shape == (5, 2)
        assert np.allclose(plan.accels, [[-3.0, 0.0]] * 5)
        # stopping distance sums to 0.54 + 0.42 + 0.30 + 0.18 + 0.06 = 1.5
        assert plan.stop_position == pytest.approx([1.5, 0.0], abs=1e-12)

    def test_at_rest(self):
        state = AgentState([2.0, -1.0], [0.0, 0.0])
        plan = contingency_plan(state, PARAMS)
        assert plan.horizon == 0
        assert plan.accels.shape == (0, 2)
        assert np.array_equal(plan.stop_position, state.p)
        assert all(np.array_equal(plan.position(i), state.p) for i in range(1, 7))

    def test_single_step_stop(self):
        plan = contingency_plan(AgentState([0.0, 0.0], [0.0, 0.6]), PARAMS)
        assert plan.horizon == 1
        assert np.allclose(plan.accels, [[0.0, -3.0]])
        assert plan.stop_position == pytest.approx([0.0, 0.06], abs=1e-15)

    def test_positions_cover_all_constraint_steps(self):
        plan = contingency_plan(AgentState([1.0, 1.0], [0.7, -0.4]), PARAMS)
        assert plan.positions.shape == (PARAMS.n_cont_max + 1, 2)

    def test_positions_frozen_after_standstill(self):
        plan = contingency_plan(AgentState([0.0, 0.0], [1.0, 0.5]), PARAMS)
        for i in range(plan.horizon, PARAMS.n_cont_max + 1):
            assert np.array_equal(plan.positions[i], plan.stop_position)

    def test_cross_agent_reconstruction_bit_identical(self):
        # a copy of the measured state yields the same plan, bit for bit
        original = AgentState([3.0, 4.0], [-1.2, 0.9])
        copy = AgentState(original.p.copy(), original.v.copy())
        plan_a = contingency_plan(original, PARAMS)
        plan_b = contingency_plan(copy, PARAMS)
        assert plan_a.horizon == plan_b.horizon
        assert np.array_equal(plan_a.accels, plan_b.accels)
        assert np.array_equal(plan_a.positions, plan_b.positions)

    def test_propagate_reproduces_positions(self):
        state = AgentState([0.0, 0.0], [2.2, -1.1])
        plan = contingency_plan(state, PARAMS)
        inputs = np.vstack([plan.accels, np.zeros((PARAMS.n_cont_max + 1 - plan.horizon, 2))])
        states = propagate(state, inputs, PARAMS)
        for i in range(PARAMS.n_cont_max + 1):
            assert np.linalg.norm(states[i].p - plan.positions[i]) < 1e-12
        assert np.linalg.norm(states[-1].v) < 1e-12


class TestPlanProperties:
    """Randomized checks of the braking-plan guarantees."""

    def test_random_states_bulk(self):
        rng = np.random.default_rng(2024)
        for _ in range(2000):
            state = random_state(rng)
            plan = contingency_plan(state, PARAMS)
            speed = state.speed
            if plan.horizon:
                # feasible deceleration
                mags = np.linalg.norm(plan.accels, axis=1)
                assert np.all(mags <= PARAMS.a_max)
                assert mags[0] == pytest.approx(speed / (plan.horizon * PARAMS.dt), rel=1e-12)
            # straight path: every position collinear with p and p + v
            direction = state.v / speed if speed else np.zeros(2)
            for i in range(1, PARAMS.n_cont_max + 2):
                offset = plan.position(i) - state.p
                residual = offset - (offset @ direction) * direction
                assert np.linalg.norm(residual) < 1e-9
            # stopping distance
            expected = speed * plan.horizon * PARAMS.dt / 2.0
            assert np.linalg.norm(plan.stop_position - state.p) == pytest.approx(
                expected, abs=1e-9
            )

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-3, 3, allow_nan=False),
        st.floats(-3, 3, allow_nan=False),
    )
    def test_hypothesis_states(self, vx, vy):
        v = np.array([vx, vy])
        speed = float(np.linalg.norm(v))
        if speed > PARAMS.v_max:
            v = v / speed * PARAMS.v_max
        plan = contingency_plan(AgentState([0.0, 0.0], v), PARAMS)
        if plan.horizon:
            assert np.linalg.norm(plan.accels[0]) <= PARAMS.a_max * (1 + 1e-12)
        assert np.array_equal(plan.positions[-1], plan.stop_position)
