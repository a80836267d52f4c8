"""Braking (contingency) horizons and trajectories.

Every agent can reconstruct, from measurable state alone, the plan any
other agent would execute in an emergency: decelerate at a constant rate
along the current direction of motion until standstill, then stay put.
This plan carries no decision-making element, which is what lets agents
build each other's safety constraints without communication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EPS_NUM, AgentState, ModelParams, braking_steps
from .errors import VelocityBoundError


def contingency_horizon(v: np.ndarray, params: ModelParams) -> int:
    """Smallest number of steps in which an agent at velocity v can stop.

    The result is clamped to the swarm-wide maximum braking horizon, which
    only matters when the speed sits within numerical tolerance of v_max.
    """
    speed = float(np.linalg.norm(np.asarray(v, dtype=float)))
    if speed > params.v_max + EPS_NUM:
        raise VelocityBoundError(
            f"speed {speed} exceeds bound {params.v_max} beyond tolerance {EPS_NUM}"
        )
    return min(braking_steps(speed, params.a_max, params.dt), params.n_cont_max)


@dataclass(frozen=True, eq=False)
class ContingencyPlan:
    """Deterministic braking plan of one agent.

    Attributes
    ----------
    horizon : number of braking steps until standstill (0 when at rest)
    accels : (horizon, dim) constant deceleration inputs; each row is the
        same negative multiple of the initial velocity with norm <= a_max
    positions : (n_cont_max + 1, dim) positions for prediction steps
        1..n_cont_max+1; rows past the standstill step all equal
        `stop_position`, so constraint construction can index any step
    stop_position : final resting position
    """

    horizon: int
    accels: np.ndarray
    positions: np.ndarray
    stop_position: np.ndarray

    def position(self, pred_step: int) -> np.ndarray:
        """Planned position at prediction step i >= 1."""
        return self.positions[pred_step - 1]


def contingency_plan(state: AgentState, params: ModelParams) -> ContingencyPlan:
    """Build the braking plan for a measured state.

    A pure function of (p, v, params): planning for a copy of another
    agent's state yields a bit-identical plan. The velocity profile is
    formed analytically as v*(horizon - i)/horizon so the standstill
    velocity is exactly zero and positions freeze bitwise afterwards.
    """
    horizon = contingency_horizon(state.v, params)
    dim = state.dim
    n_rows = params.n_cont_max + 1
    if horizon == 0:
        return ContingencyPlan(
            horizon=0,
            accels=np.zeros((0, dim)),
            positions=np.tile(state.p, (n_rows, 1)),
            stop_position=state.p.copy(),
        )

    decel = -state.v / (horizon * params.dt)
    accels = np.tile(decel, (horizon, 1))

    dt = params.dt
    positions = np.empty((n_rows, dim))
    p = state.p.copy()
    for i in range(n_rows):
        if i < horizon:
            v_i = state.v * ((horizon - i) / horizon)
            p = p + dt * v_i + 0.5 * dt * dt * decel
        positions[i] = p
    return ContingencyPlan(
        horizon=horizon,
        accels=accels,
        positions=positions,
        stop_position=positions[horizon - 1].copy(),
    )
