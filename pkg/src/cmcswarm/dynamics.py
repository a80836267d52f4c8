"""Discrete-time double-integrator dynamics shared by every agent.

All agents follow identical per-axis double-integrator dynamics with
zero-order-hold inputs:

    p' = p + dt*v + (dt^2/2)*a
    v' = v + dt*a

The plant and the prediction model coincide exactly; there is no model
error or disturbance anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Slack accepted on solver outputs (norm bounds, speeds) before a value is
# treated as genuinely out of range.
EPS_NUM = 1e-6

# Speeds within this distance above an exact multiple of a_max*dt are
# treated as the multiple itself when counting braking steps, so solver
# noise cannot flip a braking horizon.
CEIL_SNAP = 1e-9


def validate_space_dim(value: int) -> int:
    """Check a workspace dimension (2 or 3); fixed for a whole scenario."""
    if value not in (2, 3):
        raise ConfigurationError(f"space dimension must be 2 or 3, got {value!r}")
    return value


def braking_steps(speed: float, a_max: float, dt: float, snap: float = CEIL_SNAP) -> int:
    """Smallest integer k with speed <= k*a_max*dt.

    Uses the standard ceiling (smallest integer >= ratio). Speeds up to
    `snap` above an exact multiple of a_max*dt count as the multiple, so
    e.g. speed = k*a_max*dt + 1e-12 still brakes in k steps.
    """
    if speed < 0:
        raise ConfigurationError(f"speed must be nonnegative, got {speed}")
    unit = a_max * dt
    whole = int(math.floor(speed / unit))
    if speed - whole * unit <= snap:
        return whole
    return whole + 1


@dataclass(frozen=True)
class ModelParams:
    """Kinematic limits and horizon settings, identical for the whole swarm.

    Attributes
    ----------
    dt : sampling time [s]
    a_max : acceleration bound on ||a||_2 [m/s^2]
    v_max : velocity bound on ||v||_2 [m/s]
    rho : agent radius [m]; agents are spheres of this radius
    n_pred : prediction horizon [steps]; must exceed the maximum braking
        horizon by at least one step
    """

    dt: float = 0.2
    a_max: float = 3.0
    v_max: float = 3.0
    rho: float = 1.0
    n_pred: int = 12

    def __post_init__(self) -> None:
        for name in ("dt", "a_max", "v_max", "rho"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")
        if self.n_pred < self.n_cont_max + 1:
            raise ConfigurationError(
                f"n_pred must be at least n_cont_max + 1 = {self.n_cont_max + 1}, got {self.n_pred}"
            )

    @property
    def n_cont_max(self) -> int:
        """Largest possible braking horizon: steps to stop from v_max."""
        return braking_steps(self.v_max, self.a_max, self.dt)


@dataclass(frozen=True, eq=False)
class AgentState:
    """Position and velocity of one agent; the only cross-agent information."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if p.ndim != 1 or p.shape != v.shape:
            raise ConfigurationError(f"position/velocity shapes differ: {p.shape} vs {v.shape}")
        validate_space_dim(p.shape[0])
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ConfigurationError("state components must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))


def step(state: AgentState, accel: np.ndarray, params: ModelParams) -> AgentState:
    """Propagate one sampling interval under a constant acceleration."""
    a = np.asarray(accel, dtype=float)
    if a.shape != state.p.shape:
        raise ConfigurationError(f"input dimension {a.shape} does not match state {state.p.shape}")
    dt = params.dt
    p_next = state.p + dt * state.v + 0.5 * dt * dt * a
    v_next = state.v + dt * a
    return AgentState(p_next, v_next)


def propagate(state: AgentState, inputs: np.ndarray, params: ModelParams) -> list[AgentState]:
    """States for prediction steps 1..len(inputs) under an input sequence.

    Computed by repeated application of `step`; the closed matrix-power
    form is used only as a test oracle.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[0] < 1:
        raise ConfigurationError("propagate needs at least one input")
    states: list[AgentState] = []
    current = state
    for k in range(inputs.shape[0]):
        current = step(current, inputs[k], params)
        states.append(current)
    return states
