"""Communication-free decentralized collision avoidance for double-integrator swarms.

Agents plan with a receding horizon against the braking trajectories of
their neighbors, reconstructed from measured positions and velocities
alone. The package provides the per-agent planner, a synchronous
closed-loop simulator with plug-and-play admission, benchmark scenario
generators, and a CLI that writes delimited logs plus rendered figures.
"""

from .agent import (
    BRANCH_A,
    BRANCH_B,
    BRANCH_C,
    FALLBACK,
    AgentMemory,
    CmcController,
    CmcDecision,
    plan_step,
    shift_memory,
)
from .artifacts import RunArtifacts, run
from .contingency import ContingencyPlan, contingency_horizon, contingency_plan
from .dynamics import AgentState, ModelParams, braking_steps, propagate, step
from .errors import (
    ArtifactError,
    CmcError,
    ConfigurationError,
    DegenerateGeometryError,
    GeneratorError,
    HardRunError,
    InfeasibleStartError,
    OutOfWorkspaceError,
    PrecheckError,
    VelocityBoundError,
)
from .ftocp import (
    CostParams,
    FtocpProblem,
    FtocpSolution,
    SolverConfig,
    assemble,
    solve,
    validate_candidate,
)
from .geometry import (
    ConvexCell,
    HalfSpaceConstraint,
    Workspace,
    build_pair_constraints,
    default_sensor_range,
    pairwise_constraint,
    rect_cell,
    sensor_range_filter,
    workspace_constraints,
)
from .scenario import Scenario, gen_btn, gen_rtp, load_scenario, precheck, save_scenario
from .sim import AdmissionResult, SimLog, Simulator, WorldState, detect_deadlock

__version__ = "0.1.0"

__all__ = [
    "AgentMemory",
    "AgentState",
    "AdmissionResult",
    "ArtifactError",
    "BRANCH_A",
    "BRANCH_B",
    "BRANCH_C",
    "CmcController",
    "CmcDecision",
    "CmcError",
    "ConfigurationError",
    "ContingencyPlan",
    "ConvexCell",
    "CostParams",
    "DegenerateGeometryError",
    "FALLBACK",
    "FtocpProblem",
    "FtocpSolution",
    "GeneratorError",
    "HalfSpaceConstraint",
    "HardRunError",
    "InfeasibleStartError",
    "ModelParams",
    "OutOfWorkspaceError",
    "PrecheckError",
    "RunArtifacts",
    "Scenario",
    "SimLog",
    "Simulator",
    "SolverConfig",
    "VelocityBoundError",
    "Workspace",
    "WorldState",
    "assemble",
    "braking_steps",
    "build_pair_constraints",
    "contingency_horizon",
    "contingency_plan",
    "default_sensor_range",
    "detect_deadlock",
    "gen_btn",
    "gen_rtp",
    "load_scenario",
    "pairwise_constraint",
    "plan_step",
    "precheck",
    "propagate",
    "rect_cell",
    "run",
    "save_scenario",
    "sensor_range_filter",
    "shift_memory",
    "solve",
    "step",
    "validate_candidate",
    "workspace_constraints",
]
