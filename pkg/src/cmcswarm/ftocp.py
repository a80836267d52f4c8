"""Per-agent finite-time optimal control problem (FTOCP).

Each agent solves, every step, a convex program over its nominal input
sequence a_0..a_{N-1}. States are eliminated through the exact dynamics,
so the decision vector is just the stacked inputs. The braking trajectory
that the safety constraints act on is an affine function of a_0 alone, for
a fixed candidate braking horizon H:

    v_1 = v_0 + dt*a_0
    braking inputs  = -v_1 / (H*dt)          (steps 1..H, zero after)
    braking position at step i = p_1 + beta_i * v_1,
        beta_i = dt*(i-1)*(1 - (i-1)/(2H))   (constant for i > H+1)

The program is assembled in standard conic form

    min  1/2 x'Px + q'x   s.t.  b - Ax in K

with K a product of a nonnegative orthant (workspace and pairwise
half-space rows) and second-order cones (input and velocity norm bounds),
and handed to a native conic solver. A configuration switch replaces each
cone by an inscribed regular polygon for QP-only backends; the feasible
set only shrinks, so no safety property is lost.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite

import clarabel

from .dynamics import EPS_NUM, AgentState, ModelParams, braking_steps, propagate
from .errors import ConfigurationError
from .geometry import HalfSpaceConstraint

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True, eq=False)
class CostParams:
    """Quadratic tracking cost: input effort, terminal velocity, terminal offset.

    J = sum_i r*||a_i||^2 + q*||v_N||^2 + s*||p_N - target||^2
    """

    r_weight: float
    q_weight: float
    s_weight: float
    target: np.ndarray

    def __post_init__(self) -> None:
        if min(self.r_weight, self.q_weight, self.s_weight) < 0:
            raise ConfigurationError("cost weights must be nonnegative for convexity")
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))


@dataclass(frozen=True, eq=False)
class FtocpProblem:
    """One agent's program for one candidate braking horizon.

    `avoid_constraints` must cover prediction steps 1..n_cont_max+1 for
    every tracked neighbor (the standard output of
    `build_pair_constraints`); `workspace_constraints` are the selected
    cell's inset half-spaces (pred_step 0 = all steps).
    `extra_speed_bound`, when set, caps ||v_1|| (the one-step velocity).
    """

    initial_state: AgentState
    candidate_horizon: int
    avoid_constraints: tuple[HalfSpaceConstraint, ...]
    workspace_constraints: tuple[HalfSpaceConstraint, ...]
    cost: CostParams
    params: ModelParams
    extra_speed_bound: float | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.candidate_horizon <= self.params.n_cont_max:
            raise ConfigurationError(
                f"candidate horizon {self.candidate_horizon} outside "
                f"[0, {self.params.n_cont_max}]"
            )
        object.__setattr__(self, "avoid_constraints", tuple(self.avoid_constraints))
        object.__setattr__(self, "workspace_constraints", tuple(self.workspace_constraints))


@dataclass
class FtocpSolution:
    """Outcome of one solve; trajectory fields are populated when optimal."""

    status: str
    solver_status: str
    solve_time: float
    nominal_inputs: np.ndarray | None = None
    nominal_states: list[AgentState] | None = None
    contingency_inputs: np.ndarray | None = None
    contingency_states: list[AgentState] | None = None
    objective: float | None = None
    kkt_residual: float | None = None


@dataclass(frozen=True)
class SolverConfig:
    """Backend settings.

    Tolerances are requested tight; a solution is accepted as optimal when
    its KKT/constraint residuals come in under `tol_accept`.

    The margin fields (added to the respective bounds; negative means
    tightened) keep the branch cascade numerically robust. Optimal
    solutions ride active caps exactly, and every speed multiple of
    a_max*dt is a braking-horizon classification boundary, so branches
    whose result must realize a specific horizon get caps pulled strictly
    below those boundaries; solutions then land inside the intended
    horizon window no matter how the solver noise falls. The tightening
    only shrinks feasible sets, so every safety guarantee survives. The
    unconfirmed conservative branch instead gets widened margins: it
    carries the stored-plan feasibility candidate, which may sit up to one
    snap window plus accumulated solver noise outside the nominal bounds,
    and horizon drift there is harmless because its result is applied
    without confirmation.
    """

    cone_geometry: str = "socp"  # "socp" | "polygon"
    polygon_sides: int = 16
    tol_request: float = 1e-8
    tol_accept: float = 1e-6
    max_iter: int = 200
    cone_margin: float = -5e-7  # input and velocity norm cones
    # Per-horizon-step tightening of the branch speed caps: a cap for
    # candidate horizon h becomes a_max*h*dt + h*speed_gate_margin. The
    # proportional form matters: a braking step scales speeds by
    # (h-1)/h, so a proportional offset is reproduced exactly one rung
    # down, and cap-riding solutions keep a uniform sub-boundary margin
    # through arbitrarily long deceleration cascades. A fixed offset would
    # contract rung over rung until solves sit on a razor-thin set.
    speed_gate_margin: float = -2e-6
    # Workspace and pairwise rows are tightened a hair on confirmed
    # branches, so a pair pressing against a shared bisector parks just
    # above one diameter instead of just below it; the unconfirmed branch
    # widens this (see relaxed) to admit candidates parked on the surface.
    geometry_margin: float = -1e-8

    def relaxed(self) -> "SolverConfig":
        """Profile for the unconfirmed branch: admit a noise-shifted candidate.

        The speed cap keeps the same sub-boundary tightening: letting
        solutions ride above a horizon boundary would lengthen the
        realized braking plan by a whole discrete step, a macroscopic
        change the neighbors' constraints never accounted for. The input
        cone is widened instead (staying under the package-wide numeric
        tolerance), so braking down to the tightened cap stays feasible.
        """
        return replace(self, cone_margin=9e-7, geometry_margin=1e-6)

    def terminal_rest(self) -> "SolverConfig":
        """Profile for the at-rest terminal branch (the cascade's last resort).

        Its inputs are pinned by the standstill equality, so it cannot ride
        any geometric row; the extra-wide acceptance margin only tolerates
        neighbors parked against their own (smaller) margins.
        """
        return replace(self.relaxed(), geometry_margin=3e-6)


DEFAULT_SOLVER_CONFIG = SolverConfig()


@dataclass(eq=False)
class ConicProgram:
    """Standard-form conic program: min 1/2 x'Px + q'x, b - Ax in K."""

    p_mat: sp.csc_matrix
    q_vec: np.ndarray
    a_mat: sp.csc_matrix
    b_vec: np.ndarray
    cone_spec: list[tuple[str, int]]  # ("nonneg"|"soc", block size) in row order
    obj_const: float
    row_counts: dict[str, int] = field(default_factory=dict)


# --- cached structure shared by every solve with equal (dt, N, dim) ---------

_POS_COEFF_CACHE: dict[tuple[float, int], np.ndarray] = {}
_P_CACHE: dict[tuple, sp.csc_matrix] = {}
_SOC_BLOCK_CACHE: dict[tuple[float, int, int], np.ndarray] = {}


def _pos_coeffs(dt: float, n_pred: int) -> np.ndarray:
    """C[i, l] = position coefficient of input a_l at prediction step i."""
    key = (dt, n_pred)
    cached = _POS_COEFF_CACHE.get(key)
    if cached is None:
        steps = np.arange(n_pred + 1)[:, None]
        inputs = np.arange(n_pred)[None, :]
        cached = np.where(inputs < steps, dt * dt * (steps - inputs - 0.5), 0.0)
        _POS_COEFF_CACHE[key] = cached
    return cached


def _objective_p(params: ModelParams, cost: CostParams, dim: int) -> sp.csc_matrix:
    key = (params.dt, params.n_pred, dim, cost.r_weight, cost.q_weight, cost.s_weight)
    cached = _P_CACHE.get(key)
    if cached is None:
        n = params.n_pred
        w = _pos_coeffs(params.dt, n)[n]  # position weights of each input at step N
        vv = params.dt * params.dt * np.ones((n, n))
        ww = np.outer(w, w)
        dense = 2.0 * (
            cost.r_weight * np.eye(n * dim)
            + cost.q_weight * np.kron(vv, np.eye(dim))
            + cost.s_weight * np.kron(ww, np.eye(dim))
        )
        cached = sp.csc_matrix(dense)
        _P_CACHE[key] = cached
    return cached


def _beta_coeffs(horizon: int, dt: float, n_pred: int) -> np.ndarray:
    """beta[i] for i = 0..n_pred: braking-position drift along v_1 at step i.

    beta[0] is unused; entries past horizon+1 repeat the standstill value.
    """
    beta = np.zeros(n_pred + 1)
    if horizon >= 1:
        for i in range(1, n_pred + 1):
            j = min(i, horizon + 1)
            beta[i] = dt * (j - 1) * (1.0 - (j - 1) / (2.0 * horizon))
    return beta


def _soc_coeff_block(dt: float, n_pred: int, dim: int) -> np.ndarray:
    """Constant A-matrix block of the input and velocity cones (stacked).

    Per cone: one zero row (the bound) then `dim` rows mapping x to the
    negated bounded quantity. Input cones cover i = 0..N-1, then velocity
    cones i = 1..N.
    """
    key = (dt, n_pred, dim)
    cached = _SOC_BLOCK_CACHE.get(key)
    if cached is None:
        nx = n_pred * dim
        rows = np.zeros((2 * n_pred * (dim + 1), nx))
        at = 0
        for i in range(n_pred):
            rows[at + 1 : at + 1 + dim, i * dim : (i + 1) * dim] = -np.eye(dim)
            at += dim + 1
        for i in range(1, n_pred + 1):
            block = rows[at + 1 : at + 1 + dim]
            block.reshape(dim, n_pred, dim)[:, :i] = -dt * np.eye(dim)[:, None, :]
            at += dim + 1
        cached = rows
        _SOC_BLOCK_CACHE[key] = cached
    return cached


def assemble(problem: FtocpProblem, config: SolverConfig = DEFAULT_SOLVER_CONFIG) -> ConicProgram:
    """Build the conic program for one candidate braking horizon."""
    params = problem.params
    state = problem.initial_state
    n, dim = params.n_pred, state.dim
    nx = n * dim
    dt = params.dt
    hor = problem.candidate_horizon

    coeff = _pos_coeffs(dt, n)
    beta = _beta_coeffs(hor, dt, n)
    p0, v0 = state.p, state.v
    # braking position at step i = p0 + (dt + beta_i)*v0 + (dt^2/2 + beta_i*dt)*a0
    a0_coeff = 0.5 * dt * dt + beta * dt
    geo_slack = config.geometry_margin

    env = [
        hs
        for hs in problem.workspace_constraints
        if hs.pred_step == 0 or 1 <= hs.pred_step <= n
    ]
    # Pairwise rows are kept at every computed step, not just through the
    # own stop: the bisector midplanes keep moving while the other agent's
    # braking plan advances, and dropping the later rows lets the stopped
    # position drift across them tick over tick. Past the own stop the row
    # constrains the constant standstill position (beta saturates).
    collisions = [hs for hs in problem.avoid_constraints if hs.pred_step >= 1]

    # Terminal rest gate: a zero speed cap means "come to a standstill",
    # encoded as the equality v_1 = 0 rather than a degenerate cone.
    rest_gate = problem.extra_speed_bound is not None and float(problem.extra_speed_bound) == 0.0

    # linear rows: workspace on nominal positions (steps 1..N), workspace
    # on braking positions (steps 2..H+1; the standstill state repeats
    # against the same static half-spaces afterwards, so later steps would
    # be duplicates), and pairwise rows at every computed step
    n_env = len(env)
    n_env_nominal = n_env * n
    n_env_braking = n_env * hor
    n_coll = len(collisions)
    lin_rows = np.zeros((n_env_nominal + n_env_braking + n_coll, nx))
    lin_rhs = np.empty(lin_rows.shape[0])

    if n_env:
        normals = np.array([hs.normal for hs in env])
        offsets = np.array([hs.offset for hs in env])
        # nominal block: row (e, i) has coefficient C[i, l]*normal_e on a_l
        lin_rows[:n_env_nominal] = np.einsum(
            "il,ek->eilk", coeff[1:], normals
        ).reshape(n_env_nominal, nx)
        steps = np.arange(1, n + 1)
        lin_rhs[:n_env_nominal] = (
            (offsets + geo_slack - normals @ p0)[:, None] - np.outer(normals @ v0, steps * dt)
        ).ravel()
        if hor >= 1:
            at = n_env_nominal
            brake_steps = np.arange(2, hor + 2)
            block = np.einsum("i,ek->eik", a0_coeff[brake_steps], normals)
            lin_rows[at : at + n_env_braking, :dim] = block.reshape(n_env_braking, dim)
            lin_rhs[at : at + n_env_braking] = (
                (offsets + geo_slack - normals @ p0)[:, None]
                - np.outer(normals @ v0, dt + beta[brake_steps])
            ).ravel()

    if n_coll:
        at = n_env_nominal + n_env_braking
        coll_steps = np.minimum([hs.pred_step for hs in collisions], n)
        coll_normals = np.array([hs.normal for hs in collisions])
        lin_rows[at:, :dim] = a0_coeff[coll_steps, None] * coll_normals
        lin_rhs[at:] = [
            hs.offset + geo_slack - hs.normal @ (p0 + (dt + beta[i]) * v0)
            for hs, i in zip(collisions, coll_steps)
        ]

    # norm bounds ||F x + f|| <= bound: inputs i = 0..N-1, velocities
    # i = 1..N (keeps the braking horizon capped), optional ||v_1|| cap
    bounds = np.concatenate(
        [
            np.full(n, params.a_max + config.cone_margin),
            np.full(n, params.v_max + config.cone_margin),
        ]
    )
    f_vecs = [np.zeros(dim)] * n + [v0] * n
    extra_rows = np.zeros((0, nx))
    if problem.extra_speed_bound is not None and not rest_gate:
        extra_rows = np.zeros((dim + 1, nx))
        extra_rows[1:, :dim] = -dt * np.eye(dim)
        gate = float(problem.extra_speed_bound) + config.speed_gate_margin * max(hor, 1)
        bounds = np.append(bounds, max(gate, 0.0))
        f_vecs.append(v0)

    zero_rows = np.zeros((dim if rest_gate else 0, nx))
    zero_rhs = np.zeros(zero_rows.shape[0])
    if rest_gate:  # v0 + dt*a0 = 0
        zero_rows[:, :dim] = dt * np.eye(dim)
        zero_rhs[:] = -v0

    cone_spec: list[tuple[str, int]] = []
    if rest_gate:
        cone_spec.append(("zero", dim))

    if config.cone_geometry == "polygon":
        if dim != 2:
            raise ConfigurationError("polygon cone approximation is 2-D only")
        k_sides = config.polygon_sides
        angles = 2.0 * np.pi * np.arange(k_sides) / k_sides
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        shrink = np.cos(np.pi / k_sides)
        soc_block = _soc_coeff_block(dt, n, dim)
        f_mats = [-soc_block[c * (dim + 1) + 1 : (c + 1) * (dim + 1)] for c in range(2 * n)]
        if extra_rows.shape[0]:
            f_mats.append(-extra_rows[1:])
        poly_rows = []
        poly_rhs = []
        for f_mat, f_vec, bound in zip(f_mats, f_vecs, bounds):
            for nk in dirs:
                poly_rows.append(nk @ f_mat)
                poly_rhs.append(bound * shrink - nk @ f_vec)
        a_mat = np.vstack([zero_rows, lin_rows, np.array(poly_rows)])
        b_vec = np.concatenate([zero_rhs, lin_rhs, np.array(poly_rhs)])
        cone_spec.append(("nonneg", lin_rows.shape[0] + len(poly_rows)))
    else:
        cone_spec.append(("nonneg", lin_rows.shape[0]))
        soc_rhs = np.zeros((2 * n + (1 if extra_rows.shape[0] else 0)) * (dim + 1))
        for c, (f_vec, bound) in enumerate(zip(f_vecs, bounds)):
            soc_rhs[c * (dim + 1)] = bound
            soc_rhs[c * (dim + 1) + 1 : (c + 1) * (dim + 1)] = f_vec
            cone_spec.append(("soc", dim + 1))
        a_mat = np.vstack([zero_rows, lin_rows, _soc_coeff_block(dt, n, dim), extra_rows])
        b_vec = np.concatenate([zero_rhs, lin_rhs, soc_rhs])

    # objective: sum r||a_i||^2 + q||v_N||^2 + s||p_N - target||^2
    err0 = p0 + n * dt * v0 - problem.cost.target
    w = coeff[n]
    q_vec = 2.0 * (
        problem.cost.q_weight * dt * np.tile(v0, n)
        + problem.cost.s_weight * (w[:, None] * err0).ravel()
    )
    obj_const = float(
        problem.cost.q_weight * v0 @ v0 + problem.cost.s_weight * err0 @ err0
    )

    return ConicProgram(
        p_mat=_objective_p(params, problem.cost, dim),
        q_vec=q_vec,
        a_mat=sp.csc_matrix(a_mat),
        b_vec=b_vec,
        cone_spec=cone_spec,
        obj_const=obj_const,
        row_counts={
            "env_nominal": n_env_nominal,
            "env_braking": n_env_braking,
            "collision": len(collisions),
            "cones": sum(1 for kind, _ in cone_spec if kind == "soc"),
        },
    )


# --- backend -----------------------------------------------------------------


@dataclass
class BackendResult:
    raw_status: str
    x: np.ndarray | None
    z: np.ndarray | None
    s: np.ndarray | None
    solve_time: float


_CONE_BUILDERS = {}


def _backend_cones(cone_spec):
    if not _CONE_BUILDERS:
        _CONE_BUILDERS.update(
            zero=clarabel.ZeroConeT,
            nonneg=clarabel.NonnegativeConeT,
            soc=clarabel.SecondOrderConeT,
        )
    try:
        return [_CONE_BUILDERS[kind](size) for kind, size in cone_spec]
    except KeyError as exc:
        raise ConfigurationError(f"unknown cone kind {exc}") from exc


def solve_conic(prog: ConicProgram, config: SolverConfig = DEFAULT_SOLVER_CONFIG) -> BackendResult:
    """Hand a standard-form program to the pinned native conic solver."""
    cones = _backend_cones(prog.cone_spec)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = config.tol_request
    settings.tol_gap_rel = config.tol_request
    settings.tol_feas = config.tol_request
    settings.max_iter = config.max_iter
    start = time.perf_counter()
    solver = clarabel.DefaultSolver(
        prog.p_mat, prog.q_vec, prog.a_mat, prog.b_vec, cones, settings
    )
    result = solver.solve()
    elapsed = time.perf_counter() - start
    raw = str(result.status)
    x = np.asarray(result.x) if result.x is not None else None
    z = np.asarray(result.z) if result.z is not None else None
    s = np.asarray(result.s) if result.s is not None else None
    return BackendResult(raw_status=raw, x=x, z=z, s=s, solve_time=elapsed)


def _kkt_residual(prog: ConicProgram, x: np.ndarray, z: np.ndarray, s: np.ndarray) -> float:
    """Worst KKT violation of a returned primal/dual pair.

    Primal cone violations are absolute (constraint rows are in meters and
    meters/second). Stationarity and the complementarity gap are scaled by
    the size of the terms entering them, the usual solver termination
    convention, so the measure is meaningful regardless of how large the
    tracking cost happens to be.
    """
    px = prog.p_mat @ x
    atz = prog.a_mat.T @ z
    stat_scale = max(
        1.0,
        float(np.max(np.abs(px))),
        float(np.max(np.abs(prog.q_vec))) if prog.q_vec.size else 0.0,
        float(np.max(np.abs(atz))) if atz.size else 0.0,
    )
    stationarity = float(np.max(np.abs(px + prog.q_vec + atz))) / stat_scale
    slack = prog.b_vec - prog.a_mat @ x
    worst = 0.0
    offset = 0
    for kind, size in prog.cone_spec:
        block = slack[offset : offset + size]
        if kind == "zero":
            if size:
                worst = max(worst, float(np.max(np.abs(block))))
        elif kind == "nonneg":
            if size:
                worst = max(worst, float(-np.min(block)), 0.0)
        else:
            worst = max(worst, float(np.linalg.norm(block[1:]) - block[0]))
        offset += size
    objective = 0.5 * float(x @ px) + float(prog.q_vec @ x)
    gap = abs(float(slack @ z)) / max(1.0, abs(objective))
    return max(stationarity, worst, gap)


def evaluate_objective(
    problem: FtocpProblem, inputs: np.ndarray, states: list[AgentState] | None = None
) -> float:
    """Exact cost of an input sequence under the true dynamics."""
    if states is None:
        states = propagate(problem.initial_state, inputs, problem.params)
    cost = problem.cost
    terminal = states[-1]
    err = terminal.p - cost.target
    return float(
        cost.r_weight * np.sum(inputs * inputs)
        + cost.q_weight * terminal.v @ terminal.v
        + cost.s_weight * err @ err
    )


def braking_trajectory(
    state: AgentState, a0: np.ndarray, horizon: int, params: ModelParams
) -> tuple[np.ndarray, list[AgentState]]:
    """Braking inputs (steps 1..N-1) and states (steps 1..N) implied by a_0.

    This is the affine elimination the assembly uses, reproduced explicitly
    so solutions carry materialized braking predictions.
    """
    n, dt, dim = params.n_pred, params.dt, state.dim
    v1 = state.v + dt * np.asarray(a0, float)
    p1 = state.p + dt * state.v + 0.5 * dt * dt * np.asarray(a0, float)
    inputs = np.zeros((n - 1, dim))
    if horizon >= 1:
        inputs[:horizon] = -v1 / (horizon * dt)
    beta = _beta_coeffs(horizon, dt, n)
    states = []
    for i in range(1, n + 1):
        j = min(i, horizon + 1)
        if horizon >= 1:
            frac = 1.0 - (j - 1) / horizon if j <= horizon else 0.0
            states.append(AgentState(p1 + beta[j] * v1, v1 * frac))
        else:
            states.append(AgentState(p1, v1))
    return inputs, states


_ACCEPT_RAW = {"Solved", "AlmostSolved", "MaxIterations", "InsufficientProgress"}
_INFEASIBLE_RAW = {"PrimalInfeasible", "AlmostPrimalInfeasible"}


def solve(problem: FtocpProblem, config: SolverConfig = DEFAULT_SOLVER_CONFIG) -> FtocpSolution:
    """Assemble and solve; classify the outcome by residuals, not status alone."""
    prog = assemble(problem, config)
    backend = solve_conic(prog, config)
    raw = backend.raw_status

    if raw in _INFEASIBLE_RAW:
        return FtocpSolution(status=INFEASIBLE, solver_status=raw, solve_time=backend.solve_time)
    if raw not in _ACCEPT_RAW or backend.x is None or backend.z is None:
        return FtocpSolution(
            status=NUMERICAL_FAILURE, solver_status=raw, solve_time=backend.solve_time
        )

    residual = _kkt_residual(prog, backend.x, backend.z, prog.b_vec - prog.a_mat @ backend.x)
    if residual > config.tol_accept:
        return FtocpSolution(
            status=NUMERICAL_FAILURE,
            solver_status=raw,
            solve_time=backend.solve_time,
            kkt_residual=residual,
        )

    params = problem.params
    inputs = backend.x.reshape(params.n_pred, problem.initial_state.dim)
    nominal_states = propagate(problem.initial_state, inputs, params)
    braking_inputs, braking_states = braking_trajectory(
        problem.initial_state, inputs[0], problem.candidate_horizon, params
    )
    return FtocpSolution(
        status=OPTIMAL,
        solver_status=raw,
        solve_time=backend.solve_time,
        nominal_inputs=inputs,
        nominal_states=nominal_states,
        contingency_inputs=braking_inputs,
        contingency_states=braking_states,
        objective=evaluate_objective(problem, inputs, nominal_states),
        kkt_residual=residual,
    )


def validate_candidate(
    solution: FtocpSolution, candidate_horizon: int, params: ModelParams
) -> bool:
    """Confirm that the optimal one-step velocity realizes the candidate horizon.

    The realized horizon uses the same snapped ceiling as plan construction
    (values within 1e-9 above a multiple of a_max*dt round down), and is
    clamped at the maximum horizon when the speed sits within solver
    tolerance of v_max, keeping validation consistent with what the next
    step will actually measure.
    """
    if solution.status != OPTIMAL:
        raise ConfigurationError("only optimal solutions can be validated")
    speed = solution.nominal_states[0].speed
    realized = braking_steps(speed, params.a_max, params.dt)
    if speed <= params.v_max + EPS_NUM:
        realized = min(realized, params.n_cont_max)
    return realized == candidate_horizon


def dump_program(prog: ConicProgram, path) -> None:
    """Write the assembled program as Matrix Market blocks plus cone list."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# conic program: min 1/2 x'Px + q'x  s.t. b - Ax in K\n")
        for name, mat in (("P", prog.p_mat), ("A", prog.a_mat)):
            buf = io.BytesIO()
            mmwrite(buf, mat)
            handle.write(f"[{name}]\n{buf.getvalue().decode('ascii')}\n")
        for name, vec in (("q", prog.q_vec), ("b", prog.b_vec)):
            handle.write(f"[{name}]\n")
            handle.writelines(f"{val:.17g}\n" for val in vec)
            handle.write("\n")
        handle.write("[cones]\n")
        handle.writelines(f"{kind} {size}\n" for kind, size in prog.cone_spec)
        handle.write(f"\n[objective-constant]\n{prog.obj_const:.17g}\n")
