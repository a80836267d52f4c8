"""Collision-avoidance half-spaces and free-space geometry.

Pairwise constraints are perpendicular bisecting planes between two
agents' planned braking positions, pulled in by the agent radius on each
side. The two agents' feasible half-spaces are then parallel planes a gap
of exactly 2*rho apart, which is what makes the scheme collision-free.

Static free space is described by overlapping convex cells (half-space
lists); each planning step selects a single cell so the per-agent program
stays convex even in nonconvex environments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contingency import ContingencyPlan
from .dynamics import ModelParams
from .errors import ConfigurationError, DegenerateGeometryError, OutOfWorkspaceError

ENVIRONMENT = "environment"

# Positions this far outside an inset cell still count as contained; covers
# solver tolerance on the one-step-ahead workspace constraint.
CELL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class HalfSpaceConstraint:
    """Linear constraint normal . p <= offset on the owner's braking position.

    `pred_step` is the prediction step (>= 1) the constraint applies to for
    agent pairs; environment constraints use pred_step 0, meaning every step.
    `collision_imminent` marks pairs whose current separation is already
    below 2*rho (the constraint is still returned so a run can log the
    violation and continue).
    """

    normal: np.ndarray
    offset: float
    owner: int
    other: int | str
    pred_step: int
    collision_imminent: bool = False

    def violation(self, position: np.ndarray) -> float:
        """Positive amount by which `position` breaks the constraint."""
        return float(self.normal @ position - self.offset)


def pairwise_constraint(
    p_m: np.ndarray,
    p_j: np.ndarray,
    rho: float,
    pred_step: int,
    owner: int = 0,
    other: int | str = 1,
) -> HalfSpaceConstraint:
    """Bisector half-space keeping agent m on its side of the midplane.

    The plane normal points from m's position to j's; the offset places the
    plane at the midpoint, tightened toward m by the radius rho. Swapping
    the roles yields the anti-parallel plane tightened toward j, so the two
    feasible regions are separated by exactly 2*rho.
    """
    p_m = np.asarray(p_m, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    diff = p_j - p_m
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise DegenerateGeometryError(
            f"coincident positions {p_m.tolist()}: no separating plane exists"
        )
    g = diff / d
    h = float(g @ p_m) + (0.5 * d - rho)
    return HalfSpaceConstraint(
        normal=g,
        offset=h,
        owner=owner,
        other=other,
        pred_step=pred_step,
        collision_imminent=d < 2.0 * rho,
    )


def build_pair_constraints(
    plan_m: ContingencyPlan,
    plan_j: ContingencyPlan,
    rho: float,
    params: ModelParams,
    owner: int = 0,
    other: int | str = 1,
) -> list[HalfSpaceConstraint]:
    """One constraint per prediction step 1..n_cont_max+1 for the pair (m, j).

    Both plans extend constantly past standstill, so every step has a
    well-defined pair of braking positions.
    """
    constraints = []
    for i in range(1, params.n_cont_max + 2):
        try:
            constraints.append(
                pairwise_constraint(plan_m.position(i), plan_j.position(i), rho, i, owner, other)
            )
        except DegenerateGeometryError as exc:
            raise DegenerateGeometryError(f"prediction step {i}: {exc}") from exc
    return constraints


@dataclass(frozen=True, eq=False)
class ConvexCell:
    """Convex polytope {p : normals @ p <= offsets} with unit row normals."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self) -> None:
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.shape[0] != offsets.shape[0]:
            raise ConfigurationError("one offset per normal required")
        lengths = np.linalg.norm(normals, axis=1)
        if np.any(lengths == 0.0):
            raise ConfigurationError("zero normal in cell")
        object.__setattr__(self, "normals", normals / lengths[:, None])
        object.__setattr__(self, "offsets", offsets / lengths)

    def margin(self, position: np.ndarray, inset: float = 0.0) -> float:
        """Smallest slack of `position` w.r.t. the cell inset by `inset`.

        Nonnegative iff the position lies inside the inset cell.
        """
        return float(np.min(self.offsets - inset - self.normals @ np.asarray(position, float)))


def rect_cell(lo, hi) -> ConvexCell:
    """Axis-aligned box [lo, hi] as a convex cell."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or np.any(lo >= hi):
        raise ConfigurationError(f"invalid box bounds lo={lo.tolist()} hi={hi.tolist()}")
    dim = lo.shape[0]
    eye = np.eye(dim)
    normals = np.vstack([eye, -eye])
    offsets = np.concatenate([hi, -lo])
    return ConvexCell(normals, offsets)


@dataclass(frozen=True, eq=False)
class Workspace:
    """Free-space description: outer boundary, solid obstacles, convex cells.

    `boundary` and `obstacles` are (lo, hi) axis-aligned boxes used for
    plotting and scenario bookkeeping. Planning uses `cells` only; when no
    cells are declared the boundary box is the single cell.
    """

    boundary: tuple[np.ndarray, np.ndarray]
    obstacles: tuple[tuple[np.ndarray, np.ndarray], ...] = ()
    cells: tuple[ConvexCell, ...] = ()

    def __post_init__(self) -> None:
        lo = np.asarray(self.boundary[0], dtype=float)
        hi = np.asarray(self.boundary[1], dtype=float)
        if np.any(lo >= hi):
            raise ConfigurationError("workspace boundary must have positive extent")
        object.__setattr__(self, "boundary", (lo, hi))
        obstacles = tuple(
            (np.asarray(a, dtype=float), np.asarray(b, dtype=float)) for a, b in self.obstacles
        )
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def dim(self) -> int:
        return self.boundary[0].shape[0]

    def effective_cells(self) -> tuple[ConvexCell, ...]:
        if self.cells:
            return self.cells
        return (rect_cell(self.boundary[0], self.boundary[1]),)


def select_cell(position: np.ndarray, workspace: Workspace, rho: float) -> int:
    """Index of the inset cell the position sits deepest inside.

    Ties break toward the lowest cell index. Raises when the position lies
    outside every inset cell (beyond CELL_TOL).
    """
    cells = workspace.effective_cells()
    margins = np.array([cell.margin(position, inset=rho) for cell in cells])
    best = int(np.argmax(margins))
    if margins[best] < -CELL_TOL:
        raise OutOfWorkspaceError(
            f"position {np.asarray(position).tolist()} outside all inset cells "
            f"(best margin {margins[best]:.3e})"
        )
    return best


def workspace_constraints(
    position: np.ndarray, workspace: Workspace, rho: float, owner: int = 0
) -> list[HalfSpaceConstraint]:
    """Half-spaces of the selected cell, each pulled inward by rho.

    The inset keeps the whole agent sphere inside the free space, not just
    its center.
    """
    cell = workspace.effective_cells()[select_cell(position, workspace, rho)]
    return [
        HalfSpaceConstraint(
            normal=cell.normals[k].copy(),
            offset=float(cell.offsets[k] - rho),
            owner=owner,
            other=ENVIRONMENT,
            pred_step=0,
        )
        for k in range(cell.normals.shape[0])
    ]


def default_sensor_range(params: ModelParams, margin: float = 1.0) -> float:
    """Twice the worst-case braking distance plus one diameter plus margin."""
    braking_distance = params.v_max * params.n_cont_max * params.dt / 2.0
    return 2.0 * braking_distance + 2.0 * params.rho + margin


def sensor_range_filter(
    p_m: np.ndarray,
    p_j: np.ndarray,
    params: ModelParams,
    sensor_range: float | None = None,
) -> bool:
    """True when the pair is close enough to track; infinite range keeps all."""
    if sensor_range is None:
        sensor_range = default_sensor_range(params)
    if math.isinf(sensor_range):
        return True
    return float(np.linalg.norm(np.asarray(p_j, float) - np.asarray(p_m, float))) <= sensor_range
