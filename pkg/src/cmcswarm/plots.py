"""Figure rendering from run artifacts.

Figures are rebuilt purely from the on-disk artifacts (scenario copy plus
CSV logs), so plots can be regenerated without rerunning the simulation:

  trajectory_<k>.svg  one per target-set window: trajectories as lines,
                      window-start positions as small circles, agents as
                      full-radius circles at the window end, targets as
                      crosses
  distances.svg       every pairwise distance over time with the 2*rho
                      safety line
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Rectangle

from .errors import ArtifactError
from .scenario import load_scenario

_COLORS = ["tab:red", "tab:blue", "tab:green", "tab:purple", "tab:olive",
           "tab:cyan", "tab:orange", "tab:pink", "tab:brown", "tab:gray"]


def _agent_color(agent_id: int) -> str:
    return _COLORS[agent_id % len(_COLORS)]


def _read_trajectories(path: Path) -> dict[int, list[tuple[int, float, float]]]:
    if not path.exists():
        raise ArtifactError(f"missing trajectories file: {path}")
    tracks: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            tracks.setdefault(int(row["agent"]), []).append(
                (int(row["tick"]), float(row["x"]), float(row["y"]))
            )
    for track in tracks.values():
        track.sort()
    return tracks


def _read_distances(path: Path) -> dict[tuple[int, int], list[tuple[int, float]]]:
    if not path.exists():
        raise ArtifactError(f"missing distances file: {path}")
    series: dict[tuple[int, int], list[tuple[int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            key = (int(row["id_i"]), int(row["id_j"]))
            series.setdefault(key, []).append((int(row["tick"]), float(row["d"])))
    for values in series.values():
        values.sort()
    return series


def _draw_workspace(ax, workspace) -> None:
    lo, hi = workspace.boundary
    ax.add_patch(
        Rectangle(lo[:2], hi[0] - lo[0], hi[1] - lo[1], fill=False, edgecolor="black", lw=1.2)
    )
    for obs_lo, obs_hi in workspace.obstacles:
        ax.add_patch(
            Rectangle(
                obs_lo[:2],
                obs_hi[0] - obs_lo[0],
                obs_hi[1] - obs_lo[1],
                facecolor="0.35",
                edgecolor="black",
            )
        )


def plot_run(run_dir: Path | str) -> list[Path]:
    """Render all figures for a finished run; returns the written paths."""
    run_dir = Path(run_dir)
    scenario = load_scenario(run_dir / "scenario.json")
    tracks = _read_trajectories(run_dir / "trajectories.csv")
    distances = _read_distances(run_dir / "distances.csv")

    plt.rcParams["svg.hashsalt"] = scenario.name
    rho = scenario.params.rho
    dt = scenario.params.dt
    lo, hi = scenario.workspace.boundary

    window_starts = [tick for tick, _ in scenario.target_schedule]
    window_ends = window_starts[1:] + [scenario.duration_ticks]

    written: list[Path] = []
    for window_idx, (start, end) in enumerate(zip(window_starts, window_ends)):
        fig, ax = plt.subplots(figsize=(0.35 * (hi[0] - lo[0]) + 2, 0.35 * (hi[1] - lo[1]) + 2))
        _draw_workspace(ax, scenario.workspace)
        targets = scenario.target_schedule[window_idx][1]
        for agent_id in sorted(tracks):
            color = _agent_color(agent_id)
            segment = [(t, x, y) for t, x, y in tracks[agent_id] if start <= t <= end]
            if not segment:
                continue
            xs = [x for _, x, _ in segment]
            ys = [y for _, _, y in segment]
            ax.plot(xs, ys, color=color, lw=1.0, alpha=0.6)
            ax.plot(xs[0], ys[0], marker="o", ms=4, mfc="none", color=color, alpha=0.8)
            ax.add_patch(Circle((xs[-1], ys[-1]), rho, facecolor=color, edgecolor="black", alpha=0.9))
            if agent_id < len(targets):
                ax.plot(*targets[agent_id][:2], marker="x", ms=9, color=color, mew=2)
        ax.set_xlim(lo[0] - 1, hi[0] + 1)
        ax.set_ylim(lo[1] - 1, hi[1] + 1)
        ax.set_aspect("equal")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title(f"{scenario.name}: {start * dt:g} s to {end * dt:g} s")
        path = run_dir / f"trajectory_{window_idx}.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for (i, j), values in sorted(distances.items()):
        ax.plot(
            [t * dt for t, _ in values],
            [d for _, d in values],
            lw=1.0,
            label=f"{i}-{j}",
        )
    ax.axhline(2 * rho, color="black", ls="--", lw=1.2, label=f"2 rho = {2 * rho:g} m")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("pairwise distance [m]")
    ax.set_title(f"{scenario.name}: mutual distances")
    if len(distances) <= 12:
        ax.legend(ncol=4, fontsize=8)
    ax.set_ylim(bottom=0)
    path = run_dir / "distances.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)
    return written
