import json

import numpy as np
import pytest
from click.testing import CliRunner

from cmcswarm.artifacts import read_summary, run
from cmcswarm.cli import main
from cmcswarm.dynamics import AgentState
from cmcswarm.errors import PrecheckError
from cmcswarm.plots import plot_run
from cmcswarm.scenario import (
    Scenario,
    gen_rtp,
    load_scenario,
    save_scenario,
    scenario_to_text,
)


def tiny_scenario(duration=20, name="tiny"):
    base = gen_rtp(0)
    agents = (
        AgentState([4.0, 10.0], [0.0, 0.0]),
        AgentState([16.0, 10.0], [0.0, 0.0]),
    )
    schedule = ((0, (np.array([16.0, 10.0]), np.array([4.0, 10.0]))),)
    return Scenario(
        name=name,
        seed=7,
        space_dim=2,
        params=base.params,
        cost_weights=base.cost_weights,
        workspace=base.workspace,
        agents=agents,
        target_schedule=schedule,
        duration_ticks=duration,
    )


class TestRun:
    def test_artifact_files_exist(self, tmp_path):
        arts = run(tiny_scenario(), tmp_path / "out")
        for path in (
            arts.scenario_path,
            arts.trajectories_path,
            arts.distances_path,
            arts.events_path,
            arts.summary_path,
        ):
            assert path.exists(), path
        assert arts.plot_paths and all(p.suffix == ".svg" for p in arts.plot_paths)

    def test_summary_consistent_with_distances(self, tmp_path):
        arts = run(tiny_scenario(), tmp_path / "out", render_plots=False)
        summary = read_summary(arts.out_dir)
        distances = [
            float(line.split(",")[3])
            for line in arts.distances_path.read_text().splitlines()[1:]
        ]
        assert summary["min_pair_distance"] == pytest.approx(min(distances), abs=0)
        assert summary["ticks"] == 20

    def test_zero_duration_initial_record_only(self, tmp_path):
        arts = run(tiny_scenario(duration=0), tmp_path / "out", render_plots=False)
        lines = arts.trajectories_path.read_text().splitlines()
        assert len(lines) == 1 + 2  # header + one record per agent
        assert all(line.endswith(",,,,") or "tick" in line for line in lines)
        plot_paths = plot_run(arts.out_dir)  # initial markers only, must not fail
        assert plot_paths

    def test_rerun_byte_identical(self, tmp_path):
        first = run(tiny_scenario(), tmp_path / "a", render_plots=False)
        second = run(tiny_scenario(), tmp_path / "b", render_plots=False)
        for name in ("trajectories.csv", "distances.csv", "events.jsonl", "scenario.json"):
            assert (first.out_dir / name).read_bytes() == (second.out_dir / name).read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path):
        one = run(tiny_scenario(), tmp_path / "one", threads=1, render_plots=False)
        many = run(tiny_scenario(), tmp_path / "many", threads=8, render_plots=False)
        assert one.trajectories_path.read_bytes() == many.trajectories_path.read_bytes()
        assert one.distances_path.read_bytes() == many.distances_path.read_bytes()

    def test_precheck_refusal(self, tmp_path):
        bad = tiny_scenario()
        agents = (AgentState([4.0, 10.0], [0.0, 0.0]), AgentState([5.0, 10.0], [0.0, 0.0]))
        bad = Scenario(
            name="bad",
            seed=1,
            space_dim=2,
            params=bad.params,
            cost_weights=bad.cost_weights,
            workspace=bad.workspace,
            agents=agents,
            target_schedule=bad.target_schedule,
            duration_ticks=5,
        )
        with pytest.raises(PrecheckError):
            run(bad, tmp_path / "out")

    def test_trajectory_columns(self, tmp_path):
        arts = run(tiny_scenario(duration=3), tmp_path / "out", render_plots=False)
        header = arts.trajectories_path.read_text().splitlines()[0]
        assert header == "tick,agent,x,y,vx,vy,ax,ay,branch,candidate_horizon,validated,status"
        dist_header = arts.distances_path.read_text().splitlines()[0]
        assert dist_header == "tick,id_i,id_j,d"

    def test_program_dump(self, tmp_path):
        arts = run(
            tiny_scenario(duration=2), tmp_path / "out", dump_programs=True, render_plots=False
        )
        dumps = sorted((arts.out_dir / "programs").glob("*.mtx"))
        assert dumps
        assert any("branchA" in p.name or "branchB" in p.name for p in dumps)


class TestCli:
    def test_gen_check_run_plot(self, tmp_path):
        runner = CliRunner()
        scenario_path = tmp_path / "scen.json"
        save_scenario(tiny_scenario(duration=10), scenario_path)

        result = runner.invoke(main, ["check", "--scenario", str(scenario_path)])
        assert result.exit_code == 0, result.output

        out_dir = tmp_path / "run"
        result = runner.invoke(
            main, ["run", "--scenario", str(scenario_path), "--out", str(out_dir)]
        )
        assert result.exit_code == 0, result.output
        assert (out_dir / "summary.json").exists()

        result = runner.invoke(main, ["plot", "--run", str(out_dir)])
        assert result.exit_code == 0, result.output

    def test_gen_commands(self, tmp_path):
        runner = CliRunner()
        for cmd in ("gen-rtp", "gen-btn"):
            path = tmp_path / f"{cmd}.json"
            result = runner.invoke(main, [cmd, "--seed", "3", "--out", str(path)])
            assert result.exit_code == 0, result.output
            scenario = load_scenario(path)
            assert len(scenario.agents) == 5

    def test_check_exit_code_on_bad_scenario(self, tmp_path):
        bad = tiny_scenario()
        text = scenario_to_text(bad)
        # shove the agents on top of each other
        doc = json.loads(text)
        doc["agents"][1]["p"] = doc["agents"][0]["p"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        runner = CliRunner()
        result = runner.invoke(main, ["check", "--scenario", str(path)])
        assert result.exit_code == 2

        result = runner.invoke(
            main, ["run", "--scenario", str(path), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2

    def test_run_seed_override_recorded(self, tmp_path):
        runner = CliRunner()
        scenario_path = tmp_path / "scen.json"
        save_scenario(tiny_scenario(duration=2), scenario_path)
        out_dir = tmp_path / "run"
        result = runner.invoke(
            main,
            ["run", "--scenario", str(scenario_path), "--out", str(out_dir), "--seed", "123"],
        )
        assert result.exit_code == 0, result.output
        assert read_summary(out_dir)["seed"] == 123


class TestPlots:
    def test_one_trajectory_figure_per_target_window(self, tmp_path):
        base = tiny_scenario(duration=40)
        targets = base.target_schedule[0][1]
        four_windows = Scenario(
            name="windows",
            seed=base.seed,
            space_dim=2,
            params=base.params,
            cost_weights=base.cost_weights,
            workspace=base.workspace,
            agents=base.agents,
            target_schedule=tuple((10 * k, targets) for k in range(4)),
            duration_ticks=40,
        )
        arts = run(four_windows, tmp_path / "w", render_plots=False)
        names = {p.name for p in plot_run(arts.out_dir)}
        assert names == {
            "trajectory_0.svg",
            "trajectory_1.svg",
            "trajectory_2.svg",
            "trajectory_3.svg",
            "distances.svg",
        }

    def test_single_window_single_figure(self, tmp_path):
        arts = run(tiny_scenario(duration=10), tmp_path / "s", render_plots=False)
        names = {p.name for p in plot_run(arts.out_dir)}
        assert names == {"trajectory_0.svg", "distances.svg"}
