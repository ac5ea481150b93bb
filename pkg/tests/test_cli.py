import csv
import json

import pytest

from cli.main import main, parse_args
from planning.planner import PolicyKind
from scenarios.scenario import load_scenario
from utils.errors import UsageError
from utils.paths import fixture_path


def run(*argv):
    return main([str(arg) for arg in argv])


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def artifacts(folder):
    return {path.name: path.read_bytes() for path in sorted(folder.iterdir()) if path.suffix != ".png"}


def test_plan_writes_tables_and_prints_start_value(tmp_path, capsys):
    assert run("plan", "small_two_level", "--out", tmp_path) == 0
    assert capsys.readouterr().out == "J(S) = 34.666667 s\n"
    values = read_rows(tmp_path / "values.csv")
    assert values[0] == ["node_id", "kind", "vertex", "value_s", "reachable"]
    assert ["G", "base", "G", "0.000000", "true"] in values
    policy = read_rows(tmp_path / "policy.csv")
    assert policy[0] == ["node_id", "action", "target", "controller", "length_m", "q_value_s"]
    assert ["A", "info_gather", "A", "", "", "24.666667"] in policy
    assert not (tmp_path / "graph.dot").exists()


def test_plan_is_deterministic_across_runs_and_jobs(tmp_path):
    outputs = []
    for index, jobs in enumerate((1, 1, 8)):
        folder = tmp_path / f"run{index}"
        assert run("plan", "--scenario", "urban_callout", "--dot", "--jobs", jobs, "--out", folder) == 0
        outputs.append(artifacts(folder))
    assert set(outputs[0]) == {"values.csv", "policy.csv", "graph.dot"}
    assert outputs[0] == outputs[1] == outputs[2]


def test_compare_writes_results_and_is_deterministic(tmp_path, capsys):
    outputs = []
    for index, jobs in enumerate((1, 8)):
        folder = tmp_path / f"run{index}"
        assert run("compare", "small_two_level", "--trials", 4, "--seed", 2, "--jobs", jobs, "--out", folder) == 0
        outputs.append(artifacts(folder))
    assert set(outputs[0]) == {"trials.csv", "summary.csv", "report.md"}
    assert outputs[0] == outputs[1]

    table = capsys.readouterr().out.splitlines()
    assert table[0].startswith("Policy")
    assert [line.split()[0] for line in table[2:]] == ["sbg", "conservative", "optimistic"]

    trials = read_rows(tmp_path / "run0" / "trials.csv")
    assert trials[0] == ["seed", "policy", "traversal_time_s", "controller_correct", "controller_total", "ig_count", "reached_goal"]
    assert len(trials) == 1 + 3 * 4
    assert [row[0] for row in trials[1:5]] == ["2", "3", "4", "5"]
    summary = read_rows(tmp_path / "run0" / "summary.csv")
    assert summary[0][0] == "policy" and len(summary) == 4


def test_single_trial_summary_equals_the_trial(tmp_path):
    assert run("compare", "small_two_level", "--trials", 1, "--policies", "sbg", "--out", tmp_path) == 0
    trial = read_rows(tmp_path / "trials.csv")[1]
    summary = dict(zip(*read_rows(tmp_path / "summary.csv")))
    assert summary["mean_time_s"] == summary["min_time_s"] == summary["max_time_s"] == trial[2]


def test_compare_plot(tmp_path):
    assert run("compare", "small_two_level", "--trials", 2, "--plot", "--out", tmp_path) == 0
    assert (tmp_path / "time_breakdown.png").stat().st_size > 0


def test_simulate_runs_one_policy(tmp_path):
    assert run("simulate", "small_two_level", "--policy", "conservative", "--trials", 3, "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "trials.csv")[1:]
    assert {row[1] for row in rows} == {"conservative"}
    assert not (tmp_path / "report.md").exists()


def test_export_writes_dot(tmp_path):
    assert run("export", "small_two_level", "--policy", "optimistic", "--out", tmp_path) == 0
    text = (tmp_path / "graph.dot").read_text(encoding="utf-8")
    assert text.startswith("digraph sbg {")
    assert '"A" -> "T" [label="stair 5m", color=red, penwidth=2];' in text


@pytest.mark.parametrize(
    "argv, expected",
    [
        (("simulate", "urban_callout", "--policy", "sbg", "--trials", 6, "--seed", 4), {"trials.csv", "summary.csv"}),
        (("export", "urban_callout", "--policy", "conservative"), {"graph.dot"}),
    ],
)
def test_simulate_and_export_do_not_depend_on_jobs(tmp_path, argv, expected):
    outputs = []
    for index, jobs in enumerate((1, 1, 8)):
        folder = tmp_path / f"run{index}"
        assert run(*argv, "--jobs", jobs, "--out", folder) == 0
        outputs.append(artifacts(folder))
    assert set(outputs[0]) == expected
    assert outputs[0] == outputs[1] == outputs[2]

def test_generate_writes_a_loadable_document(tmp_path):
    assert run("generate", "--segments", 10, "--total-length", 100, "--name", "course", "--out", tmp_path) == 0
    first = (tmp_path / "course.json").read_bytes()
    scenario = load_scenario(str(tmp_path / "course.json"))
    assert scenario.name == "course"
    assert json.loads(first)["schema"] == "sbg-scenario/1"
    assert run("generate", "--segments", 10, "--total-length", 100, "--name", "course", "--out", tmp_path) == 0
    assert (tmp_path / "course.json").read_bytes() == first


def test_missing_scenario_is_a_data_error(tmp_path, capsys):
    assert run("plan", tmp_path / "nowhere.json", "--out", tmp_path) == 2
    assert "nowhere.json" in capsys.readouterr().err


def test_invalid_scenario_is_a_data_error(tmp_path, capsys):
    with open(fixture_path("small_two_level"), encoding="utf-8") as f:
        document = json.load(f)
    document["cost"]["nav_cost"].pop()
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert run("plan", path, "--out", tmp_path) == 2
    assert "$.cost.nav_cost" in capsys.readouterr().err


def test_non_convergence_exit_code(tmp_path, capsys):
    with open(fixture_path("small_two_level"), encoding="utf-8") as f:
        document = json.load(f)
    document["planner"]["max_iters"] = 1
    path = tmp_path / "short.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert run("plan", path, "--out", tmp_path) == 3
    assert "did not converge" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["plan"],
        ["compare", "small_two_level", "--policies", "greedy"],
        ["compare", "small_two_level", "--trials", "0"],
        ["plan", "small_two_level", "--tol", "-1"],
        ["plan", "small_two_level", "--scenario", "urban_callout"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == 1


def test_parse_args_defaults():
    config = parse_args(["compare", "urban_callout"])
    assert config.trials == 20 and config.seed == 0 and config.jobs == 1
    assert config.policies == tuple(PolicyKind)
    assert parse_args(["plan", "x", "--policies", "optimistic,sbg,optimistic"]).policies == (
        PolicyKind.OPTIMISTIC, PolicyKind.SBG,
    )
    with pytest.raises(UsageError):
        parse_args(["simulate"])
