import dataclasses
from collections import Counter

import pytest

from core.belief import SemanticBelief
from core.cost import true_nav_cost
from core.observation import ObservationModel
from planning.graph import Link, Roadmap, Vertex, build_sbg, expand_all
from planning.planner import Policy, PolicyKind, solve
from simulation import simulator
from simulation.simulator import (
    GroundTruth,
    RunSummary,
    StepCategory,
    controller_accuracy,
    run_experiment,
    run_trial,
)
from utils.errors import ContractViolationError, InvalidArgumentError

PERFECT = ObservationModel(accuracy_at_zero=1.0, accuracy_floor=1.0, falloff_rate=0.0, ig_accuracy=1.0)


def trial(scenario, policy, seed, sbg=None, **kwargs):
    sbg = sbg or scenario.expanded_graph()
    return run_trial(
        sbg, policy, scenario.cost_model, scenario.observation_model, scenario.ground_truth,
        scenario.start, scenario.goal, seed, **kwargs,
    )


@pytest.fixture
def known_small(small_scenario):
    """Small fixture with correct Dirac priors and a perfect classifier."""
    truth = small_scenario.ground_truth.terrain
    priors = {vid: SemanticBelief.dirac(small_scenario.class_set, cls) for vid, cls in truth.items()}
    return dataclasses.replace(small_scenario, priors=priors, observation_model=PERFECT)


def test_perfect_knowledge_costs_exactly_the_plan(known_small):
    sbg = known_small.expanded_graph()
    table, _ = solve(sbg, known_small.cost_model, known_small.goal, PolicyKind.SBG)
    times = {}
    for kind in PolicyKind:
        for seed in range(5):
            result = trial(known_small, kind, seed, sbg)
            assert result.reached_goal
            times.setdefault(kind, []).append(result.traversal_time)
    assert times[PolicyKind.SBG] == [table[known_small.start]] * 5
    for kind in (PolicyKind.CONSERVATIVE, PolicyKind.OPTIMISTIC):
        assert all(sbg_time <= other for sbg_time, other in zip(times[PolicyKind.SBG], times[kind]))


def test_same_seed_same_result(small_scenario):
    assert trial(small_scenario, PolicyKind.SBG, 42) == trial(small_scenario, PolicyKind.SBG, 42)


def test_bookkeeping_identities(small_scenario):
    for seed in range(20):
        result = trial(small_scenario, PolicyKind.SBG, seed)
        assert result.traversal_time == pytest.approx(sum(step.cost for step in result.actions), abs=1e-9)
        assert result.matched_time + result.mismatched_time + result.ig_time == pytest.approx(result.traversal_time)
        assert 0 <= result.controller_correct <= result.controller_total
        assert result.ig_count == sum(step.category is StepCategory.IG for step in result.actions)


def test_most_frequent_trajectory_gathers_once_then_climbs(small_scenario):
    sbg = small_scenario.expanded_graph()
    trajectories = Counter(trial(small_scenario, PolicyKind.SBG, seed, sbg).trajectory for seed in range(100))
    favourite, _ = trajectories.most_common(1)[0]
    assert favourite == (
        ("S", "S -> A [flat_ground, 10 m]"),
        ("A", "A [IG]"),
        ("A~stair", "A~stair -> T [stair, 5 m]"),
        ("T", "T -> G [flat_ground, 10 m]"),
    )


def test_conservative_gathers_before_the_uncertain_stair(small_scenario):
    sbg = small_scenario.expanded_graph()
    trajectories = Counter(trial(small_scenario, PolicyKind.CONSERVATIVE, seed, sbg).trajectory for seed in range(100))
    favourite, _ = trajectories.most_common(1)[0]
    assert ("A", "A [IG]") in favourite or favourite[0][1].startswith("S -> R")


def test_missing_action_is_a_contract_violation(small_scenario):
    with pytest.raises(ContractViolationError):
        trial(small_scenario, Policy({}, small_scenario.goal), 0)


def test_step_cap_ends_the_trial(small_scenario):
    result = trial(small_scenario, PolicyKind.SBG, 0, step_cap=1)
    assert not result.reached_goal
    assert len(result.actions) == 1
    with pytest.raises(InvalidArgumentError):
        trial(small_scenario, PolicyKind.SBG, 0, step_cap=0)


def test_unplanned_scan_result_triggers_reexpansion(small_scenario):
    truth = dict(small_scenario.ground_truth.terrain)
    truth["A"] = small_scenario.class_set.by_name("rubble")
    scenario = dataclasses.replace(small_scenario, ground_truth=GroundTruth(truth)).with_planner(top_k=1)
    sbg = scenario.expanded_graph()
    results = [run_trial(sbg, PolicyKind.SBG, scenario.cost_model, scenario.observation_model, scenario.ground_truth,
                         "S", "G", seed, config=scenario.planner) for seed in range(10)]
    assert all(result.reached_goal for result in results)
    assert any(result.reexpansions > 0 for result in results)


def test_ground_truth_rejects_unknown(classes):
    with pytest.raises(InvalidArgumentError):
        GroundTruth({"a": classes.unknown})


def test_static_controller_accuracy(known_small, urban_scenario):
    sbg = known_small.expanded_graph()
    _, policy = solve(sbg, known_small.cost_model, "G", PolicyKind.SBG)
    assert controller_accuracy(policy, known_small.ground_truth, sbg) == 100.0
    assert controller_accuracy(Policy({}, "G"), known_small.ground_truth, sbg) is None

    urban = urban_scenario.expanded_graph()
    _, optimistic = solve(urban, urban_scenario.cost_model, urban_scenario.goal, PolicyKind.OPTIMISTIC)
    assert 0.0 < controller_accuracy(optimistic, urban_scenario.ground_truth, urban) < 100.0


def test_run_experiment_counts_and_common_seeds(small_scenario):
    summaries = run_experiment(small_scenario, tuple(PolicyKind), trials=5, base_seed=3)
    assert list(summaries) == list(PolicyKind)
    for summary in summaries.values():
        assert [result.seed for result in summary.results] == [3, 4, 5, 6, 7]
        assert summary.matched_time + summary.mismatched_time + summary.ig_time == pytest.approx(summary.mean_time, abs=1e-6)
        assert 0.0 <= summary.correct_controller_pct <= 100.0
        assert summary.min_time <= summary.mean_time <= summary.max_time


def test_parallel_trials_match_serial(small_scenario):
    serial = run_experiment(small_scenario, tuple(PolicyKind), trials=6, jobs=1)
    parallel = run_experiment(small_scenario, tuple(PolicyKind), trials=6, jobs=4)
    for kind in PolicyKind:
        assert serial[kind].results == parallel[kind].results
        assert serial[kind].static_accuracy == parallel[kind].static_accuracy


def test_single_trial_summary_is_the_trial(small_scenario):
    summary = run_experiment(small_scenario, (PolicyKind.SBG,), trials=1)[PolicyKind.SBG]
    result = summary.results[0]
    assert summary.mean_time == summary.min_time == summary.max_time == result.traversal_time
    assert summary.mean_ig_count == result.ig_count


def test_experiment_arguments(small_scenario):
    with pytest.raises(InvalidArgumentError):
        run_experiment(small_scenario, (PolicyKind.SBG,), trials=0)
    with pytest.raises(InvalidArgumentError):
        run_experiment(small_scenario, (), trials=1)
    with pytest.raises(InvalidArgumentError):
        RunSummary(PolicyKind.SBG, [])


def test_passive_observation_uses_the_distance_between_node_means(classes, cost, monkeypatch):
    # The link is ten times longer than the straight line between its ends.
    roadmap = Roadmap([Vertex("a", (0.0, 0.0, 0.0)), Vertex("b", (2.0, 0.0, 0.0))], [Link("a", "b", 20.0)])
    flat = classes.by_name("flat_ground")
    sbg = expand_all(build_sbg(roadmap, {v: SemanticBelief.dirac(classes, flat) for v in "ab"}, classes))
    distances = []
    sample = simulator.sample_observation

    def recording(model, true_class, distance, rng, class_set, *, scan=False):
        distances.append(distance)
        return sample(model, true_class, distance, rng, class_set, scan=scan)

    monkeypatch.setattr(simulator, "sample_observation", recording)
    result = run_trial(sbg, PolicyKind.SBG, cost, PERFECT, GroundTruth({"a": flat, "b": flat}), "a", "b", 0)
    assert result.reached_goal
    assert distances == [pytest.approx(2.0)]
    assert result.traversal_time == pytest.approx(true_nav_cost(cost, flat, flat, 20.0))


def test_navigate_is_charged_for_the_terrain_being_left(classes, cost):
    roadmap = Roadmap([Vertex("a", (0.0, 0.0, 0.0)), Vertex("b", (5.0, 0.0, 0.0))], [Link("a", "b", 5.0)])
    stair, flat = classes.by_name("stair"), classes.by_name("flat_ground")
    truth = {"a": stair, "b": flat}
    sbg = expand_all(build_sbg(roadmap, {v: SemanticBelief.dirac(classes, c) for v, c in truth.items()}, classes))
    result = run_trial(sbg, PolicyKind.SBG, cost, PERFECT, GroundTruth(truth), "a", "b", 0)
    assert [step.edge.controller for step in result.actions] == [stair]
    assert result.traversal_time == pytest.approx(true_nav_cost(cost, stair, stair, 5.0))
    assert result.controller_correct == result.controller_total == 1
