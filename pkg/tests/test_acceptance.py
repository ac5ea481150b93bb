"""End-to-end comparison on the bundled urban course (20 seeded runs per policy)."""

import pytest

from planning.planner import PolicyKind
from simulation.simulator import run_experiment


@pytest.fixture(scope="module")
def urban_runs(urban_scenario):
    return run_experiment(urban_scenario, trials=20, base_seed=0, jobs=4)


def test_every_run_reaches_the_goal(urban_runs):
    for summary in urban_runs.values():
        assert summary.trials == 20
        assert summary.goal_rate == 1.0


def test_belief_aware_policy_is_fastest(urban_runs):
    sbg = urban_runs[PolicyKind.SBG].mean_time
    assert sbg < urban_runs[PolicyKind.CONSERVATIVE].mean_time
    assert sbg < urban_runs[PolicyKind.OPTIMISTIC].mean_time


def test_controller_choice_accuracy(urban_runs):
    conservative = urban_runs[PolicyKind.CONSERVATIVE].static_accuracy
    optimistic = urban_runs[PolicyKind.OPTIMISTIC].static_accuracy
    assert conservative == pytest.approx(100.0)
    assert optimistic < conservative
    assert urban_runs[PolicyKind.SBG].static_accuracy >= optimistic


def test_time_breakdown(urban_runs):
    conservative = urban_runs[PolicyKind.CONSERVATIVE]
    optimistic = urban_runs[PolicyKind.OPTIMISTIC]
    assert optimistic.ig_time == 0.0
    assert optimistic.mismatched_time > 0.0
    assert conservative.ig_time > urban_runs[PolicyKind.SBG].ig_time
    for summary in urban_runs.values():
        total = summary.matched_time + summary.mismatched_time + summary.ig_time
        assert total == pytest.approx(summary.mean_time)
