##################################################################################################
#                                        SIMULATOR MODULE                                        #
#                                                                                                #
# Closed-loop Monte-Carlo execution of graph policies over ground-truth terrain.                 #
#                                                                                                #
# A simulated robot follows a policy, passively observes the terrain it is about to enter,       #
# gathers information with high-accuracy scans, maps post-scan beliefs to planned outcome        #
# nodes and accrues true traversal time. Trials are seeded and independent; summaries are        #
# computed from seed-sorted results so parallel runs aggregate identically.                      #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Optional, Sequence, Union

import numpy as np

from core.belief import SemanticBelief, TerrainClass, argmax_class, bayes_update
from core.cost import CostModel, ig_action_cost, true_nav_cost
from core.observation import ObservationModel, likelihood_row, sample_observation
from planning.graph import Sbg, SbgEdge, expand_ig_outcomes
from planning.planner import PlannerConfig, Policy, PolicyKind, solve
from utils.errors import ContractViolationError, ContradictionError, InvalidArgumentError
from utils.log import get_logger

if TYPE_CHECKING:
    from scenarios.scenario import Scenario

logger = get_logger(__name__)

STEP_CAP_FACTOR = 50

##################################################################################################
#                                          RESULT TYPES                                          #
##################################################################################################

@dataclass(frozen=True)
class GroundTruth:
    """True named terrain class of every roadmap vertex."""

    terrain: Mapping[str, TerrainClass]

    def __post_init__(self):
        for vertex_id, terrain in self.terrain.items():
            if terrain.is_unknown:
                raise InvalidArgumentError(f"ground truth of '{vertex_id}' must be a named class")
        object.__setattr__(self, "terrain", dict(self.terrain))

    def of(self, vertex_id: str) -> TerrainClass:
        try:
            return self.terrain[vertex_id]
        except KeyError:
            raise InvalidArgumentError(f"no ground truth for vertex '{vertex_id}'") from None

    def covers(self, vertex_ids) -> bool:
        return all(vertex_id in self.terrain for vertex_id in vertex_ids)


class StepCategory(str, Enum):
    MATCHED = "matched"
    MISMATCHED = "mismatched"
    IG = "ig"


@dataclass(frozen=True)
class TrialStep:
    node: str
    edge: SbgEdge
    cost: float
    category: StepCategory


@dataclass
class TrialResult:
    """
    Outcome of one seeded trial.

    Attributes:
        seed (int): Generator seed of the trial.
        policy (PolicyKind): Planner whose policy was executed.
        traversal_time (float): Total charged seconds.
        actions (list[TrialStep]): Executed actions in order.
        controller_correct (int): Navigate actions whose controller matched the true terrain.
        controller_total (int): Navigate actions executed.
        ig_count (int): Information-gathering actions executed.
        reached_goal (bool): False when the step cap ended the trial.
        reexpansions (int): Scans whose result fell outside the planned outcomes.
    """

    seed: int
    policy: PolicyKind
    traversal_time: float = 0.0
    actions: list = field(default_factory=list)
    controller_correct: int = 0
    controller_total: int = 0
    ig_count: int = 0
    reached_goal: bool = False
    reexpansions: int = 0

    def _time_of(self, category: StepCategory) -> float:
        return float(sum(step.cost for step in self.actions if step.category is category))

    @property
    def matched_time(self) -> float:
        return self._time_of(StepCategory.MATCHED)

    @property
    def mismatched_time(self) -> float:
        return self._time_of(StepCategory.MISMATCHED)

    @property
    def ig_time(self) -> float:
        return self._time_of(StepCategory.IG)

    @property
    def trajectory(self) -> tuple:
        """Executed (node, action) pairs, used to group identical runs."""
        return tuple((step.node, step.edge.describe()) for step in self.actions)


@dataclass
class RunSummary:
    """
    Aggregate statistics of one policy over all trials.

    Attributes:
        policy (PolicyKind): Planner of the summarized trials.
        results (list[TrialResult]): Trials sorted by seed.
        static_accuracy (float | None): controller_accuracy of the planned policy, in percent.
    """

    policy: PolicyKind
    results: list
    static_accuracy: Optional[float] = None

    def __post_init__(self):
        if not self.results:
            raise InvalidArgumentError("a run summary needs at least one trial")
        self.results = sorted(self.results, key=lambda result: result.seed)

    def _times(self) -> np.ndarray:
        return np.array([result.traversal_time for result in self.results])

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def mean_time(self) -> float:
        return float(np.mean(self._times()))

    @property
    def min_time(self) -> float:
        return float(np.min(self._times()))

    @property
    def max_time(self) -> float:
        return float(np.max(self._times()))

    @property
    def correct_controller_pct(self) -> Optional[float]:
        """Executed navigate actions with the right controller, pooled over trials."""
        total = sum(result.controller_total for result in self.results)
        if total == 0:
            return None
        return 100.0 * sum(result.controller_correct for result in self.results) / total

    @property
    def mean_ig_count(self) -> float:
        return float(np.mean([result.ig_count for result in self.results]))

    @property
    def goal_rate(self) -> float:
        return float(np.mean([1.0 if result.reached_goal else 0.0 for result in self.results]))

    @property
    def matched_time(self) -> float:
        return float(np.mean([result.matched_time for result in self.results]))

    @property
    def mismatched_time(self) -> float:
        return float(np.mean([result.mismatched_time for result in self.results]))

    @property
    def ig_time(self) -> float:
        return float(np.mean([result.ig_time for result in self.results]))

##################################################################################################
#                                        TRIAL EXECUTION                                         #
##################################################################################################

def _observe(belief: SemanticBelief, row, vertex_id: str) -> SemanticBelief:
    try:
        return bayes_update(belief, row)
    except ContradictionError:
        logger.warning(f"Observation at '{vertex_id}' contradicts its belief, keeping the previous belief")
        return belief


def _outcome_for(sbg: Sbg, node_id: str, terrain: TerrainClass) -> Optional[str]:
    for outcome, _ in sbg.ig_transitions.get(node_id, ()):
        if sbg.nodes[outcome].outcome == terrain:
            return outcome
    return None


def run_trial(
    sbg: Sbg,
    policy: Union[Policy, PolicyKind],
    cost: CostModel,
    obs: ObservationModel,
    truth: GroundTruth,
    start: str,
    goal: str,
    seed: int,
    step_cap: Optional[int] = None,
    config: PlannerConfig = PlannerConfig(),
) -> TrialResult:
    """
    Execute a policy once over the ground truth.

    At each node the robot stops on the goal vertex, otherwise it applies the policy action:
    - navigate: passively observe the destination vertex from the Euclidean distance between
      the two node means and update its belief, then pay true_nav_cost over the edge length for
      the terrain at the current vertex. The terrain being left governs the charge, the same
      source-terrain rule the planner prices navigate edges with;
    - information gathering: pay ig_action_cost, scan the current vertex, update its belief and
      continue from the outcome node of the new most likely class. A class outside the planned
      outcomes re-expands the node on a copy of the graph, replans and continues from the new
      outcome node.

    Args:
        sbg (Sbg): Expanded graph the policy was planned on.
        policy (Policy | PolicyKind): Policy to follow, or the planner to build it with.
        cost (CostModel): Cost model used for charging.
        obs (ObservationModel): Classifier used for passive observations and scans.
        truth (GroundTruth): True terrain per vertex.
        start (str): Start node id.
        goal (str): Goal node id.
        seed (int): Seed of the trial's generator.
        step_cap (int | None): Maximum number of actions (50 * |nodes| by default).
        config (PlannerConfig): Settings used when replanning after a re-expansion.

    Returns:
        TrialResult: Executed actions and bookkeeping.

    Raises:
        ContractViolationError: The policy has no action at a visited node.
    """

    sbg.node(start)
    goal_vertex = sbg.node(goal).vertex
    step_cap = step_cap if step_cap is not None else STEP_CAP_FACTOR * len(sbg)
    if step_cap < 1:
        raise InvalidArgumentError(f"step_cap must be positive, got {step_cap}")
    if isinstance(policy, PolicyKind):
        _, policy = solve(sbg, cost, goal, policy, config)

    rng = np.random.default_rng(seed)
    class_set = sbg.class_set
    beliefs = {node.vertex: node.semantic for node in sbg.base_nodes()}
    result = TrialResult(seed=seed, policy=policy.kind)
    graph = sbg
    node_id = start

    for _ in range(step_cap):
        node = graph.node(node_id)
        if node.vertex == goal_vertex:
            result.reached_goal = True
            break
        edge = policy.action(node_id)
        if edge is None:
            raise ContractViolationError(f"{policy.kind.value} policy defines no action at node '{node_id}'")

        # --- Navigate: observe the destination, pay for the terrain being left ---
        if edge.is_navigate:
            target = graph.node(edge.target)
            destination = target.vertex
            distance = node.belief.geometric.distance_to(target.belief.geometric)
            observed = sample_observation(obs, truth.of(destination), distance, rng, class_set)
            row = likelihood_row(obs, observed, distance, len(class_set))
            beliefs[destination] = _observe(beliefs[destination], row, destination)

            terrain = truth.of(node.vertex)
            charged = true_nav_cost(cost, terrain, edge.controller, edge.length)
            matched = edge.controller == terrain
            category = StepCategory.MATCHED if matched else StepCategory.MISMATCHED
            result.controller_total += 1
            result.controller_correct += int(matched)
            next_id = edge.target
        else:
            # --- Information gathering ---
            charged = ig_action_cost(cost, node)
            category = StepCategory.IG
            result.ig_count += 1
            observed = sample_observation(obs, truth.of(node.vertex), 0.0, rng, class_set, scan=True)
            row = likelihood_row(obs, observed, 0.0, len(class_set), scan=True)
            beliefs[node.vertex] = _observe(beliefs[node.vertex], row, node.vertex)

            terrain, _ = argmax_class(beliefs[node.vertex])
            next_id = _outcome_for(graph, node_id, terrain)
            if next_id is None:
                logger.debug(f"Scan at '{node_id}' revealed unplanned class '{terrain.name}', replanning")
                graph = graph.with_semantic(node_id, beliefs[node.vertex])
                expand_ig_outcomes(
                    graph, node_id, config.top_k, config.resolved_confidence, config.outcome_probabilities
                )
                _, policy = solve(graph, cost, goal, policy.kind, config)
                result.reexpansions += 1
                next_id = _outcome_for(graph, node_id, terrain) or node_id

        result.actions.append(TrialStep(node_id, edge, charged, category))
        result.traversal_time += charged
        node_id = next_id
    else:
        result.reached_goal = graph.node(node_id).vertex == goal_vertex

    if not result.reached_goal:
        logger.debug(f"Trial {seed} ({policy.kind.value}) hit the step cap of {step_cap}")
    return result


def controller_accuracy(policy: Policy, truth: GroundTruth, sbg: Sbg) -> Optional[float]:
    """
    Static share of policy navigate actions whose controller matches the terrain they cross.

    Every node of the policy map counts, on or off the most likely path, except outcome nodes
    concentrated on a class their vertex does not have (those beliefs never occur).

    Args:
        policy (Policy): Planned policy.
        truth (GroundTruth): True terrain per vertex.
        sbg (Sbg): Graph the policy was planned on.

    Returns:
        float | None: Percentage, or None when the policy has no qualifying navigate action.
    """

    correct = 0
    total = 0
    for node_id in sorted(policy.actions):
        edge = policy.actions[node_id]
        if not edge.is_navigate:
            continue
        node = sbg.node(node_id)
        terrain = truth.of(node.vertex)
        if not node.is_base and node.outcome != terrain:
            continue
        total += 1
        correct += int(edge.controller == terrain)
    if total == 0:
        return None
    return 100.0 * correct / total

##################################################################################################
#                                          EXPERIMENTS                                           #
##################################################################################################

def run_experiment(
    scenario: "Scenario",
    policies: Sequence[PolicyKind] = tuple(PolicyKind),
    trials: int = 20,
    base_seed: int = 0,
    jobs: int = 1,
    step_cap: Optional[int] = None,
) -> dict[PolicyKind, RunSummary]:
    """
    Run every policy on the same seeds and summarize.

    Each policy is planned once on the scenario's expanded graph; trial i of every policy uses
    seed base_seed + i.

    Args:
        scenario (Scenario): Loaded scenario.
        policies (Sequence[PolicyKind]): Planners to compare, in report order.
        trials (int): Trials per policy.
        base_seed (int): Seed of the first trial.
        jobs (int): Worker threads for trials and planner sweeps.
        step_cap (int | None): Per-trial action limit.

    Returns:
        dict[PolicyKind, RunSummary]: Summary per policy, in the given order.
    """

    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    if jobs < 1:
        raise InvalidArgumentError(f"jobs must be at least 1, got {jobs}")
    if not policies:
        raise InvalidArgumentError("at least one policy is required")

    config = scenario.planner
    sbg = scenario.expanded_graph()
    seeds = list(range(base_seed, base_seed + trials))
    summaries = {}

    for kind in policies:
        _, policy = solve(sbg, scenario.cost_model, scenario.goal, kind, config)

        def trial(seed, policy=policy):
            return run_trial(
                sbg, policy, scenario.cost_model, scenario.observation_model, scenario.ground_truth,
                scenario.start, scenario.goal, seed, step_cap, config,
            )

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as executor:
                results = list(executor.map(trial, seeds))
        else:
            results = [trial(seed) for seed in seeds]

        static = controller_accuracy(policy, scenario.ground_truth, sbg)
        summary = RunSummary(kind, results, static)
        summaries[kind] = summary
        logger.info(
            f"{kind.value}: mean time {summary.mean_time:.2f} s over {trials} trials, "
            f"goal rate {summary.goal_rate:.0%}"
        )
    return summaries
