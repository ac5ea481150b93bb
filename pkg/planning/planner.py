##################################################################################################
#                                         PLANNER MODULE                                         #
#                                                                                                #
# Stochastic dynamic programming over the Semantic Belief Graph.                                 #
#                                                                                                #
# Key Features:                                                                                  #
# - Bellman backups with the expectation over IG outcomes                                        #
# - Synchronous value iteration from a finite sentinel, optional thread-parallel sweeps          #
# - Greedy policy extraction with deterministic tie-breaking                                     #
# - Conservative and optimistic baselines as restricted planning views                           #
# - Policy evaluation and Bellman residual certificate                                           #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from core.belief import argmax_class, is_confident
from core.cost import (
    CostModel,
    expected_nav_cost,
    ig_action_cost,
    matched_nav_cost,
    most_expensive_class,
    worst_case_cost,
)
from planning.graph import OUTCOME_MODES, Sbg, SbgEdge, actions_from
from utils.errors import InvalidArgumentError, NonConvergenceError
from utils.log import get_logger

logger = get_logger(__name__)

##################################################################################################
#                                 CONFIGURATION AND RESULT TYPES                                 #
##################################################################################################

class PolicyKind(str, Enum):
    SBG = "sbg"
    CONSERVATIVE = "conservative"
    OPTIMISTIC = "optimistic"

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown policy '{text}', expected one of {[k.value for k in cls]}") from None


@dataclass(frozen=True)
class PlannerConfig:
    """
    Planner settings of a scenario.

    Attributes:
        top_k (int): IG outcomes sampled per base node.
        resolved_confidence (float): Mass of the revealed class in an IG outcome.
        tol (float): Value-iteration stopping tolerance, in seconds.
        max_iters (int | None): Sweep limit, 10 * |nodes| when None.
        outcome_probabilities (str): "belief" (renormalized prior mass) or "uniform".
        confidence (float): Threshold of the conservative baseline.
        jobs (int): Worker threads per sweep.
    """

    top_k: int = 2
    resolved_confidence: float = 1.0
    tol: float = 1e-6
    max_iters: Optional[int] = None
    outcome_probabilities: str = "belief"
    confidence: float = 0.95
    jobs: int = 1

    def __post_init__(self):
        if self.top_k < 1:
            raise InvalidArgumentError(f"top_k must be at least 1, got {self.top_k}")
        if not 0.5 < self.resolved_confidence <= 1.0:
            raise InvalidArgumentError(f"resolved_confidence must lie in (0.5, 1], got {self.resolved_confidence}")
        if not self.tol > 0.0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_iters is not None and self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be positive, got {self.max_iters}")
        if self.outcome_probabilities not in OUTCOME_MODES:
            raise InvalidArgumentError(f"outcome_probabilities must be one of {OUTCOME_MODES}")
        if not 0.0 < self.confidence <= 1.0:
            raise InvalidArgumentError(f"confidence must lie in (0, 1], got {self.confidence}")
        if self.jobs < 1:
            raise InvalidArgumentError(f"jobs must be at least 1, got {self.jobs}")


@dataclass
class ValueTable:
    """
    Converged cost-to-go per node.

    Attributes:
        values (dict[str, float]): Seconds to goal; math.inf for unreachable nodes.
        goal (str): Goal node id.
        unreachable (frozenset[str]): Nodes from which the goal cannot be reached.
        residuals (list[float]): Max-norm change of every sweep.
        sentinel (float): Finite initial value used for non-goal nodes.
    """

    values: dict[str, float]
    goal: str
    unreachable: frozenset = frozenset()
    residuals: list = field(default_factory=list)
    sentinel: float = math.inf

    def __getitem__(self, node_id: str) -> float:
        return self.values[node_id]

    def __contains__(self, node_id) -> bool:
        return node_id in self.values

    def is_reachable(self, node_id: str) -> bool:
        return node_id in self.values and node_id not in self.unreachable

    @property
    def iterations(self) -> int:
        return len(self.residuals)


@dataclass
class Policy:
    """
    Graph policy: one action per reachable non-goal node.

    Attributes:
        actions (dict[str, SbgEdge]): Chosen edge per node.
        goal (str): Goal node id.
        kind (PolicyKind): Planner that produced the policy.
    """

    actions: dict[str, SbgEdge]
    goal: str
    kind: PolicyKind = PolicyKind.SBG

    def __len__(self) -> int:
        return len(self.actions)

    def action(self, node_id: str) -> Optional[SbgEdge]:
        return self.actions.get(node_id)

    def ig_nodes(self) -> list[str]:
        return sorted(node_id for node_id, edge in self.actions.items() if not edge.is_navigate)

##################################################################################################
#                                         PLANNING VIEWS                                         #
##################################################################################################

class PlanningView:
    """
    Action set and edge costs as seen by the SBG planner: every edge of the graph, navigate
    edges priced with the expected cost over the belief of their source node.
    """

    def __init__(self, sbg: Sbg, cost: CostModel):
        self.sbg = sbg
        self.cost = cost

    def actions(self, node_id: str) -> list[SbgEdge]:
        return [
            edge for edge in actions_from(self.sbg, node_id)
            if edge.is_navigate or self.sbg.ig_transitions.get(node_id)
        ]

    def nav_cost(self, edge: SbgEdge) -> float:
        belief = self.sbg.nodes[edge.source].semantic
        return expected_nav_cost(self.cost, belief, edge.controller, edge.length)

    def ig_cost(self, node_id: str) -> float:
        return ig_action_cost(self.cost, self.sbg.nodes[node_id])


class AssumedClassView(PlanningView):
    """
    Baseline view: every node assumes a single terrain class (its most likely one, or the most
    expensive named class when that is unknown) and may only use the matching controller,
    charged at matched cost. With `confidence` set, base nodes whose belief is not confident
    may only gather information.
    """

    def __init__(self, sbg: Sbg, cost: CostModel, confidence: Optional[float] = None):
        super().__init__(sbg, cost)
        self.confidence = confidence
        self._fallback = most_expensive_class(cost)
        self._assumed = {}

    def assumed_class(self, node_id: str):
        if node_id not in self._assumed:
            terrain, _ = argmax_class(self.sbg.nodes[node_id].semantic)
            self._assumed[node_id] = self._fallback if terrain.is_unknown else terrain
        return self._assumed[node_id]

    def gathers(self, node_id: str) -> bool:
        node = self.sbg.nodes[node_id]
        return (
            self.confidence is not None
            and node.is_base
            and bool(self.sbg.ig_transitions.get(node_id))
            and not is_confident(node.semantic, self.confidence)
        )

    def actions(self, node_id: str) -> list[SbgEdge]:
        edges = actions_from(self.sbg, node_id)
        if self.gathers(node_id):
            return [edge for edge in edges if not edge.is_navigate]
        assumed = self.assumed_class(node_id)
        return [edge for edge in edges if edge.is_navigate and edge.controller == assumed]

    def nav_cost(self, edge: SbgEdge) -> float:
        return matched_nav_cost(self.cost, edge.controller, edge.length)


def make_view(sbg: Sbg, cost: CostModel, kind: PolicyKind, confidence: float = 0.95) -> PlanningView:
    """Planning view of a policy kind."""
    if kind is PolicyKind.SBG:
        return PlanningView(sbg, cost)
    if kind is PolicyKind.CONSERVATIVE:
        return AssumedClassView(sbg, cost, confidence)
    return AssumedClassView(sbg, cost, None)

##################################################################################################
#                                         BELLMAN BACKUP                                         #
##################################################################################################

@dataclass(frozen=True)
class _Action:
    edge: SbgEdge
    cost: float
    successors: tuple

    @property
    def tie_key(self):
        controller = self.edge.controller.index if self.edge.controller is not None else -1
        return (0 if self.edge.is_navigate else 1, self.edge.target, controller)


def _compile(view: PlanningView, node_id: str) -> list[_Action]:
    compiled = []
    for edge in view.actions(node_id):
        if edge.is_navigate:
            compiled.append(_Action(edge, view.nav_cost(edge), ((edge.target, 1.0),)))
        else:
            outcomes = tuple(view.sbg.ig_transitions.get(node_id, ()))
            compiled.append(_Action(edge, view.ig_cost(node_id), outcomes))
    return compiled


def _q_value(action: _Action, values: Mapping[str, float]) -> float:
    return action.cost + sum(probability * values[target] for target, probability in action.successors)


def _best(actions: list[_Action], values: Mapping[str, float]):
    best_key = None
    best_action = None
    for action in actions:
        key = (_q_value(action, values),) + action.tie_key
        if best_key is None or key < best_key:
            best_key, best_action = key, action
    if best_action is None:
        return math.inf, None
    return best_key[0], best_action.edge


def bellman_backup(sbg: Sbg, cost: CostModel, j, node_id: str, view: Optional[PlanningView] = None):
    """
    One Bellman backup at a node.

    Navigate edges score expected_nav_cost + J(target); the IG loop scores
    ig_action_cost + sum over outcomes of P(outcome) * J(outcome). Ties prefer navigate edges,
    then the lowest target id.

    Args:
        sbg (Sbg): The graph.
        cost (CostModel): Cost model.
        j (Mapping[str, float] | ValueTable): Current cost-to-go.
        node_id (str): Node to back up.
        view (PlanningView | None): Action set and pricing (SBG view by default).

    Returns:
        tuple[float, SbgEdge]: Minimal Q value and its edge.
    """

    sbg.node(node_id)
    view = view or PlanningView(sbg, cost)
    actions = _compile(view, node_id)
    if not actions:
        raise InvalidArgumentError(f"node '{node_id}' has no available action")
    values = j.values if isinstance(j, ValueTable) else j
    return _best(actions, values)

##################################################################################################
#                                        VALUE ITERATION                                         #
##################################################################################################

def _terminal_nodes(sbg: Sbg, goal: str) -> set[str]:
    goal_node = sbg.node(goal)
    return {node_id for node_id, node in sbg.nodes.items() if node.vertex == goal_node.vertex}


def planning_sentinel(sbg: Sbg, cost: CostModel) -> float:
    """Finite stand-in for infinity: every action's worst-case cost summed, plus one."""
    total = 1.0
    for edge in sbg.edges:
        if edge.is_navigate:
            total += worst_case_cost(cost, edge.controller, edge.length)
        else:
            total += ig_action_cost(cost, sbg.nodes[edge.source])
    return total


def _chunks(items: list, parts: int) -> list[list]:
    size = max(1, math.ceil(len(items) / parts))
    return [items[i:i + size] for i in range(0, len(items), size)]


def _iterate(sbg, cost, goal, compiled, tol, max_iters, jobs):
    node_ids = sbg.node_ids()
    terminal = _terminal_nodes(sbg, goal)
    sentinel = planning_sentinel(sbg, cost)
    values = {node_id: 0.0 if node_id in terminal else sentinel for node_id in node_ids}
    residuals = []

    def backup_many(chunk, old):
        updated = []
        for node_id in chunk:
            if node_id in terminal:
                updated.append(0.0)
                continue
            q, _ = _best(compiled[node_id], old)
            updated.append(min(q, sentinel))
        return updated

    chunks = _chunks(node_ids, jobs)
    executor = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for sweep in range(1, max_iters + 1):
            old = values
            if executor is None:
                results = backup_many(node_ids, old)
            else:
                parts = list(executor.map(lambda chunk: backup_many(chunk, old), chunks))
                results = [value for part in parts for value in part]
            values = dict(zip(node_ids, results))
            residual = max((abs(values[n] - old[n]) for n in node_ids), default=0.0)
            residuals.append(residual)
            logger.debug(f"Sweep {sweep}: residual {residual:.3e} s")
            if residual < tol:
                return values, residuals, sentinel, terminal
    finally:
        if executor is not None:
            executor.shutdown()
    raise NonConvergenceError(residuals[-1] if residuals else math.inf, len(residuals))


def value_iteration(
    sbg: Sbg,
    cost: CostModel,
    goal: str,
    tol: float = 1e-6,
    max_iters: Optional[int] = None,
    *,
    view: Optional[PlanningView] = None,
    jobs: int = 1,
    kind: PolicyKind = PolicyKind.SBG,
):
    """
    Solve the graph's stochastic shortest path problem by synchronous value iteration.

    Sweeps start from J = 0 on goal nodes and a finite sentinel elsewhere and stop once the
    max-norm change drops below `tol`. Nodes still at the sentinel are flagged unreachable
    (value math.inf, no policy action).

    Args:
        sbg (Sbg): Expanded graph.
        cost (CostModel): Cost model.
        goal (str): Goal node id.
        tol (float): Stopping tolerance in seconds.
        max_iters (int | None): Sweep limit (10 * |nodes| by default).
        view (PlanningView | None): Action set and pricing (SBG view by default).
        jobs (int): Worker threads per sweep; results are identical for any value.
        kind (PolicyKind): Label stored on the returned policy.

    Returns:
        tuple[ValueTable, Policy]: Converged values and greedy policy.

    Raises:
        NonConvergenceError: max_iters sweeps without reaching tol.
    """

    if goal not in sbg:
        raise InvalidArgumentError(f"goal '{goal}' is not part of the graph")
    if not tol > 0.0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if jobs < 1:
        raise InvalidArgumentError(f"jobs must be at least 1, got {jobs}")
    max_iters = max_iters or 10 * max(len(sbg), 1)
    view = view or PlanningView(sbg, cost)

    compiled = {node_id: _compile(view, node_id) for node_id in sbg.node_ids()}
    values, residuals, sentinel, terminal = _iterate(sbg, cost, goal, compiled, tol, max_iters, jobs)

    unreachable = frozenset(n for n, v in values.items() if n not in terminal and v >= sentinel)
    actions = {}
    for node_id in sbg.node_ids():
        if node_id in terminal or node_id in unreachable:
            continue
        _, edge = _best(compiled[node_id], values)
        actions[node_id] = edge
    for node_id in unreachable:
        values[node_id] = math.inf

    if unreachable:
        logger.debug(f"{len(unreachable)} nodes cannot reach the goal '{goal}'")
    logger.debug(f"Value iteration ({kind.value}) converged after {len(residuals)} sweeps")
    table = ValueTable(values, goal, unreachable, residuals, sentinel)
    return table, Policy(actions, goal, kind)


def solve(sbg: Sbg, cost: CostModel, goal: str, kind: PolicyKind, config: PlannerConfig = PlannerConfig()):
    """Plan one policy kind on an expanded graph; returns (ValueTable, Policy)."""
    view = make_view(sbg, cost, kind, config.confidence)
    return value_iteration(
        sbg, cost, goal, config.tol, config.max_iters, view=view, jobs=config.jobs, kind=kind
    )


def conservative_policy(
    sbg: Sbg,
    cost: CostModel,
    goal: str,
    confidence: float = 0.95,
    tol: float = 1e-6,
    max_iters: Optional[int] = None,
    jobs: int = 1,
) -> Policy:
    """
    Baseline that only traverses terrain believed with more than `confidence` probability.

    Unconfident base nodes gather information; elsewhere the matched controller of the most
    likely class is used along the cheapest route.
    """

    view = AssumedClassView(sbg, cost, confidence)
    _, policy = value_iteration(
        sbg, cost, goal, tol, max_iters, view=view, jobs=jobs, kind=PolicyKind.CONSERVATIVE
    )
    return policy


def optimistic_policy(
    sbg: Sbg,
    cost: CostModel,
    goal: str,
    tol: float = 1e-6,
    max_iters: Optional[int] = None,
    jobs: int = 1,
) -> Policy:
    """Baseline that trusts the most likely class everywhere and never gathers information."""

    view = AssumedClassView(sbg, cost, None)
    _, policy = value_iteration(
        sbg, cost, goal, tol, max_iters, view=view, jobs=jobs, kind=PolicyKind.OPTIMISTIC
    )
    return policy

##################################################################################################
#                                        POLICY ANALYSIS                                         #
##################################################################################################

def evaluate_policy(
    sbg: Sbg,
    cost: CostModel,
    policy: Policy,
    tol: float = 1e-6,
    max_iters: Optional[int] = None,
    view: Optional[PlanningView] = None,
) -> dict[str, float]:
    """
    Expected cost-to-go of a fixed policy under the SBG model.

    Nodes without an action, and nodes whose policy never reaches the goal, get math.inf.

    Args:
        sbg (Sbg): Expanded graph.
        cost (CostModel): Cost model.
        policy (Policy): Policy to evaluate.
        tol (float): Stopping tolerance in seconds.
        max_iters (int | None): Sweep limit (10 * |nodes| by default).
        view (PlanningView | None): Pricing of the edges (SBG view by default).

    Returns:
        dict[str, float]: Expected seconds to goal per node.
    """

    view = view or PlanningView(sbg, cost)
    compiled = {}
    for node_id in sbg.node_ids():
        edge = policy.action(node_id)
        if edge is None:
            compiled[node_id] = []
        elif edge.is_navigate:
            compiled[node_id] = [_Action(edge, view.nav_cost(edge), ((edge.target, 1.0),))]
        else:
            outcomes = tuple(sbg.ig_transitions.get(node_id, ()))
            compiled[node_id] = [_Action(edge, view.ig_cost(node_id), outcomes)] if outcomes else []
    max_iters = max_iters or 10 * max(len(sbg), 1)
    values, _, sentinel, terminal = _iterate(sbg, cost, policy.goal, compiled, tol, max_iters, 1)
    return {n: (math.inf if n not in terminal and v >= sentinel else v) for n, v in values.items()}


def bellman_residual(sbg: Sbg, cost: CostModel, table: ValueTable, view: Optional[PlanningView] = None) -> float:
    """
    Fixed-point certificate: max over reachable non-goal nodes of |J - min_mu Q|.

    Args:
        sbg (Sbg): Expanded graph.
        cost (CostModel): Cost model.
        table (ValueTable): Values to certify.
        view (PlanningView | None): View the values were computed with (SBG view by default).

    Returns:
        float: Largest Bellman residual in seconds (0 when no node qualifies).
    """

    view = view or PlanningView(sbg, cost)
    terminal = _terminal_nodes(sbg, table.goal)
    worst = 0.0
    for node_id in sbg.node_ids():
        if node_id in terminal or not table.is_reachable(node_id):
            continue
        q, _ = _best(_compile(view, node_id), table.values)
        worst = max(worst, abs(table.values[node_id] - q))
    return worst
