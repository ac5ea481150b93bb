import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.belief import ClassSet, SemanticBelief, unknown_prior
from core.cost import default_cost_model
from planning.graph import (
    EdgeKind,
    Link,
    NodeKind,
    Roadmap,
    Sbg,
    SbgEdge,
    Vertex,
    actions_from,
    build_sbg,
    expand_all,
    expand_ig_outcomes,
    export_dot,
    navigation_digraph,
)
from planning.planner import value_iteration
from tests.conftest import chain_roadmap
from utils.errors import InvalidArgumentError


def test_roadmap_validation():
    a, b = Vertex("a", (0, 0, 0)), Vertex("b", (3, 4, 0))
    assert Roadmap([a, b], [Link("a", "b", 5.0)]).euclidean("a", "b") == 5.0
    with pytest.raises(InvalidArgumentError):
        Roadmap([a, b], [Link("a", "b", 4.0)])
    with pytest.raises(InvalidArgumentError):
        Roadmap([a, b], [Link("a", "c", 5.0)])
    with pytest.raises(InvalidArgumentError):
        Roadmap([a, a], [])
    with pytest.raises(InvalidArgumentError):
        Roadmap([a, b], [Link("a", "b", 6.0), Link("b", "a", 6.0)])


def test_build_sbg(classes):
    sbg = build_sbg(chain_roadmap([10.0, 5.0]), None, classes)
    assert sbg.node_ids() == ["v0", "v1", "v2"]
    assert all(node.semantic == unknown_prior(classes) for node in sbg.nodes.values())
    navigate = [edge for edge in sbg.edges if edge.is_navigate]
    assert len(navigate) == 2 * 2 * len(classes.named)
    loops = [edge for edge in sbg.edges if not edge.is_navigate]
    assert [edge.source for edge in loops] == ["v0", "v1", "v2"]
    assert sbg.ig_transitions == {}
    assert np.allclose(sbg.node("v1").belief.geometric.covariance, np.eye(3) * 0.01)


def test_build_sbg_rejects_foreign_priors(classes):
    other = ClassSet.from_names(["flat_ground"])
    with pytest.raises(InvalidArgumentError):
        build_sbg(chain_roadmap([1.0]), {"v0": unknown_prior(other)}, classes)
    with pytest.raises(InvalidArgumentError):
        build_sbg(chain_roadmap([1.0]), {"nope": unknown_prior(classes)}, classes)


def test_expand_outcomes_takes_the_two_most_likely_classes(classes):
    prior = SemanticBelief(classes, [0.05, 0.6, 0.3, 0.05])
    sbg = build_sbg(chain_roadmap([10.0, 5.0]), {"v1": prior}, classes)
    expand_ig_outcomes(sbg, "v1")
    transitions = sbg.ig_transitions["v1"]
    assert [target for target, _ in transitions] == ["v1~stair", "v1~rubble"]
    assert [p for _, p in transitions] == pytest.approx([2 / 3, 1 / 3])
    outcome = sbg.node("v1~stair")
    assert outcome.kind is NodeKind.IG_OUTCOME and outcome.parent == "v1" and outcome.vertex == "v1"
    assert outcome.semantic.is_dirac()
    assert {edge.target for edge in actions_from(sbg, "v1~stair")} == {"v0", "v2"}
    assert all(edge.is_navigate for edge in actions_from(sbg, "v1~stair"))


def test_expand_outcomes_uniform_and_resolved_confidence(classes):
    prior = SemanticBelief(classes, [0.05, 0.6, 0.3, 0.05])
    sbg = build_sbg(chain_roadmap([10.0]), {"v0": prior}, classes)
    expand_ig_outcomes(sbg, "v0", top_k=3, resolved_confidence=0.9, mode="uniform")
    assert [p for _, p in sbg.ig_transitions["v0"]] == pytest.approx([1 / 3] * 3)
    assert sbg.node("v0~stair").semantic.of(classes.by_name("stair")) == pytest.approx(0.9)


def test_expand_outcomes_of_an_unknown_node_keeps_unknown(classes):
    sbg = build_sbg(chain_roadmap([10.0]), None, classes)
    expand_ig_outcomes(sbg, "v0")
    assert sbg.ig_transitions["v0"] == [("v0~unknown", 1.0)]


def test_reexpansion_replaces_outcomes(classes):
    sbg = build_sbg(chain_roadmap([10.0]), {"v0": SemanticBelief(classes, [0.5, 0.5, 0, 0])}, classes)
    expand_ig_outcomes(sbg, "v0", top_k=2)
    expand_ig_outcomes(sbg, "v0", top_k=1)
    assert [target for target, _ in sbg.ig_transitions["v0"]] == ["v0~flat_ground"]
    assert "v0~stair" not in sbg


def test_outcome_residual_stays_on_the_parent_support(classes):
    sbg = build_sbg(chain_roadmap([10.0]), {"v0": SemanticBelief(classes, [0.5, 0.5, 0, 0])}, classes)
    expand_ig_outcomes(sbg, "v0", top_k=2, resolved_confidence=0.6)
    flat = sbg.node("v0~flat_ground").semantic
    assert flat.probs.tolist() == pytest.approx([0.6, 0.4, 0.0, 0.0])
    assert flat.entropy() < np.log(2.0)


def test_outcome_falls_back_to_dirac_when_the_residual_would_add_entropy(classes):
    sbg = build_sbg(chain_roadmap([10.0]), {"v0": SemanticBelief(classes, [0.98, 0.01, 0.01, 0])}, classes)
    expand_ig_outcomes(sbg, "v0", top_k=2, resolved_confidence=0.6)
    assert sbg.node("v0~stair").semantic.is_dirac()
    assert sbg.node("v0~flat_ground").semantic.entropy() < sbg.node("v0").semantic.entropy()


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 1000), min_size=4, max_size=4).filter(lambda w: sum(w) > 0),
    st.integers(1, 3),
    st.floats(min_value=0.51, max_value=1.0),
)
def test_outcomes_are_less_uncertain_than_their_parent(weights, top_k, confidence):
    class_set = ClassSet.from_names(["flat_ground", "stair", "rubble"])
    prior = SemanticBelief(class_set, np.array(weights, dtype=float) / sum(weights))
    sbg = build_sbg(chain_roadmap([10.0]), {"v0": prior}, class_set)
    expand_ig_outcomes(sbg, "v0", top_k=top_k, resolved_confidence=confidence)
    parent = sbg.node("v0").semantic
    for child_id, _ in sbg.ig_transitions["v0"]:
        child = sbg.node(child_id).semantic
        if parent.is_dirac():
            assert child.is_dirac()
        else:
            assert child.entropy() < parent.entropy()


def test_expand_rejects_outcome_nodes_and_bad_arguments(classes):
    sbg = expand_all(build_sbg(chain_roadmap([10.0]), {"v0": SemanticBelief(classes, [0.5, 0.5, 0, 0])}, classes))
    with pytest.raises(InvalidArgumentError):
        expand_ig_outcomes(sbg, "v0~stair")
    with pytest.raises(InvalidArgumentError):
        expand_ig_outcomes(sbg, "v0", top_k=0)
    with pytest.raises(InvalidArgumentError):
        expand_ig_outcomes(sbg, "v0", resolved_confidence=0.5)
    with pytest.raises(InvalidArgumentError):
        expand_ig_outcomes(sbg, "v0", mode="learned")


def test_edge_validation(classes):
    with pytest.raises(InvalidArgumentError):
        SbgEdge(EdgeKind.NAVIGATE, "a", "a", classes[0], 1.0)
    with pytest.raises(InvalidArgumentError):
        SbgEdge(EdgeKind.NAVIGATE, "a", "b", classes.unknown, 1.0)
    with pytest.raises(InvalidArgumentError):
        SbgEdge(EdgeKind.INFO_GATHER, "a", "b")


def test_actions_from_orders_navigation_before_ig(chain_graph):
    actions = actions_from(chain_graph, "v1")
    assert [edge.kind for edge in actions][-1] is EdgeKind.INFO_GATHER
    assert [(edge.target, edge.controller.name) for edge in actions[:3]] == [
        ("v0", "flat_ground"), ("v0", "stair"), ("v0", "rubble")
    ]
    with pytest.raises(InvalidArgumentError):
        actions_from(chain_graph, "missing")


def test_copy_is_independent(chain_graph):
    copy = chain_graph.copy()
    expand_all(copy)
    assert chain_graph.ig_transitions == {}
    assert len(copy) > len(chain_graph)


def test_navigation_digraph(chain_graph):
    graph = navigation_digraph(chain_graph)
    assert sorted(graph.edges) == [("v0", "v1"), ("v1", "v0"), ("v1", "v2"), ("v2", "v1"), ("v2", "v3"), ("v3", "v2")]


def test_export_dot_format(chain_graph):
    _, policy = value_iteration(chain_graph, default_cost_model(chain_graph.class_set), "v3")
    text = export_dot(chain_graph, policy)
    assert text.startswith("digraph sbg {\n") and text.endswith("}\n")
    assert '"v0" [label="v0\\nflat_ground 1.00", shape=ellipse];' in text
    assert '"v0" -> "v1" [label="flat_ground 10m", color=red, penwidth=2];' in text
    assert '"v0" -> "v0" [label="IG", style=dashed];' in text


def test_export_dot_of_an_empty_graph(classes):
    assert export_dot(Sbg(classes)) == "digraph sbg {\n}\n"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=1.0, max_value=20.0), min_size=1, max_size=5), st.integers(0, 1000))
def test_export_dot_is_deterministic(lengths, seed):
    classes = ClassSet.from_names(["flat_ground", "stair", "rubble"])
    rng = np.random.default_rng(seed)
    priors = {f"v{i}": SemanticBelief(classes, rng.dirichlet(np.ones(4))) for i in range(len(lengths) + 1)}
    first = expand_all(build_sbg(chain_roadmap(lengths), priors, classes))
    second = expand_all(build_sbg(chain_roadmap(lengths), dict(reversed(list(priors.items()))), classes))
    assert export_dot(first) == export_dot(second)
