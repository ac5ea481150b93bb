##################################################################################################
#                                     SEMANTIC BELIEF GRAPH                                      #
#                                                                                                #
# The roadmap-derived graph whose nodes carry geo-semantic beliefs and whose edges are           #
# terrain-specific navigation controllers or information-gathering (IG) self-loops.              #
#                                                                                                #
# Key Features:                                                                                  #
# - Roadmap validation (unique vertices, positive lengths, no link shorter than its geometry)    #
# - One navigate edge per named controller for every link direction, one IG loop per base node   #
# - Expansion of IG outcomes into virtual nodes with transition probabilities (single IG layer)  #
# - Deterministic Graphviz DOT export, optionally highlighting a policy                          #
# - networkx views for connectivity checks                                                       #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import networkx as nx
import numpy as np

from core.belief import (
    ClassSet,
    GeometricBelief,
    GeoSemanticBelief,
    SemanticBelief,
    TerrainClass,
    argmax_class,
    unknown_prior,
)
from utils.errors import InvalidArgumentError
from utils.log import get_logger

logger = get_logger(__name__)

DEFAULT_COVARIANCE = np.eye(3) * 0.01
LENGTH_TOLERANCE = 1e-6
PROBABILITY_TOLERANCE = 1e-9
OUTCOME_SEPARATOR = "~"
OUTCOME_MODES = ("belief", "uniform")

##################################################################################################
#                                            ROADMAP                                             #
##################################################################################################

@dataclass(frozen=True)
class Vertex:
    """Roadmap vertex: identifier and 3D position in meters."""

    id: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class Link:
    """Undirected roadmap link with its traversal length in meters."""

    source: str
    target: str
    length: float


class Roadmap:
    """
    Validated roadmap: the geometric skeleton the SBG is built on.

    Attributes:
        vertices (list[Vertex]): Vertices in input order.
        links (list[Link]): Undirected links in input order.
    """

    def __init__(self, vertices: Sequence[Vertex], links: Sequence[Link]):
        self.vertices = list(vertices)
        self.links = list(links)
        self._positions = {}
        for vertex in self.vertices:
            if vertex.id in self._positions:
                raise InvalidArgumentError(f"duplicate vertex id '{vertex.id}'")
            position = np.array(vertex.position, dtype=float)
            if position.shape != (3,) or not np.all(np.isfinite(position)):
                raise InvalidArgumentError(f"vertex '{vertex.id}' needs a finite 3D position")
            self._positions[vertex.id] = position

        seen = set()
        for link in self.links:
            for end in (link.source, link.target):
                if end not in self._positions:
                    raise InvalidArgumentError(f"link {link.source}-{link.target} references missing vertex '{end}'")
            if link.source == link.target:
                raise InvalidArgumentError(f"link on '{link.source}' connects a vertex to itself")
            pair = frozenset((link.source, link.target))
            if pair in seen:
                raise InvalidArgumentError(f"duplicate link {link.source}-{link.target}")
            seen.add(pair)
            if not link.length > 0.0:
                raise InvalidArgumentError(f"link {link.source}-{link.target} must have positive length")
            if link.length < self.euclidean(link.source, link.target) - LENGTH_TOLERANCE:
                raise InvalidArgumentError(
                    f"link {link.source}-{link.target} is shorter ({link.length}) than the distance between its ends"
                )

    def __contains__(self, vertex_id) -> bool:
        return vertex_id in self._positions

    @property
    def vertex_ids(self) -> list[str]:
        return [vertex.id for vertex in self.vertices]

    def position(self, vertex_id: str) -> np.ndarray:
        return self._positions[vertex_id]

    def euclidean(self, a: str, b: str) -> float:
        return float(np.linalg.norm(self._positions[a] - self._positions[b]))

    def to_networkx(self) -> nx.Graph:
        """Undirected graph of the roadmap with link lengths as "length" attributes."""
        graph = nx.Graph()
        graph.add_nodes_from(self.vertex_ids)
        for link in self.links:
            graph.add_edge(link.source, link.target, length=link.length)
        return graph

##################################################################################################
#                                        NODES AND EDGES                                         #
##################################################################################################

class NodeKind(str, Enum):
    BASE = "base"
    IG_OUTCOME = "ig_outcome"


class EdgeKind(str, Enum):
    NAVIGATE = "navigate"
    INFO_GATHER = "info_gather"


@dataclass(frozen=True, eq=False)
class SbgNode:
    """
    Belief node of the graph.

    Attributes:
        id (str): Unique node id (vertex id for base nodes, "<parent>~<class>" for IG outcomes).
        belief (GeoSemanticBelief): Geometric and semantic belief of the node.
        vertex (str): Roadmap vertex the node sits on.
        kind (NodeKind): Base node or IG outcome.
        parent (str | None): Parent base node of an IG outcome.
        outcome (TerrainClass | None): Class an IG outcome is concentrated on.
    """

    id: str
    belief: GeoSemanticBelief
    vertex: str
    kind: NodeKind = NodeKind.BASE
    parent: Optional[str] = None
    outcome: Optional[TerrainClass] = None

    @property
    def semantic(self) -> SemanticBelief:
        return self.belief.semantic

    @property
    def is_base(self) -> bool:
        return self.kind is NodeKind.BASE


@dataclass(frozen=True)
class SbgEdge:
    """
    Action edge of the graph.

    Navigate edges drive the robot between two different nodes with one terrain controller;
    info-gather edges are self-loops on base nodes.
    """

    kind: EdgeKind
    source: str
    target: str
    controller: Optional[TerrainClass] = None
    length: float = 0.0

    def __post_init__(self):
        if self.kind is EdgeKind.NAVIGATE:
            if self.source == self.target:
                raise InvalidArgumentError(f"navigate edge on '{self.source}' must not be a self-loop")
            if self.controller is None or self.controller.is_unknown:
                raise InvalidArgumentError("navigate edges need a named terrain controller")
            if not self.length > 0.0:
                raise InvalidArgumentError(f"navigate edge {self.source}->{self.target} needs a positive length")
        else:
            if self.source != self.target:
                raise InvalidArgumentError("information-gathering edges are self-loops")
            if self.controller is not None:
                raise InvalidArgumentError("information-gathering edges carry no terrain controller")

    @property
    def is_navigate(self) -> bool:
        return self.kind is EdgeKind.NAVIGATE

    @property
    def sort_key(self):
        controller = self.controller.index if self.controller is not None else -1
        return (0 if self.is_navigate else 1, self.source, self.target, controller)

    def retarget_source(self, source: str) -> "SbgEdge":
        return SbgEdge(self.kind, source, self.target, self.controller, self.length)

    def describe(self) -> str:
        if self.is_navigate:
            return f"{self.source} -> {self.target} [{self.controller.name}, {self.length:g} m]"
        return f"{self.source} [IG]"

##################################################################################################
#                                             GRAPH                                              #
##################################################################################################

class Sbg:
    """
    Semantic Belief Graph: belief nodes, action edges and IG transition probabilities.

    Attributes:
        class_set (ClassSet): Terrain classes of the scenario.
        nodes (dict[str, SbgNode]): Nodes by id.
        ig_transitions (dict[str, list[tuple[str, float]]]): IG outcomes and probabilities per base node.
    """

    def __init__(self, class_set: ClassSet):
        self.class_set = class_set
        self.nodes: dict[str, SbgNode] = {}
        self.ig_transitions: dict[str, list[tuple[str, float]]] = {}
        self._out: dict[str, list[SbgEdge]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id) -> bool:
        return node_id in self.nodes

    def node(self, node_id: str) -> SbgNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise InvalidArgumentError(f"node '{node_id}' is not part of the graph") from None

    def node_ids(self) -> list[str]:
        """Node ids in deterministic (sorted) order."""
        return sorted(self.nodes)

    @property
    def edges(self) -> list[SbgEdge]:
        return sorted((edge for edges in self._out.values() for edge in edges), key=lambda e: e.sort_key)

    def out_edges(self, node_id: str) -> list[SbgEdge]:
        self.node(node_id)
        return list(self._out.get(node_id, []))

    def base_nodes(self) -> list[SbgNode]:
        return [self.nodes[i] for i in self.node_ids() if self.nodes[i].is_base]

    def outcomes_of(self, node_id: str) -> list[SbgNode]:
        return [self.nodes[target] for target, _ in self.ig_transitions.get(node_id, [])]

    def add_node(self, node: SbgNode) -> None:
        if node.id in self.nodes:
            raise InvalidArgumentError(f"duplicate node id '{node.id}'")
        self.nodes[node.id] = node
        self._out.setdefault(node.id, [])

    def add_edge(self, edge: SbgEdge) -> None:
        for end in (edge.source, edge.target):
            if end not in self.nodes:
                raise InvalidArgumentError(f"edge endpoint '{end}' is not part of the graph")
        self._out[edge.source].append(edge)

    def remove_outcomes(self, node_id: str) -> None:
        """Drop the IG outcome nodes of a base node together with their edges."""
        for target, _ in self.ig_transitions.pop(node_id, []):
            self.nodes.pop(target, None)
            self._out.pop(target, None)

    def copy(self) -> "Sbg":
        """Independent graph sharing the immutable nodes and edges."""
        clone = Sbg(self.class_set)
        clone.nodes = dict(self.nodes)
        clone.ig_transitions = {key: list(value) for key, value in self.ig_transitions.items()}
        clone._out = {key: list(value) for key, value in self._out.items()}
        return clone

    def with_semantic(self, node_id: str, semantic: SemanticBelief) -> "Sbg":
        """Copy of the graph where a base node carries a different semantic belief."""
        node = self.node(node_id)
        if not node.is_base:
            raise InvalidArgumentError(f"node '{node_id}' is not a base node")
        clone = self.copy()
        clone.nodes[node_id] = SbgNode(node.id, node.belief.with_semantic(semantic), node.vertex)
        return clone

##################################################################################################
#                                          CONSTRUCTION                                          #
##################################################################################################

def build_sbg(
    roadmap: Roadmap,
    priors: Optional[Mapping[str, SemanticBelief]],
    class_set: ClassSet,
    default_covariance=None,
) -> Sbg:
    """
    Build the base graph from a roadmap.

    One base node per vertex (given prior or unknown_prior with mass 1), one navigate edge per
    named controller for both directions of every link, and one IG self-loop per base node.
    IG transitions stay empty until expand_ig_outcomes.

    Args:
        roadmap (Roadmap): Validated roadmap.
        priors (Mapping[str, SemanticBelief] | None): Optional per-vertex semantic priors.
        class_set (ClassSet): Terrain classes.
        default_covariance (array-like | None): 3x3 covariance for every node (0.01 I by default).

    Returns:
        Sbg: The base graph.
    """

    priors = dict(priors or {})
    for vertex_id, prior in priors.items():
        if vertex_id not in roadmap:
            raise InvalidArgumentError(f"prior given for unknown vertex '{vertex_id}'")
        if prior.class_set != class_set:
            raise InvalidArgumentError(f"prior of '{vertex_id}' uses a different class set")
    covariance = DEFAULT_COVARIANCE if default_covariance is None else default_covariance
    default_prior = unknown_prior(class_set, 1.0)

    sbg = Sbg(class_set)
    for vertex in roadmap.vertices:
        geometric = GeometricBelief(roadmap.position(vertex.id), covariance)
        semantic = priors.get(vertex.id, default_prior)
        sbg.add_node(SbgNode(vertex.id, GeoSemanticBelief(geometric, semantic), vertex.id))

    for link in roadmap.links:
        for source, target in ((link.source, link.target), (link.target, link.source)):
            for controller in class_set.named:
                sbg.add_edge(SbgEdge(EdgeKind.NAVIGATE, source, target, controller, link.length))
    for vertex in roadmap.vertices:
        sbg.add_edge(SbgEdge(EdgeKind.INFO_GATHER, vertex.id, vertex.id))

    logger.debug(f"Built SBG with {len(sbg)} nodes from {len(roadmap.links)} roadmap links")
    return sbg


def outcome_id(parent: str, terrain: TerrainClass) -> str:
    return f"{parent}{OUTCOME_SEPARATOR}{terrain.name}"


def expand_ig_outcomes(
    sbg: Sbg,
    node_id: str,
    top_k: int = 2,
    resolved_confidence: float = 1.0,
    mode: str = "belief",
) -> Sbg:
    """
    Sample the IG outcomes of a base node as virtual nodes.

    The top_k most probable named classes (unknown only when it is the sole positive class)
    each get an outcome node concentrated on that class with `resolved_confidence` mass; the
    remainder is spread over the other classes the parent gives positive mass. An outcome of a
    non-Dirac parent always has lower entropy than the parent and falls back to a Dirac belief
    when the spread residual would break that.
    Outcome probabilities are the renormalized prior masses ("belief") or equal ("uniform").
    Outcome nodes share the parent's geometry and inherit its navigate edges but have no IG loop.
    Re-expanding a node replaces its previous outcomes.

    Args:
        sbg (Sbg): Graph to modify in place.
        node_id (str): Base node to expand.
        top_k (int): Maximum number of outcomes.
        resolved_confidence (float): Mass of the revealed class, in (0.5, 1].
        mode (str): "belief" or "uniform" outcome probabilities.

    Returns:
        Sbg: The same graph, for chaining.
    """

    node = sbg.node(node_id)
    if not node.is_base:
        raise InvalidArgumentError(f"node '{node_id}' is not a base node")
    if top_k < 1:
        raise InvalidArgumentError(f"top_k must be at least 1, got {top_k}")
    if not 0.5 < resolved_confidence <= 1.0:
        raise InvalidArgumentError(f"resolved_confidence must lie in (0.5, 1], got {resolved_confidence}")
    if mode not in OUTCOME_MODES:
        raise InvalidArgumentError(f"outcome mode must be one of {OUTCOME_MODES}, got '{mode}'")

    sbg.remove_outcomes(node_id)
    probs = node.semantic.probs
    candidates = sorted(
        (i for i in range(len(probs) - 1) if probs[i] > 0.0),
        key=lambda i: (-probs[i], i),
    )
    if not candidates:
        candidates = [len(probs) - 1]
    selected = candidates[:top_k]
    support = [i for i in range(len(probs)) if probs[i] > 0.0]

    if mode == "belief":
        mass = float(sum(probs[i] for i in selected))
        weights = [float(probs[i]) / mass for i in selected]
    else:
        weights = [1.0 / len(selected)] * len(selected)

    inherited = [edge for edge in sbg.out_edges(node_id) if edge.is_navigate]
    transitions = []
    for index, weight in zip(selected, weights):
        terrain = sbg.class_set[index]
        semantic = SemanticBelief.concentrated(sbg.class_set, terrain, resolved_confidence, support)
        if not node.semantic.is_dirac() and semantic.entropy() >= node.semantic.entropy():
            semantic = SemanticBelief.dirac(sbg.class_set, terrain)
        child = SbgNode(
            outcome_id(node_id, terrain),
            node.belief.with_semantic(semantic),
            node.vertex,
            NodeKind.IG_OUTCOME,
            parent=node_id,
            outcome=terrain,
        )
        sbg.add_node(child)
        for edge in inherited:
            sbg.add_edge(edge.retarget_source(child.id))
        transitions.append((child.id, weight))
    sbg.ig_transitions[node_id] = transitions
    return sbg


def expand_all(sbg: Sbg, top_k: int = 2, resolved_confidence: float = 1.0, mode: str = "belief") -> Sbg:
    """Expand the IG outcomes of every base node, in id order."""
    for node in sbg.base_nodes():
        expand_ig_outcomes(sbg, node.id, top_k, resolved_confidence, mode)
    logger.debug(f"Expanded IG outcomes, graph now has {len(sbg)} nodes")
    return sbg

##################################################################################################
#                                            QUERIES                                             #
##################################################################################################

def actions_from(sbg: Sbg, node_id: str) -> list[SbgEdge]:
    """
    Actions available at a node: its navigate edges (target, then controller order) followed by
    its IG loop. IG outcome nodes have no IG loop.

    Args:
        sbg (Sbg): The graph.
        node_id (str): Node to query.

    Returns:
        list[SbgEdge]: Available actions.
    """

    return sorted(sbg.out_edges(node_id), key=lambda edge: edge.sort_key)


def navigation_digraph(sbg: Sbg) -> nx.DiGraph:
    """Directed graph of navigate edges (controllers collapsed) over all SBG nodes."""
    graph = nx.DiGraph()
    graph.add_nodes_from(sbg.node_ids())
    for edge in sbg.edges:
        if edge.is_navigate:
            graph.add_edge(edge.source, edge.target, length=edge.length)
    return graph

##################################################################################################
#                                           DOT EXPORT                                           #
##################################################################################################

def _escape(text: str) -> str:
    return str(text).replace("\\", "\\\\").replace('"', '\\"')


def _quote(text: str) -> str:
    return f'"{_escape(text)}"'


def export_dot(sbg: Sbg, policy=None) -> str:
    """
    Render the graph as a Graphviz digraph.

    Nodes are labelled with their most likely class and its probability, IG outcomes are drawn as
    boxes and connected to their parent with dotted probability edges. When a policy is given,
    its chosen edges are drawn in red. Output is deterministic (ids in sorted order).

    Args:
        sbg (Sbg): Graph to render.
        policy (Policy | None): Optional policy whose actions are highlighted.

    Returns:
        str: DOT document.
    """

    chosen = set()
    if policy is not None:
        chosen = {edge for edge in policy.actions.values() if edge is not None}

    lines = ["digraph sbg {"]
    for node_id in sbg.node_ids():
        node = sbg.nodes[node_id]
        terrain, probability = argmax_class(node.semantic)
        shape = "ellipse" if node.is_base else "box"
        label = f"{_escape(node_id)}\\n{terrain.name} {probability:.2f}"
        lines.append(f'  {_quote(node_id)} [label="{label}", shape={shape}];')

    for edge in sbg.edges:
        if edge.is_navigate:
            attributes = [f'label="{edge.controller.name} {edge.length:g}m"']
        else:
            attributes = ['label="IG"', "style=dashed"]
        if edge in chosen:
            attributes += ["color=red", "penwidth=2"]
        lines.append(f"  {_quote(edge.source)} -> {_quote(edge.target)} [{', '.join(attributes)}];")

    for node_id in sorted(sbg.ig_transitions):
        for target, probability in sbg.ig_transitions[node_id]:
            lines.append(f'  {_quote(node_id)} -> {_quote(target)} [label="p={probability:.3f}", style=dotted];')

    lines.append("}")
    return "\n".join(lines) + "\n"
