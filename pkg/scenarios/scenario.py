##################################################################################################
#                                        SCENARIO MODULE                                         #
#                                                                                                #
# Scenario documents: loading, validation and serialization.                                     #
#                                                                                                #
# A scenario is a single JSON document tagged "sbg-scenario/1" holding the roadmap, the          #
# ground truth, per-vertex priors, the cost table, the observation model, planner settings       #
# and the start/goal pair. A document may instead carry a "generator" block that is expanded     #
# into a full scenario at load time. Loading is total: any problem raises a ScenarioError        #
# naming the JSON path of the offending value.                                                   #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import dataclasses
import json
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import networkx as nx
import numpy as np

from core.belief import ClassSet, SemanticBelief, unknown_prior, uniform_prior
from core.cost import UNSAFE, DEFAULT_TABLE, CostModel, default_cost_model
from core.observation import ObservationModel
from planning.graph import DEFAULT_COVARIANCE, Link, Roadmap, Sbg, Vertex, build_sbg, expand_all
from planning.planner import PlannerConfig
from simulation.simulator import GroundTruth
from utils.errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidValueError,
    ScenarioError,
    ScenarioParseError,
    UnknownClassError,
    UnreachableGoalError,
)
from utils.log import get_logger

logger = get_logger(__name__)

SCHEMA = "sbg-scenario/1"
PRIOR_KINDS = ("unknown", "uniform")

##################################################################################################
#                                            SCENARIO                                            #
##################################################################################################

@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Fully validated experiment definition.

    Attributes:
        name (str): Scenario name.
        class_set (ClassSet): Terrain classes (unknown last).
        roadmap (Roadmap): Vertices and links.
        ground_truth (GroundTruth): True terrain of every vertex.
        priors (dict[str, SemanticBelief]): Explicit per-vertex priors.
        start (str): Start vertex id.
        goal (str): Goal vertex id.
        cost_model (CostModel): Traversal and IG costs.
        observation_model (ObservationModel): Classifier model.
        planner (PlannerConfig): Planner settings.
        prior_default (dict): Prior of vertices without an explicit one.
        default_covariance (np.ndarray): Covariance given to every node.
    """

    name: str
    class_set: ClassSet
    roadmap: Roadmap
    ground_truth: GroundTruth
    priors: dict
    start: str
    goal: str
    cost_model: CostModel
    observation_model: ObservationModel
    planner: PlannerConfig = PlannerConfig()
    prior_default: dict = field(default_factory=lambda: {"kind": "unknown", "unknown_mass": 1.0})
    default_covariance: np.ndarray = field(default_factory=lambda: DEFAULT_COVARIANCE.copy())

    def prior_of(self, vertex_id: str) -> SemanticBelief:
        if vertex_id in self.priors:
            return self.priors[vertex_id]
        if self.prior_default["kind"] == "uniform":
            return uniform_prior(self.class_set)
        return unknown_prior(self.class_set, self.prior_default.get("unknown_mass", 1.0))

    def base_graph(self) -> Sbg:
        """Base graph with one node per vertex and no IG outcomes."""
        priors = {vertex_id: self.prior_of(vertex_id) for vertex_id in self.roadmap.vertex_ids}
        return build_sbg(self.roadmap, priors, self.class_set, self.default_covariance)

    def expanded_graph(self) -> Sbg:
        """Base graph with the IG outcomes of every base node."""
        return expand_all(
            self.base_graph(),
            self.planner.top_k,
            self.planner.resolved_confidence,
            self.planner.outcome_probabilities,
        )

    def with_planner(self, **changes) -> "Scenario":
        """Copy of the scenario with some planner settings replaced."""
        changes = {key: value for key, value in changes.items() if value is not None}
        try:
            planner = dataclasses.replace(self.planner, **changes)
        except InvalidArgumentError as error:
            raise InvalidValueError(str(error), "$.planner") from error
        return dataclasses.replace(self, planner=planner)

##################################################################################################
#                                        LOADING HELPERS                                         #
##################################################################################################

def _child(location: str, key: Union[str, int]) -> str:
    return f"{location}[{key}]" if isinstance(key, int) else f"{location}.{key}"


def _require(document: Mapping, key: str, location: str):
    if key not in document:
        raise ScenarioParseError(f"missing required field '{key}'", location)
    return document[key]


def _mapping(value, location: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ScenarioParseError(f"expected an object, got {type(value).__name__}", location)
    return value


def _sequence(value, location: str) -> list:
    if not isinstance(value, list):
        raise ScenarioParseError(f"expected a list, got {type(value).__name__}", location)
    return value


def _number(value, location: str, *, minimum: Optional[float] = None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidValueError(f"expected a number, got {value!r}", location)
    value = float(value)
    if not np.isfinite(value):
        raise InvalidValueError(f"expected a finite number, got {value}", location)
    if positive and value <= 0.0:
        raise InvalidValueError(f"must be positive, got {value}", location)
    if minimum is not None and value < minimum:
        raise InvalidValueError(f"must be at least {minimum}, got {value}", location)
    return value


def _class_name(class_set: ClassSet, name, location: str):
    if not isinstance(name, str) or name not in class_set.names:
        raise UnknownClassError(f"unknown terrain class {name!r}, expected one of {class_set.names}", location)
    return class_set.by_name(name)


def _vertex_id(roadmap: Roadmap, vertex_id, location: str) -> str:
    if not isinstance(vertex_id, str) or vertex_id not in roadmap:
        raise InvalidValueError(f"unknown vertex {vertex_id!r}", location)
    return vertex_id

##################################################################################################
#                                        SECTION READERS                                         #
##################################################################################################

def _read_classes(document: Mapping) -> ClassSet:
    names = _sequence(_require(document, "classes", "$"), "$.classes")
    for index, name in enumerate(names):
        if not isinstance(name, str) or not name:
            raise InvalidValueError(f"class names must be non-empty strings, got {name!r}", _child("$.classes", index))
    try:
        return ClassSet.from_names(names)
    except InvalidArgumentError as error:
        raise InvalidValueError(str(error), "$.classes") from error


def _read_roadmap(document: Mapping) -> Roadmap:
    location = "$.roadmap"
    block = _mapping(_require(document, "roadmap", "$"), location)
    vertices = []
    for index, entry in enumerate(_sequence(_require(block, "vertices", location), f"{location}.vertices")):
        where = _child(f"{location}.vertices", index)
        entry = _mapping(entry, where)
        vertex_id = _require(entry, "id", where)
        if not isinstance(vertex_id, str) or not vertex_id:
            raise InvalidValueError(f"vertex ids must be non-empty strings, got {vertex_id!r}", f"{where}.id")
        position = _sequence(_require(entry, "position", where), f"{where}.position")
        if len(position) != 3:
            raise DimensionMismatchError(f"position needs 3 coordinates, got {len(position)}", f"{where}.position")
        coordinates = tuple(_number(value, _child(f"{where}.position", k)) for k, value in enumerate(position))
        vertices.append(Vertex(vertex_id, coordinates))

    known = {vertex.id: np.array(vertex.position) for vertex in vertices}
    links = []
    for index, entry in enumerate(_sequence(_require(block, "links", location), f"{location}.links")):
        where = _child(f"{location}.links", index)
        entry = _mapping(entry, where)
        source = _require(entry, "from", where)
        target = _require(entry, "to", where)
        for key, end in (("from", source), ("to", target)):
            if end not in known:
                raise InvalidValueError(f"unknown vertex {end!r}", f"{where}.{key}")
        if "length" in entry:
            length = _number(entry["length"], f"{where}.length", positive=True)
        else:
            length = float(np.linalg.norm(known[source] - known[target]))
        links.append(Link(source, target, length))

    try:
        return Roadmap(vertices, links)
    except InvalidArgumentError as error:
        raise InvalidValueError(str(error), location) from error


def _read_ground_truth(document: Mapping, roadmap: Roadmap, class_set: ClassSet) -> GroundTruth:
    location = "$.ground_truth"
    block = _mapping(_require(document, "ground_truth", "$"), location)
    terrain = {}
    for vertex_id, name in block.items():
        where = _child(location, vertex_id)
        _vertex_id(roadmap, vertex_id, where)
        cls = _class_name(class_set, name, where)
        if cls.is_unknown:
            raise InvalidValueError("ground truth must be a named class", where)
        terrain[vertex_id] = cls
    missing = [vertex_id for vertex_id in roadmap.vertex_ids if vertex_id not in terrain]
    if missing:
        raise InvalidValueError(f"no ground truth for vertices {missing}", location)
    return GroundTruth(terrain)


def _read_belief(value, class_set: ClassSet, location: str) -> SemanticBelief:
    if isinstance(value, list):
        if len(value) != len(class_set):
            raise DimensionMismatchError(
                f"prior has {len(value)} entries, the class set has {len(class_set)}", location
            )
        probs = [_number(p, _child(location, k), minimum=0.0) for k, p in enumerate(value)]
    else:
        entries = _mapping(value, location)
        probs = [0.0] * len(class_set)
        for name, p in entries.items():
            cls = _class_name(class_set, name, _child(location, name))
            probs[cls.index] = _number(p, _child(location, name), minimum=0.0)
    if any(p > 1.0 for p in probs):
        raise InvalidValueError("probabilities must not exceed 1", location)
    try:
        return SemanticBelief(class_set, probs)
    except InvalidArgumentError as error:
        raise InvalidValueError(str(error), location) from error


def _read_priors(document: Mapping, roadmap: Roadmap, class_set: ClassSet) -> dict:
    location = "$.priors"
    block = _mapping(document.get("priors", {}), location)
    priors = {}
    for vertex_id, value in block.items():
        where = _child(location, vertex_id)
        _vertex_id(roadmap, vertex_id, where)
        priors[vertex_id] = _read_belief(value, class_set, where)
    return priors


def _read_prior_default(document: Mapping) -> dict:
    location = "$.prior_default"
    block = _mapping(document.get("prior_default", {"kind": "unknown"}), location)
    kind = block.get("kind", "unknown")
    if kind not in PRIOR_KINDS:
        raise InvalidValueError(f"prior kind must be one of {PRIOR_KINDS}, got {kind!r}", f"{location}.kind")
    if kind == "uniform":
        return {"kind": "uniform"}
    mass = _number(block.get("unknown_mass", 1.0), f"{location}.unknown_mass", positive=True)
    if mass > 1.0:
        raise InvalidValueError(f"unknown_mass must not exceed 1, got {mass}", f"{location}.unknown_mass")
    return {"kind": "unknown", "unknown_mass": mass}


def _read_covariance(document: Mapping) -> np.ndarray:
    location = "$.geometry.default_covariance"
    block = _mapping(document.get("geometry", {}), "$.geometry")
    if "default_covariance" not in block:
        return DEFAULT_COVARIANCE.copy()
    rows = _sequence(block["default_covariance"], location)
    if len(rows) != 3 or any(not isinstance(row, list) or len(row) != 3 for row in rows):
        raise DimensionMismatchError("default_covariance must be a 3x3 matrix", location)
    matrix = np.array(
        [[_number(v, _child(_child(location, i), k)) for k, v in enumerate(row)] for i, row in enumerate(rows)]
    )
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-9) or np.min(np.linalg.eigvalsh(matrix)) < -1e-9:
        raise InvalidValueError("default_covariance must be symmetric positive semi-definite", location)
    return matrix


def _read_cost(document: Mapping, class_set: ClassSet) -> CostModel:
    location = "$.cost"
    if "cost" not in document:
        if sorted(cls.name for cls in class_set.named) != sorted(DEFAULT_TABLE):
            raise ScenarioParseError("a cost block is required for a custom class set", "$")
        return default_cost_model(class_set)

    block = _mapping(document["cost"], location)
    ig_cost = _number(block.get("ig_cost", 5.0), f"{location}.ig_cost", minimum=0.0)
    unsafe_cost = _number(block.get("unsafe_cost", 1e4), f"{location}.unsafe_cost", positive=True)
    if "nav_cost" not in block:
        try:
            return default_cost_model(class_set, ig_cost, unsafe_cost)
        except InvalidArgumentError as error:
            raise ScenarioParseError(str(error), f"{location}.nav_cost") from error

    table_location = f"{location}.nav_cost"
    rows = _sequence(block["nav_cost"], table_location)
    named = len(class_set.named)
    if len(rows) != named:
        raise DimensionMismatchError(
            f"nav_cost table has {len(rows)} rows, expected one per named class ({named})", table_location
        )
    checked = []
    for i, row in enumerate(rows):
        row_location = _child(table_location, i)
        row = _sequence(row, row_location)
        if len(row) != len(class_set):
            raise DimensionMismatchError(
                f"nav_cost row has {len(row)} entries, expected {len(class_set)}", row_location
            )
        entries = []
        for k, entry in enumerate(row):
            if entry == UNSAFE:
                entries.append(UNSAFE)
            else:
                entries.append(_number(entry, _child(row_location, k), positive=True))
        checked.append(entries)
    try:
        return CostModel.from_table(class_set, checked, ig_cost, unsafe_cost)
    except InvalidArgumentError as error:
        raise InvalidValueError(str(error), table_location) from error


def _read_dataclass(document: Mapping, key: str, factory, fields: tuple):
    location = f"$.{key}"
    block = _mapping(document.get(key, {}), location)
    values = {}
    for name, value in block.items():
        if name not in fields:
            raise InvalidValueError(f"unknown setting '{name}', expected one of {list(fields)}", _child(location, name))
        values[name] = value
    try:
        return factory(**values)
    except (InvalidArgumentError, TypeError) as error:
        raise InvalidValueError(str(error), location) from error


def _read_observation(document: Mapping, class_set: ClassSet) -> ObservationModel:
    fields = tuple(f.name for f in dataclasses.fields(ObservationModel))
    for name, value in _mapping(document.get("observation", {}), "$.observation").items():
        if name in fields:
            _number(value, f"$.observation.{name}", minimum=0.0)
    return _read_dataclass(document, "observation", lambda **kw: ObservationModel.for_classes(class_set, **kw), fields)


def _read_planner(document: Mapping) -> PlannerConfig:
    fields = tuple(f.name for f in dataclasses.fields(PlannerConfig))
    return _read_dataclass(document, "planner", PlannerConfig, fields)

##################################################################################################
#                                            LOADING                                             #
##################################################################################################

def _parse_source(source) -> tuple[Mapping, str]:
    if isinstance(source, Mapping):
        return source, "<document>"
    if isinstance(source, str) and source.lstrip().startswith("{"):
        text, origin = source, "<text>"
    else:
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ScenarioParseError(f"cannot read scenario file ({error.strerror})", str(path)) from error
        origin = str(path)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise ScenarioParseError(f"malformed JSON: {error.msg}", f"{origin}:{error.lineno}:{error.colno}") from error
    return _mapping(document, "$"), origin


def load_scenario(source: Union[str, Path, Mapping[str, Any]]) -> Scenario:
    """
    Load and validate a scenario document.

    Args:
        source (str | Path | Mapping): File path, JSON text or an already parsed document.

    Returns:
        Scenario: Fully validated scenario with defaults filled in.

    Raises:
        ScenarioError: Any problem in the document, located by JSON path.
    """

    document, origin = _parse_source(source)
    schema = document.get("schema")
    if schema != SCHEMA:
        raise ScenarioParseError(f"unsupported schema {schema!r}, expected '{SCHEMA}'", "$.schema")

    if "generator" in document:
        from scenarios.urban_course import scenario_from_generator

        scenario = scenario_from_generator(_mapping(document["generator"], "$.generator"))
        logger.info(f"Generated scenario '{scenario.name}' from {origin}")
        return scenario

    name = document.get("name", "scenario")
    if not isinstance(name, str):
        raise InvalidValueError("name must be a string", "$.name")
    class_set = _read_classes(document)
    roadmap = _read_roadmap(document)
    start = _vertex_id(roadmap, _require(document, "start", "$"), "$.start")
    goal = _vertex_id(roadmap, _require(document, "goal", "$"), "$.goal")

    scenario = Scenario(
        name=name,
        class_set=class_set,
        roadmap=roadmap,
        ground_truth=_read_ground_truth(document, roadmap, class_set),
        priors=_read_priors(document, roadmap, class_set),
        start=start,
        goal=goal,
        cost_model=_read_cost(document, class_set),
        observation_model=_read_observation(document, class_set),
        planner=_read_planner(document),
        prior_default=_read_prior_default(document),
        default_covariance=_read_covariance(document),
    )

    if start != goal and not nx.has_path(roadmap.to_networkx(), start, goal):
        raise UnreachableGoalError(f"goal '{goal}' cannot be reached from start '{start}'", "$.goal")

    logger.info(
        f"Loaded scenario '{name}' ({len(roadmap.vertices)} vertices, {len(roadmap.links)} links) from {origin}"
    )
    return scenario

##################################################################################################
#                                         SERIALIZATION                                          #
##################################################################################################

def serialize_scenario(scenario: Scenario) -> dict:
    """
    Full document form of a scenario (never a generator block).

    Args:
        scenario (Scenario): Scenario to serialize.

    Returns:
        dict: JSON-ready document that loads back to an identical scenario.
    """

    class_set = scenario.class_set
    return {
        "schema": SCHEMA,
        "name": scenario.name,
        "classes": [cls.name for cls in class_set.named],
        "roadmap": {
            "vertices": [
                {"id": vertex.id, "position": [float(v) for v in scenario.roadmap.position(vertex.id)]}
                for vertex in scenario.roadmap.vertices
            ],
            "links": [
                {"from": link.source, "to": link.target, "length": float(link.length)}
                for link in scenario.roadmap.links
            ],
        },
        "ground_truth": {vertex_id: cls.name for vertex_id, cls in scenario.ground_truth.terrain.items()},
        "priors": {vertex_id: belief.to_dict() for vertex_id, belief in scenario.priors.items()},
        "prior_default": dict(scenario.prior_default),
        "geometry": {"default_covariance": np.asarray(scenario.default_covariance, dtype=float).tolist()},
        "cost": {
            "nav_cost": scenario.cost_model.table_rows(),
            "ig_cost": float(scenario.cost_model.ig_cost),
            "unsafe_cost": float(scenario.cost_model.unsafe_cost),
        },
        "observation": dataclasses.asdict(scenario.observation_model),
        "planner": dataclasses.asdict(scenario.planner),
        "start": scenario.start,
        "goal": scenario.goal,
    }


def dump_scenario(scenario: Scenario, path: Optional[Union[str, Path]] = None) -> str:
    """Serialize a scenario to indented JSON text, optionally writing it to `path`."""
    text = json.dumps(serialize_scenario(scenario), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
