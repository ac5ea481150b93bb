import numpy as np
import pytest

from core.belief import ClassSet, SemanticBelief
from core.cost import default_cost_model
from planning.graph import Link, Roadmap, Vertex, build_sbg
from scenarios.scenario import load_scenario
from utils.paths import fixture_path


@pytest.fixture
def classes():
    return ClassSet.from_names(["flat_ground", "stair", "rubble"])


@pytest.fixture
def cost(classes):
    return default_cost_model(classes)


@pytest.fixture
def belief(classes):
    def make(*probs):
        return SemanticBelief(classes, probs)

    return make


@pytest.fixture(scope="session")
def small_scenario():
    return load_scenario(fixture_path("small_two_level"))


@pytest.fixture(scope="session")
def urban_scenario():
    return load_scenario(fixture_path("urban_callout"))


def chain_roadmap(lengths):
    """Straight chain v0 - v1 - ... with the given link lengths."""
    positions = np.concatenate([[0.0], np.cumsum(lengths)])
    vertices = [Vertex(f"v{i}", (float(x), 0.0, 0.0)) for i, x in enumerate(positions)]
    links = [Link(f"v{i}", f"v{i + 1}", float(length)) for i, length in enumerate(lengths)]
    return Roadmap(vertices, links)


@pytest.fixture
def chain_graph(classes):
    """Three-link chain whose vertices are known flat, stair, rubble, flat."""
    roadmap = chain_roadmap([10.0, 5.0, 8.0])
    truth = ["flat_ground", "stair", "rubble", "flat_ground"]
    priors = {f"v{i}": SemanticBelief.dirac(classes, classes.by_name(name)) for i, name in enumerate(truth)}
    return build_sbg(roadmap, priors, classes)
