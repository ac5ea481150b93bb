##################################################################################################
#                                     URBAN COURSE GENERATOR                                     #
#                                                                                                #
# Procedural analog of an urban exploration course: a main chain of segments with stair and      #
# rubble terrain, one flat detour around every stretch of difficult terrain, and priors whose    #
# confidence varies the way an onboard classifier's would.                                       #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import math
from typing import Mapping, Optional

import numpy as np

from core.cost import DEFAULT_IG_COST, default_cost_model
from core.belief import ClassSet
from core.observation import ObservationModel
from utils.errors import InvalidArgumentError, InvalidValueError
from utils.log import get_logger

logger = get_logger(__name__)

CLASSES = ("flat_ground", "stair", "rubble")
STAIR_CLIMB = 2.5
DETOUR_FACTOR = 3.0
MISLEADING_SHARE = 0.4

# Prior vectors over (flat_ground, stair, rubble, unknown)
DIRAC_FLAT = [1.0, 0.0, 0.0, 0.0]
MISLEADING_FLAT = [0.4, 0.0, 0.6, 0.0]
MILD = {"stair": [0.12, 0.88, 0.0, 0.0], "rubble": [0.12, 0.0, 0.88, 0.0]}
CONFIDENT = {"stair": [0.02, 0.98, 0.0, 0.0], "rubble": [0.02, 0.0, 0.98, 0.0]}

GENERATOR_FIELDS = ("kind", "segments", "total_length", "stair_fraction", "rubble_fraction", "seed", "ig_cost", "name")

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

def _check_arguments(segments, total_length, stair_fraction, rubble_fraction, ig_cost):
    if isinstance(segments, bool) or not isinstance(segments, int) or segments < 2:
        raise InvalidArgumentError(f"segments must be an integer of at least 2, got {segments!r}")
    if not total_length > 0.0:
        raise InvalidArgumentError(f"total_length must be positive, got {total_length}")
    if stair_fraction < 0.0 or rubble_fraction < 0.0 or stair_fraction + rubble_fraction > 1.0:
        raise InvalidArgumentError(
            f"terrain fractions must be non-negative with a sum of at most 1, got {stair_fraction} and {rubble_fraction}"
        )
    if ig_cost < 0.0:
        raise InvalidArgumentError(f"ig_cost must be non-negative, got {ig_cost}")


def _terrain_runs(terrain: list[str]) -> list[tuple[int, int]]:
    """Maximal stretches of non-flat vertices as (first, last) indices."""
    runs = []
    first = None
    for index, name in enumerate(terrain):
        if name != "flat_ground" and first is None:
            first = index
        elif name == "flat_ground" and first is not None:
            runs.append((first, index - 1))
            first = None
    return runs


def urban_course_document(
    segments: int = 27,
    total_length: float = 300.0,
    stair_fraction: float = 0.2,
    rubble_fraction: float = 0.2,
    seed: int = 7,
    ig_cost: float = DEFAULT_IG_COST,
    name: Optional[str] = None,
) -> dict:
    """
    Generate an urban course as a full scenario document.

    Vertices v00..vNN form the main chain, start and goal at its ends. Link lengths are drawn
    uniformly in [0.8, 1.2] and scaled to total_length. Interior vertices get exactly
    round(fraction * (segments - 1)) stair and rubble labels. Every stretch of non-flat vertices
    is bypassed by one flat detour vertex whose two links are together three times as long as
    the bypassed chain section.

    Priors: flat vertices are known except for a share that looks like rubble to the classifier;
    stair and rubble vertices are split between mildly (0.88) and highly (0.98) confident priors.

    Args:
        segments (int): Number of main-chain links.
        total_length (float): Sum of the main-chain link lengths, in meters.
        stair_fraction (float): Share of interior vertices labelled stair.
        rubble_fraction (float): Share of interior vertices labelled rubble.
        seed (int): Seed of the generator.
        ig_cost (float): Seconds per information-gathering action.
        name (str | None): Scenario name (derived from the seed by default).

    Returns:
        dict: Scenario document with schema "sbg-scenario/1".
    """

    from scenarios.scenario import SCHEMA

    _check_arguments(segments, total_length, stair_fraction, rubble_fraction, ig_cost)
    rng = np.random.default_rng(seed)

    # --- Segment lengths and terrain labels ---
    raw = rng.uniform(0.8, 1.2, segments)
    lengths = raw * (total_length / raw.sum())

    interior = segments - 1
    n_stair = round(stair_fraction * interior)
    n_rubble = min(round(rubble_fraction * interior), interior - n_stair)
    labels = ["stair"] * n_stair + ["rubble"] * n_rubble + ["flat_ground"] * (interior - n_stair - n_rubble)
    terrain = ["flat_ground"] + [labels[i] for i in rng.permutation(interior)] + ["flat_ground"]

    # --- Main chain ---
    width = max(2, len(str(segments)))
    ids = [f"v{i:0{width}d}" for i in range(segments + 1)]
    positions = [(0.0, 0.0, 0.0)]
    for i, length in enumerate(lengths):
        climb = min(STAIR_CLIMB, 0.5 * length) if terrain[i] == "stair" else 0.0
        run = math.sqrt(length * length - climb * climb)
        x, y, z = positions[-1]
        positions.append((x + run, y, z + climb))

    vertices = [{"id": vid, "position": list(pos)} for vid, pos in zip(ids, positions)]
    links = [{"from": ids[i], "to": ids[i + 1], "length": float(lengths[i])} for i in range(segments)]
    ground_truth = dict(zip(ids, terrain))
    priors = {}

    # --- Priors: misleading flat vertices, mild and confident stair/rubble ---
    flat_interior = [i for i in range(1, segments) if terrain[i] == "flat_ground"]
    misleading = set(rng.permutation(flat_interior)[: round(MISLEADING_SHARE * len(flat_interior))].tolist())
    for i in range(segments + 1):
        priors[ids[i]] = list(MISLEADING_FLAT if i in misleading else DIRAC_FLAT)

    for kind in ("stair", "rubble"):
        members = [i for i in range(1, segments) if terrain[i] == kind]
        mild = set(rng.permutation(members)[: math.ceil(len(members) / 2)].tolist()) if members else set()
        for i in members:
            priors[ids[i]] = list(MILD[kind] if i in mild else CONFIDENT[kind])

    # --- Flat detour around every stair or rubble run ---
    for number, (first, last) in enumerate(_terrain_runs(terrain)):
        before, after = first - 1, last + 1
        section = float(lengths[before:after].sum())
        half = DETOUR_FACTOR * section / 2.0
        a, b = np.array(positions[before]), np.array(positions[after])
        middle = (a + b) / 2.0
        detour_id = f"d{number:02d}"
        vertices.append({"id": detour_id, "position": [float(middle[0]), section, float(middle[2])]})
        links.append({"from": ids[before], "to": detour_id, "length": half})
        links.append({"from": detour_id, "to": ids[after], "length": half})
        ground_truth[detour_id] = "flat_ground"
        priors[detour_id] = list(DIRAC_FLAT)

    class_set = ClassSet.from_names(CLASSES)
    cost = default_cost_model(class_set, ig_cost)
    observation = ObservationModel.for_classes(class_set)
    logger.debug(
        f"Urban course seed {seed}: {n_stair} stair, {n_rubble} rubble, {len(misleading)} misleading flat vertices"
    )
    return {
        "schema": SCHEMA,
        "name": name or f"urban_course_seed{seed}",
        "classes": list(CLASSES),
        "roadmap": {"vertices": vertices, "links": links},
        "ground_truth": ground_truth,
        "priors": {vid: dict(zip(class_set.names, probs)) for vid, probs in priors.items()},
        "cost": {"nav_cost": cost.table_rows(), "ig_cost": float(ig_cost), "unsafe_cost": float(cost.unsafe_cost)},
        "observation": {
            "accuracy_at_zero": observation.accuracy_at_zero,
            "accuracy_floor": observation.accuracy_floor,
            "falloff_rate": observation.falloff_rate,
            "ig_accuracy": observation.ig_accuracy,
        },
        "start": ids[0],
        "goal": ids[-1],
    }


def generate_urban_course(
    segments: int = 27,
    total_length: float = 300.0,
    stair_fraction: float = 0.2,
    rubble_fraction: float = 0.2,
    seed: int = 7,
    ig_cost: float = DEFAULT_IG_COST,
    name: Optional[str] = None,
):
    """Generate and load an urban course; see urban_course_document for the layout."""
    from scenarios.scenario import load_scenario

    document = urban_course_document(segments, total_length, stair_fraction, rubble_fraction, seed, ig_cost, name)
    return load_scenario(document)


def scenario_from_generator(block: Mapping):
    """Expand the "generator" block of a scenario document."""
    unknown = [key for key in block if key not in GENERATOR_FIELDS]
    if unknown:
        raise InvalidValueError(f"unknown generator settings {unknown}", "$.generator")
    kind = block.get("kind", "urban_course")
    if kind != "urban_course":
        raise InvalidValueError(f"unknown generator kind {kind!r}", "$.generator.kind")
    arguments = {key: value for key, value in block.items() if key != "kind"}
    try:
        return generate_urban_course(**arguments)
    except InvalidArgumentError as error:
        raise InvalidValueError(str(error), "$.generator") from error
