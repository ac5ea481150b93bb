##################################################################################################
#                                          COST MODULE                                           #
#                                                                                                #
# Traversal-time cost model of the Semantic Belief Graph.                                        #
#                                                                                                #
# Key Features:                                                                                  #
# - Controller x true terrain time-per-meter table, unsafe pairs as a large finite penalty       #
# - Default table for the flat_ground / stair / rubble controller family                         #
# - Expected edge cost over a semantic belief, ground-truth cost for the simulator               #
# - Constant information-gathering action cost                                                   #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from core.belief import ClassSet, SemanticBelief, TerrainClass
from utils.errors import InvalidArgumentError

##################################################################################################
#                                           CONSTANTS                                            #
##################################################################################################

UNSAFE = "unsafe"
DEFAULT_UNSAFE_COST = 1.0e4
DEFAULT_IG_COST = 5.0

# seconds per meter, rows = controller, columns = true terrain
DEFAULT_TABLE = {
    "flat_ground": {"flat_ground": 1.0, "stair": UNSAFE, "rubble": UNSAFE},
    "stair": {"flat_ground": 2.0, "stair": 2.0, "rubble": 6.0},
    "rubble": {"flat_ground": 3.0, "stair": UNSAFE, "rubble": 3.0},
}

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

@dataclass(frozen=True, eq=False)
class CostModel:
    """
    Traversal time model.

    Attributes:
        class_set (ClassSet): Classes of the scenario.
        nav_cost (np.ndarray): d_l x (d_l+1) table of seconds per meter, unsafe entries already
            replaced by unsafe_cost.
        ig_cost (float): Seconds per information-gathering action.
        unsafe_cost (float): Penalty in seconds per meter for unsafe controller/terrain pairs.
        unsafe_mask (np.ndarray): True where the table entry is the unsafe penalty.
    """

    class_set: ClassSet
    nav_cost: np.ndarray
    ig_cost: float = DEFAULT_IG_COST
    unsafe_cost: float = DEFAULT_UNSAFE_COST
    unsafe_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        table = np.array(self.nav_cost, dtype=float)
        named = len(self.class_set.named)
        if table.shape != (named, len(self.class_set)):
            raise InvalidArgumentError(
                f"nav_cost must be {named}x{len(self.class_set)}, got shape {table.shape}"
            )
        if not np.isfinite(self.unsafe_cost) or self.unsafe_cost <= 0.0:
            raise InvalidArgumentError(f"unsafe_cost must be positive and finite, got {self.unsafe_cost}")
        if not np.isfinite(self.ig_cost) or self.ig_cost < 0.0:
            raise InvalidArgumentError(f"ig_cost must be non-negative and finite, got {self.ig_cost}")
        if not np.all(np.isfinite(table)) or np.any(table <= 0.0):
            raise InvalidArgumentError("nav_cost entries must be positive and finite")
        for m in range(named):
            if np.any(table[m, m] > table[m, :]):
                raise InvalidArgumentError(
                    f"controller '{self.class_set[m].name}' is slower on its own terrain than on another"
                )
        mask = np.zeros(table.shape, dtype=bool) if self.unsafe_mask is None else np.array(self.unsafe_mask, dtype=bool)
        if mask.shape != table.shape:
            raise InvalidArgumentError("unsafe_mask must match the nav_cost table")
        table.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "nav_cost", table)
        object.__setattr__(self, "unsafe_mask", mask)

    @classmethod
    def from_table(cls, class_set: ClassSet, rows, ig_cost=DEFAULT_IG_COST, unsafe_cost=DEFAULT_UNSAFE_COST):
        """
        Build a model from rows that may contain the string "unsafe".

        Args:
            class_set (ClassSet): Classes of the scenario.
            rows (list[list[float | str]]): One row per named controller, one column per class.
            ig_cost (float): Seconds per information-gathering action.
            unsafe_cost (float): Penalty used for "unsafe" entries.

        Returns:
            CostModel: Validated model.
        """

        values = []
        mask = []
        for row in rows:
            values.append([unsafe_cost if entry == UNSAFE else float(entry) for entry in row])
            mask.append([entry == UNSAFE for entry in row])
        return cls(class_set, np.array(values, dtype=float), float(ig_cost), float(unsafe_cost), np.array(mask, dtype=bool))

    def table_rows(self):
        """Rows with unsafe entries written back as "unsafe" (serialization form)."""
        return [
            [UNSAFE if self.unsafe_mask[m, n] else float(self.nav_cost[m, n]) for n in range(self.nav_cost.shape[1])]
            for m in range(self.nav_cost.shape[0])
        ]

    def is_unsafe(self, controller: TerrainClass, true_class: TerrainClass) -> bool:
        return bool(self.unsafe_mask[controller.index, true_class.index])


def default_cost_model(class_set: ClassSet, ig_cost=DEFAULT_IG_COST, unsafe_cost=DEFAULT_UNSAFE_COST) -> CostModel:
    """
    Default flat_ground / stair / rubble table; the unknown column holds each controller's worst entry.

    Args:
        class_set (ClassSet): Must name exactly flat_ground, stair and rubble (plus unknown).
        ig_cost (float): Seconds per information-gathering action.
        unsafe_cost (float): Penalty for unsafe pairs.

    Returns:
        CostModel: The default model.
    """

    names = [cls.name for cls in class_set.named]
    if sorted(names) != sorted(DEFAULT_TABLE):
        raise InvalidArgumentError(f"default cost table covers {sorted(DEFAULT_TABLE)}, got {names}")
    rows = []
    for controller in names:
        entries = [DEFAULT_TABLE[controller][terrain] for terrain in names]
        numeric = [unsafe_cost if entry == UNSAFE else entry for entry in entries]
        worst = entries[int(np.argmax(numeric))]
        rows.append(entries + [worst])
    return CostModel.from_table(class_set, rows, ig_cost, unsafe_cost)


def _check_controller(model: CostModel, controller: TerrainClass) -> None:
    if controller.is_unknown or controller not in model.class_set:
        raise InvalidArgumentError(f"'{controller}' is not a controllable terrain class")


def _check_length(length: float) -> None:
    if not length > 0.0:
        raise InvalidArgumentError(f"edge length must be positive, got {length}")


def expected_nav_cost(model: CostModel, belief: SemanticBelief, controller: TerrainClass, length: float) -> float:
    """
    Expected traversal time of a controller over a semantic belief.

    Args:
        model (CostModel): Cost table.
        belief (SemanticBelief): Belief over the terrain being traversed.
        controller (TerrainClass): Named class whose controller is used.
        length (float): Edge length in meters.

    Returns:
        float: length * sum_m belief[m] * nav_cost[controller][m], in seconds.
    """

    _check_controller(model, controller)
    _check_length(length)
    return float(length * np.dot(belief.probs, model.nav_cost[controller.index]))


def true_nav_cost(model: CostModel, true_class: TerrainClass, controller: TerrainClass, length: float) -> float:
    """Ground-truth traversal time charged by the simulator: length * nav_cost[controller][true_class]."""

    _check_controller(model, controller)
    _check_length(length)
    return float(length * model.nav_cost[controller.index, true_class.index])


def matched_nav_cost(model: CostModel, terrain: TerrainClass, length: float) -> float:
    """Traversal time when the controller matches the terrain."""
    return true_nav_cost(model, terrain, terrain, length)


def ig_action_cost(model: CostModel, node=None) -> float:
    """Seconds charged for one information-gathering action (constant per action)."""
    return float(model.ig_cost)


def most_expensive_class(model: CostModel) -> TerrainClass:
    """Named class with the highest matched per-meter cost (lowest index on ties)."""
    diagonal = [model.nav_cost[m, m] for m in range(len(model.class_set.named))]
    return model.class_set[int(np.argmax(diagonal))]


def worst_case_cost(model: CostModel, controller: TerrainClass, length: float) -> float:
    """Largest possible traversal time of a controller on an edge (used for planner sentinels)."""
    return float(length * np.max(model.nav_cost[controller.index]))
