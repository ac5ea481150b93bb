##################################################################################################
#                                         BELIEF MODULE                                          #
#                                                                                                #
# Semantic and geometric belief types used by every node of the Semantic Belief Graph.           #
#                                                                                                #
# Key Features:                                                                                  #
# - Terrain class sets with a reserved trailing "unknown" class                                  #
# - Immutable categorical semantic beliefs (numpy backed, renormalized on construction)          #
# - Gaussian geometric beliefs (mean + covariance), stored and validated, never filtered         #
# - Uniform / unknown priors, categorical Bayes update, argmax and confidence tests              #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from utils.errors import ContradictionError, InvalidArgumentError

##################################################################################################
#                                           CONSTANTS                                            #
##################################################################################################

UNKNOWN = "unknown"
SUM_TOLERANCE = 1e-9
RENORMALIZE_LIMIT = 1e-6
COVARIANCE_TOLERANCE = 1e-9

##################################################################################################
#                                        TERRAIN CLASSES                                         #
##################################################################################################

@dataclass(frozen=True, order=True)
class TerrainClass:
    """
    One terrain label of a class set.

    Attributes:
        index (int): Dense position in the class set (the unknown class is always last).
        name (str): Identifier such as "flat_ground", "stair" or "rubble".
    """

    index: int
    name: str

    @property
    def is_unknown(self) -> bool:
        return self.name == UNKNOWN

    def __str__(self) -> str:
        return self.name


class ClassSet:
    """
    Ordered, fixed set of terrain classes: d_l named classes followed by "unknown".

    Attributes:
        classes (tuple[TerrainClass, ...]): All classes, unknown last.
    """

    __slots__ = ("classes", "_by_name")

    def __init__(self, classes: Sequence[TerrainClass]):
        classes = tuple(classes)
        if not classes:
            raise InvalidArgumentError("class set must not be empty")
        for position, cls in enumerate(classes):
            if cls.index != position:
                raise InvalidArgumentError(f"class indices must be dense, got {cls.index} at position {position}")
        names = [cls.name for cls in classes]
        if len(set(names)) != len(names):
            raise InvalidArgumentError(f"duplicate class names in {names}")
        if names.count(UNKNOWN) != 1 or names[-1] != UNKNOWN:
            raise InvalidArgumentError("class set must contain 'unknown' exactly once, as the last class")
        self.classes = classes
        self._by_name = {cls.name: cls for cls in classes}

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "ClassSet":
        """
        Build a class set from named classes; "unknown" is appended when missing.

        Args:
            names (Iterable[str]): Named terrain classes, optionally ending with "unknown".

        Returns:
            ClassSet: Dense class set with unknown last.
        """

        names = list(names)
        if not names or names[-1] != UNKNOWN:
            names.append(UNKNOWN)
        return cls([TerrainClass(i, name) for i, name in enumerate(names)])

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __getitem__(self, index: int) -> TerrainClass:
        return self.classes[index]

    def __contains__(self, item) -> bool:
        return isinstance(item, TerrainClass) and self._by_name.get(item.name) == item

    def __eq__(self, other) -> bool:
        return isinstance(other, ClassSet) and self.classes == other.classes

    def __hash__(self) -> int:
        return hash(self.classes)

    def __repr__(self) -> str:
        return f"ClassSet({[cls.name for cls in self.classes]})"

    @property
    def named(self) -> tuple[TerrainClass, ...]:
        """Named (controllable) classes, i.e. everything except unknown."""
        return self.classes[:-1]

    @property
    def unknown(self) -> TerrainClass:
        return self.classes[-1]

    @property
    def names(self) -> list[str]:
        return [cls.name for cls in self.classes]

    def by_name(self, name: str) -> TerrainClass:
        try:
            return self._by_name[name]
        except KeyError:
            raise InvalidArgumentError(f"unknown terrain class name '{name}'") from None

##################################################################################################
#                                        SEMANTIC BELIEF                                         #
##################################################################################################

class SemanticBelief:
    """
    Categorical distribution over a class set (named classes plus unknown).

    Inputs whose sum deviates from 1 by at most 1e-6 are renormalized, worse inputs are rejected.
    The probability vector is read-only.

    Attributes:
        class_set (ClassSet): Classes the entries refer to.
        probs (np.ndarray): Read-only vector of len(class_set) probabilities.
    """

    __slots__ = ("class_set", "probs")

    def __init__(self, class_set: ClassSet, probs):
        values = np.array(probs, dtype=float).reshape(-1)
        if values.shape[0] != len(class_set):
            raise InvalidArgumentError(
                f"belief has {values.shape[0]} entries but the class set has {len(class_set)}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("belief entries must be finite")
        if np.any(values < -SUM_TOLERANCE):
            raise InvalidArgumentError(f"belief entries must be non-negative, got {values.tolist()}")
        values = np.clip(values, 0.0, None)
        total = float(values.sum())
        if abs(total - 1.0) > RENORMALIZE_LIMIT:
            raise InvalidArgumentError(f"belief entries sum to {total}, expected 1")
        if abs(total - 1.0) > 1e-12:
            values = values / total
        values.setflags(write=False)
        self.class_set = class_set
        self.probs = values

    @classmethod
    def dirac(cls, class_set: ClassSet, terrain: TerrainClass) -> "SemanticBelief":
        """Point mass on one class."""
        probs = np.zeros(len(class_set))
        probs[terrain.index] = 1.0
        return cls(class_set, probs)

    @classmethod
    def concentrated(
        cls,
        class_set: ClassSet,
        terrain: TerrainClass,
        mass: float,
        support: Optional[Iterable[int]] = None,
    ) -> "SemanticBelief":
        """
        Belief with `mass` on one class and the residual spread uniformly over the others.

        Args:
            class_set (ClassSet): Class set of the belief.
            terrain (TerrainClass): Class receiving the concentrated mass.
            mass (float): Probability in (0, 1].
            support (Iterable[int] | None): Class indices allowed to receive the residual
                (every other class when None).

        Returns:
            SemanticBelief: The concentrated belief (a Dirac when mass is 1 or no other class
            may receive the residual).
        """

        if not 0.0 < mass <= 1.0:
            raise InvalidArgumentError(f"concentrated mass must lie in (0, 1], got {mass}")
        candidates = range(len(class_set)) if support is None else support
        others = sorted({int(i) for i in candidates if int(i) != terrain.index})
        if mass == 1.0 or not others:
            return cls.dirac(class_set, terrain)
        probs = np.zeros(len(class_set))
        probs[others] = (1.0 - mass) / len(others)
        probs[terrain.index] = mass
        return cls(class_set, probs)

    def __len__(self) -> int:
        return self.probs.shape[0]

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SemanticBelief)
            and self.class_set == other.class_set
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self) -> int:
        return hash((self.class_set, self.probs.tobytes()))

    def __repr__(self) -> str:
        entries = ", ".join(f"{cls.name}={p:.3f}" for cls, p in zip(self.class_set, self.probs))
        return f"SemanticBelief({entries})"

    def of(self, terrain: TerrainClass) -> float:
        """Probability assigned to a class."""
        return float(self.probs[terrain.index])

    def is_dirac(self) -> bool:
        return bool(np.max(self.probs) == 1.0)

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        positive = self.probs[self.probs > 0.0]
        return float(-np.sum(positive * np.log(positive)))

    def to_dict(self) -> dict[str, float]:
        return {cls.name: float(p) for cls, p in zip(self.class_set, self.probs)}

##################################################################################################
#                                        GEOMETRIC BELIEF                                        #
##################################################################################################

@dataclass(frozen=True, eq=False)
class GeometricBelief:
    """
    Gaussian belief over the robot position: mean (m) and covariance (m^2).

    The covariance must be symmetric and positive semi-definite. It is never propagated:
    the planner assumes accurate geometric localization.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        covariance = np.array(self.covariance, dtype=float)
        if mean.shape != (3,):
            raise InvalidArgumentError(f"mean must be a 3-vector, got shape {mean.shape}")
        if covariance.shape != (3, 3):
            raise InvalidArgumentError(f"covariance must be 3x3, got shape {covariance.shape}")
        if not np.all(np.isfinite(covariance)) or not np.all(np.isfinite(mean)):
            raise InvalidArgumentError("geometric belief must be finite")
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=COVARIANCE_TOLERANCE):
            raise InvalidArgumentError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(covariance)) < -COVARIANCE_TOLERANCE:
            raise InvalidArgumentError("covariance must be positive semi-definite")
        mean.setflags(write=False)
        covariance.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

    def distance_to(self, other: "GeometricBelief") -> float:
        """Euclidean distance between the two means, in meters."""
        return float(np.linalg.norm(self.mean - other.mean))


@dataclass(frozen=True, eq=False)
class GeoSemanticBelief:
    """Independent pair of geometric and semantic beliefs attached to an SBG node."""

    geometric: GeometricBelief
    semantic: SemanticBelief

    def with_semantic(self, semantic: SemanticBelief) -> "GeoSemanticBelief":
        return GeoSemanticBelief(self.geometric, semantic)

##################################################################################################
#                                             PRIORS                                             #
##################################################################################################

def uniform_prior(class_set) -> SemanticBelief:
    """
    Uninformed prior: equal mass on every class, unknown included.

    Args:
        class_set (ClassSet): Non-empty class set.

    Returns:
        SemanticBelief: All entries equal to 1/(d_l+1).
    """

    if class_set is None or len(class_set) == 0:
        raise InvalidArgumentError("uniform prior needs a non-empty class set")
    if not isinstance(class_set, ClassSet):
        class_set = ClassSet(class_set)
    count = len(class_set)
    return SemanticBelief(class_set, np.full(count, 1.0 / count))


def unknown_prior(class_set: ClassSet, unknown_mass: float = 1.0) -> SemanticBelief:
    """
    Prior placing `unknown_mass` on the unknown class and the rest uniformly on named classes.

    Args:
        class_set (ClassSet): Class set of the scenario.
        unknown_mass (float): Probability in (0, 1].

    Returns:
        SemanticBelief: The prior; named entries are 0 when unknown_mass is 1.
    """

    if not 0.0 < unknown_mass <= 1.0:
        raise InvalidArgumentError(f"unknown_mass must lie in (0, 1], got {unknown_mass}")
    named = len(class_set.named)
    probs = np.zeros(len(class_set))
    if named == 0:
        probs[-1] = 1.0
    else:
        probs[:-1] = (1.0 - unknown_mass) / named
        probs[-1] = unknown_mass
    return SemanticBelief(class_set, probs)

##################################################################################################
#                                          BAYES UPDATE                                          #
##################################################################################################

def bayes_update(prior: SemanticBelief, likelihood_row) -> SemanticBelief:
    """
    Categorical Bayes update: posterior[i] is proportional to prior[i] * likelihood_row[i].

    Args:
        prior (SemanticBelief): Belief before the observation.
        likelihood_row (array-like): p(z | true = class i) for every class, non-negative.

    Returns:
        SemanticBelief: Normalized posterior.

    Raises:
        ContradictionError: The observation has zero probability under the prior.
    """

    row = np.asarray(likelihood_row, dtype=float).reshape(-1)
    if row.shape[0] != len(prior):
        raise InvalidArgumentError(f"likelihood row has {row.shape[0]} entries, prior has {len(prior)}")
    if not np.all(np.isfinite(row)) or np.any(row < 0.0):
        raise InvalidArgumentError("likelihood row entries must be finite and non-negative")
    unnormalized = prior.probs * row
    total = float(unnormalized.sum())
    if total <= 0.0:
        raise ContradictionError("observation is impossible under the prior belief")
    return SemanticBelief(prior.class_set, unnormalized / total)

##################################################################################################
#                                       SUMMARY STATISTICS                                       #
##################################################################################################

def argmax_class(belief: SemanticBelief) -> tuple[TerrainClass, float]:
    """
    Most likely class and its probability; ties go to the lowest class index.

    Args:
        belief (SemanticBelief): Any valid belief.

    Returns:
        tuple[TerrainClass, float]: (class, probability).
    """

    index = int(np.argmax(belief.probs))
    return belief.class_set[index], float(belief.probs[index])


def argmax_named_class(belief: SemanticBelief) -> tuple[TerrainClass, float]:
    """Like argmax_class but restricted to named classes (unknown ignored)."""
    named = belief.probs[:-1]
    if named.shape[0] == 0:
        return belief.class_set.unknown, float(belief.probs[-1])
    index = int(np.argmax(named))
    return belief.class_set[index], float(named[index])


def is_confident(belief: SemanticBelief, threshold: float) -> bool:
    """
    True iff the largest named-class probability strictly exceeds `threshold`.

    Mass on the unknown class never counts as confidence.
    """

    if not 0.0 < threshold <= 1.0:
        raise InvalidArgumentError(f"confidence threshold must lie in (0, 1], got {threshold}")
    named = belief.probs[:-1]
    if named.shape[0] == 0:
        return False
    return bool(np.max(named) > threshold)
