##################################################################################################
#                                       OBSERVATION MODULE                                       #
#                                                                                                #
# Noisy semantic observation model used by the simulator and, through likelihood rows,           #
# by the categorical Bayes update.                                                               #
#                                                                                                #
# Key Features:                                                                                  #
# - Classification accuracy that decays linearly with distance, clamped to a floor               #
# - Symmetric confusion: missed mass spread uniformly over the other classes                     #
# - High-accuracy information-gathering scans (effective distance 0, ig_accuracy)                #
# - Sampling from caller-owned numpy generators only (no global random state)                    #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.belief import ClassSet, TerrainClass
from utils.errors import InvalidArgumentError

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

@dataclass(frozen=True)
class ObservationModel:
    """
    Distance-dependent semantic classifier.

    Attributes:
        accuracy_at_zero (float): Probability of a correct label at distance 0.
        accuracy_floor (float): Lower clamp of the accuracy (chance level by default, 1/4 for 4 classes).
        falloff_rate (float): Accuracy lost per meter of distance.
        ig_accuracy (float): Accuracy of an information-gathering scan.
    """

    accuracy_at_zero: float = 0.95
    accuracy_floor: float = 0.25
    falloff_rate: float = 0.05
    ig_accuracy: float = 0.99

    def __post_init__(self):
        if not 0.0 <= self.accuracy_floor <= self.accuracy_at_zero <= 1.0:
            raise InvalidArgumentError(
                f"need 0 <= accuracy_floor ({self.accuracy_floor}) <= accuracy_at_zero "
                f"({self.accuracy_at_zero}) <= 1"
            )
        if not self.accuracy_at_zero <= self.ig_accuracy <= 1.0:
            raise InvalidArgumentError(
                f"ig_accuracy ({self.ig_accuracy}) must lie between accuracy_at_zero and 1"
            )
        if self.falloff_rate < 0.0:
            raise InvalidArgumentError(f"falloff_rate must be non-negative, got {self.falloff_rate}")

    @classmethod
    def for_classes(cls, class_set: ClassSet, **overrides) -> "ObservationModel":
        """Model whose default floor is chance level for the given class set."""
        overrides.setdefault("accuracy_floor", 1.0 / len(class_set))
        return cls(**overrides)


def accuracy(model: ObservationModel, distance: float) -> float:
    """
    Probability of a correct label at the given distance.

    Args:
        model (ObservationModel): Classifier parameters.
        distance (float): Distance to the observed terrain, in meters.

    Returns:
        float: clamp(accuracy_at_zero - falloff_rate * distance, accuracy_floor, accuracy_at_zero).
    """

    if distance < 0.0:
        raise InvalidArgumentError(f"distance must be non-negative, got {distance}")
    raw = model.accuracy_at_zero - model.falloff_rate * distance
    return float(min(max(raw, model.accuracy_floor), model.accuracy_at_zero))


def confusion_row(correct: float, observed_index: int, class_count: int) -> np.ndarray:
    """
    Likelihood row p(z = observed | true = i) for a symmetric confusion model.

    Args:
        correct (float): Accuracy of the classifier for this observation.
        observed_index (int): Index of the observed label.
        class_count (int): Number of classes (unknown included).

    Returns:
        np.ndarray: `correct` at the observed index, (1 - correct)/(class_count - 1) elsewhere.
    """

    if class_count < 2:
        raise InvalidArgumentError(f"class_count must be at least 2, got {class_count}")
    if not 0 <= observed_index < class_count:
        raise InvalidArgumentError(f"observed index {observed_index} outside 0..{class_count - 1}")
    if not 0.0 <= correct <= 1.0:
        raise InvalidArgumentError(f"accuracy must lie in [0, 1], got {correct}")
    row = np.full(class_count, (1.0 - correct) / (class_count - 1))
    row[observed_index] = correct
    return row


def likelihood_row(
    model: ObservationModel,
    observed: TerrainClass,
    distance: float,
    class_count: int,
    *,
    scan: bool = False,
) -> np.ndarray:
    """
    Convert one observed label into a likelihood row for bayes_update.

    Args:
        model (ObservationModel): Classifier parameters.
        observed (TerrainClass): Label returned by the classifier.
        distance (float): Observation distance in meters (ignored for scans).
        class_count (int): Number of classes (unknown included).
        scan (bool): Use the information-gathering accuracy instead of the passive one.

    Returns:
        np.ndarray: Row of class_count likelihoods.
    """

    correct = model.ig_accuracy if scan else accuracy(model, distance)
    return confusion_row(correct, observed.index, class_count)


def sample_observation(
    model: ObservationModel,
    true_class: TerrainClass,
    distance: float,
    rng: np.random.Generator,
    class_set: ClassSet,
    *,
    scan: bool = False,
) -> TerrainClass:
    """
    Draw one classifier output for the true terrain.

    The true class is returned with probability accuracy(distance) (ig_accuracy for scans),
    otherwise one of the other classes is picked uniformly.

    Args:
        model (ObservationModel): Classifier parameters.
        true_class (TerrainClass): Ground-truth class of the observed terrain.
        distance (float): Observation distance in meters.
        rng (np.random.Generator): Caller-owned generator.
        class_set (ClassSet): Class set the labels are drawn from.
        scan (bool): Information-gathering scan instead of a passive observation.

    Returns:
        TerrainClass: Observed label.
    """

    if true_class not in class_set:
        raise InvalidArgumentError(f"{true_class!r} is not part of {class_set!r}")
    correct = model.ig_accuracy if scan else accuracy(model, distance)
    if rng.random() < correct or len(class_set) == 1:
        return true_class
    other = int(rng.integers(len(class_set) - 1))
    if other >= true_class.index:
        other += 1
    return class_set[other]
