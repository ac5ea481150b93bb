##################################################################################################
#                                         ERRORS MODULE                                          #
#                                                                                                #
# Exception hierarchy shared by every package of the Semantic Belief Graph project.              #
#                                                                                                #
# Key Features:                                                                                  #
# - A single root (SbgError) so the launcher can map any failure to an exit code                 #
# - Scenario errors carry the JSON location of the offending block                               #
# - Non-convergence carries the last Bellman residual                                            #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

##################################################################################################
#                                           EXIT CODES                                           #
##################################################################################################

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NON_CONVERGENCE = 3

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

class SbgError(Exception):
    """Root of every error raised by the library."""

    exit_code = EXIT_DATA


class InvalidArgumentError(SbgError, ValueError):
    """An operation was called outside its precondition."""


class ContradictionError(SbgError, ValueError):
    """A Bayes update received an observation impossible under the prior."""


class ContractViolationError(SbgError, RuntimeError):
    """The simulator reached a node for which the policy defines no action."""


class NonConvergenceError(SbgError, RuntimeError):
    """
    Value iteration did not reach the requested tolerance.

    Attributes:
        residual (float): Max-norm change of the last sweep, in seconds.
        iterations (int): Number of sweeps performed.
    """

    exit_code = EXIT_NON_CONVERGENCE

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"value iteration did not converge after {iterations} sweeps (residual {residual:.3e} s)"
        )
        self.residual = residual
        self.iterations = iterations


class UsageError(SbgError):
    """Invalid command line."""

    exit_code = EXIT_USAGE


class ScenarioError(SbgError, ValueError):
    """
    Problem found while loading a scenario document.

    Attributes:
        location (str): JSON path into the document (e.g. "$.cost.nav_cost[1]"), or the file path.
    """

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.detail = message


class ScenarioParseError(ScenarioError):
    """Unreadable file, malformed JSON or unsupported schema tag."""


class UnknownClassError(ScenarioError):
    """A terrain class name that is not part of the scenario's class set."""


class DimensionMismatchError(ScenarioError):
    """A table or vector whose shape does not match the class set."""


class InvalidValueError(ScenarioError):
    """A value outside its allowed range (negative cost, bad probability, bad length)."""


class UnreachableGoalError(ScenarioError):
    """The goal vertex cannot be reached from the start vertex in the roadmap."""
