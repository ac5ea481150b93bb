##################################################################################################
#                                          PATHS MODULE                                          #
#                                                                                                #
# Provides utility functions shared across the Semantic Belief Graph project.                    #
# Currently includes helpers for locating bundled scenario fixtures and output folders.          #
#                                                                                                #
# Key Features:                                                                                  #
# - Stable resolution of file paths relative to project root                                     #
# - Lookup of bundled scenarios by name (e.g. "small_two_level")                                 #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

import os

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

FIXTURE_DIR = os.path.join("scenarios", "data")


def resource_path(relative_path):
    """
    Join a project-relative path onto the repository root.

    The root is two directories above this module, so bundled scenarios load the same way
    whatever the working directory of the command line or the test run is.

    Args:
        relative_path (str): Relative path to the file (e.g., "scenarios/data/small_two_level.json").

    Returns:
        str: Absolute file path pointing to the requested resource.
    """

    base_path = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(base_path, relative_path)


def fixture_path(name):
    """
    Absolute path of a bundled scenario fixture.

    Args:
        name (str): Fixture name with or without the ".json" suffix.

    Returns:
        str: Path under scenarios/data/ (the file may not exist).
    """

    if not name.endswith(".json"):
        name = f"{name}.json"
    return resource_path(os.path.join(FIXTURE_DIR, name))


def bundled_fixtures():
    """Sorted names of the bundled scenario fixtures."""

    folder = resource_path(FIXTURE_DIR)
    if not os.path.isdir(folder):
        return []
    return sorted(entry[:-5] for entry in os.listdir(folder) if entry.endswith(".json"))


def ensure_output_dir(path):
    """
    Create the output directory if needed and return its absolute path.

    Args:
        path (str): Directory requested on the command line.

    Returns:
        str: Absolute directory path.
    """

    path = os.path.abspath(path)
    os.makedirs(path, exist_ok=True)
    return path
