##################################################################################################
#                                         LOGGING MODULE                                         #
#                                                                                                #
# Logging setup for the command-line tools and the library packages.                             #
# Keeps the bracketed level tags ("[INFO] ...") used for console messages across the project.    #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

import logging
import sys

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

LOG_FORMAT = "[%(levelname)s] %(message)s"
ROOT_LOGGER = "sbg"


def get_logger(name):
    """
    Return a child of the project logger for the given module name.

    Args:
        name (str): Usually the caller's __name__.

    Returns:
        logging.Logger: Logger that propagates to the project root logger.
    """

    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def configure_logging(verbosity=0, stream=None):
    """
    Attach a single stderr handler to the project root logger.

    Args:
        verbosity (int): 0 for INFO, positive for DEBUG, negative for WARNING.
        stream: Optional text stream (defaults to sys.stderr).

    Returns:
        logging.Logger: The configured project root logger.
    """

    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        level = logging.INFO

    root = logging.getLogger(ROOT_LOGGER)
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.propagate = False
    return root
