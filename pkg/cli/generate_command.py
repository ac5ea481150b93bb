##################################################################################################
#                                        GENERATE COMMAND                                        #
#                                                                                                #
# Writes a procedurally generated urban-course scenario as a full scenario document.             #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import os

from cli.main import RunConfig
from scenarios.scenario import dump_scenario
from scenarios.urban_course import generate_urban_course
from utils.errors import EXIT_OK
from utils.log import get_logger
from utils.paths import ensure_output_dir

logger = get_logger(__name__)

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

def cmd_generate(config: RunConfig) -> int:
    scenario = generate_urban_course(**config.generator)
    out = ensure_output_dir(config.out)
    path = os.path.join(out, f"{scenario.name}.json")
    dump_scenario(scenario, path)
    logger.info(f"Wrote {path}")
    return EXIT_OK
