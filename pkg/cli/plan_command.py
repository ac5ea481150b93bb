##################################################################################################
#                                    PLAN AND EXPORT COMMANDS                                    #
#                                                                                                #
# Offline planning entry points: solve a scenario and write the value and policy tables,         #
# or export the planned graph in Graphviz DOT format.                                            #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import os

from cli.main import RunConfig, resolve_scenario
from cli.report import write_policy_csv, write_values_csv
from planning.graph import export_dot
from planning.planner import solve
from scenarios.scenario import load_scenario
from utils.errors import EXIT_OK
from utils.log import get_logger
from utils.paths import ensure_output_dir

logger = get_logger(__name__)

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

def _planned(config: RunConfig):
    scenario = load_scenario(resolve_scenario(config.scenario))
    scenario = scenario.with_planner(tol=config.tol, jobs=config.jobs)
    sbg = scenario.expanded_graph()
    kind = config.policies[0]
    if len(config.policies) > 1:
        logger.warning(f"{config.subcommand} uses one policy, continuing with '{kind.value}'")
    table, policy = solve(sbg, scenario.cost_model, scenario.goal, kind, scenario.planner)
    logger.info(f"Planned {kind.value} policy on {len(sbg)} nodes in {table.iterations} sweeps")
    return scenario, sbg, table, policy


def _write_dot(path: str, sbg, policy) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(export_dot(sbg, policy))
    logger.info(f"Wrote {path}")
    return path


def cmd_plan(config: RunConfig) -> int:
    """
    Plan a scenario and write values.csv, policy.csv and optionally graph.dot.

    Prints the expected cost-to-go of the start node on standard output.

    Args:
        config (RunConfig): Parsed command line.

    Returns:
        int: Exit status.
    """

    scenario, sbg, table, policy = _planned(config)
    out = ensure_output_dir(config.out)
    write_values_csv(os.path.join(out, "values.csv"), sbg, table)
    write_policy_csv(os.path.join(out, "policy.csv"), sbg, scenario.cost_model, table, policy, scenario.planner.confidence)
    if config.dot:
        _write_dot(os.path.join(out, "graph.dot"), sbg, policy)
    print(f"J({scenario.start}) = {table[scenario.start]:.6f} s")
    return EXIT_OK


def cmd_export(config: RunConfig) -> int:
    """Write graph.dot with the selected policy highlighted."""
    _, sbg, _, policy = _planned(config)
    out = ensure_output_dir(config.out)
    _write_dot(os.path.join(out, "graph.dot"), sbg, policy)
    return EXIT_OK
