##################################################################################################
#                                 COMPARE AND SIMULATE COMMANDS                                  #
#                                                                                                #
# Seeded closed-loop experiments: trials.csv and summary.csv for every run, plus a Markdown      #
# report and an optional time-breakdown chart for policy comparisons.                            #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import os

from cli.main import RunConfig, resolve_scenario
from cli.report import (
    format_summary_table,
    plot_time_breakdown,
    write_markdown_report,
    write_summary_csv,
    write_trials_csv,
)
from scenarios.scenario import load_scenario
from simulation.simulator import run_experiment
from utils.errors import EXIT_OK
from utils.log import get_logger
from utils.paths import ensure_output_dir

logger = get_logger(__name__)

##################################################################################################
#                                         IMPLEMENTATION                                         #
##################################################################################################

def _experiment(config: RunConfig, policies):
    scenario = load_scenario(resolve_scenario(config.scenario))
    scenario = scenario.with_planner(tol=config.tol, jobs=config.jobs)
    summaries = run_experiment(scenario, policies, config.trials, config.seed, config.jobs)
    out = ensure_output_dir(config.out)
    write_trials_csv(os.path.join(out, "trials.csv"), summaries)
    write_summary_csv(os.path.join(out, "summary.csv"), summaries)
    print(format_summary_table(summaries), end="")
    return scenario, summaries, out


def cmd_simulate(config: RunConfig) -> int:
    """Run seeded trials of a single policy."""
    _experiment(config, config.policies[:1])
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    """
    Compare the selected policies on common seeds.

    Writes trials.csv, summary.csv and report.md (and time_breakdown.png with --plot) and prints
    the comparison table on standard output.

    Args:
        config (RunConfig): Parsed command line.

    Returns:
        int: Exit status.
    """

    scenario, summaries, out = _experiment(config, config.policies)
    write_markdown_report(os.path.join(out, "report.md"), scenario, summaries, config.trials, config.seed)
    if config.plot:
        plot_time_breakdown(os.path.join(out, "time_breakdown.png"), summaries)
    return EXIT_OK
