##################################################################################################
#                                     COMMAND-LINE INTERFACE                                     #
#                                                                                                #
# Argument parsing, logging setup and dispatch of the plan, simulate, compare, export and        #
# generate subcommands. Library errors are reported as "[ERROR] ..." and mapped to exit codes:   #
# 0 success, 1 usage error, 2 data or validation error, 3 non-convergence.                       #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

from planning.planner import PolicyKind
from utils.errors import EXIT_DATA, SbgError, UsageError
from utils.log import configure_logging, get_logger
from utils.paths import bundled_fixtures, fixture_path

logger = get_logger(__name__)

SUBCOMMANDS = ("plan", "simulate", "compare", "export", "generate")

##################################################################################################
#                                       RUN CONFIGURATION                                        #
##################################################################################################

@dataclass(frozen=True)
class RunConfig:
    """
    Parsed command line.

    Attributes:
        subcommand (str): One of plan, simulate, compare, export, generate.
        scenario (str | None): Scenario path or bundled fixture name.
        policies (tuple[PolicyKind, ...]): Selected planners.
        trials (int): Trials per policy.
        seed (int): Seed of the first trial (generator seed for generate).
        out (str): Output directory.
        dot (bool): Also write graph.dot when planning.
        plot (bool): Also write time_breakdown.png when comparing.
        tol (float | None): Value-iteration tolerance override.
        jobs (int): Worker threads.
        verbosity (int): 1 verbose, 0 normal, -1 quiet.
        generator (dict): Urban-course arguments of the generate subcommand.
    """

    subcommand: str
    scenario: Optional[str] = None
    policies: tuple = (PolicyKind.SBG,)
    trials: int = 20
    seed: int = 0
    out: str = "outputs"
    dot: bool = False
    plot: bool = False
    tol: Optional[float] = None
    jobs: int = 1
    verbosity: int = 0
    generator: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand '{self.subcommand}'")
        if self.trials < 1:
            raise UsageError(f"--trials must be at least 1, got {self.trials}")
        if self.jobs < 1:
            raise UsageError(f"--jobs must be at least 1, got {self.jobs}")
        if self.tol is not None and not self.tol > 0.0:
            raise UsageError(f"--tol must be positive, got {self.tol}")
        if self.subcommand != "generate" and not self.scenario:
            raise UsageError(f"{self.subcommand} needs a scenario (path or one of {bundled_fixtures()})")

##################################################################################################
#                                             PARSER                                             #
##################################################################################################

class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def parse_policies(text: str) -> tuple:
    if text.strip().lower() == "all":
        return tuple(PolicyKind)
    kinds = []
    for part in text.split(","):
        try:
            kind = PolicyKind.parse(part)
        except SbgError as error:
            raise argparse.ArgumentTypeError(str(error)) from None
        if kind not in kinds:
            kinds.append(kind)
    return tuple(kinds)


def _add_common(parser: argparse.ArgumentParser, policies_default: str, trials: bool) -> None:
    parser.add_argument("scenario_arg", nargs="?", metavar="SCENARIO", help="scenario path or bundled fixture name")
    parser.add_argument("--scenario", dest="scenario_opt", metavar="PATH", help="scenario path or bundled fixture name")
    parser.add_argument("--policies", "--policy", dest="policies", type=parse_policies, default=parse_policies(policies_default),
                        help="comma-separated list of sbg, conservative, optimistic, or 'all'")
    parser.add_argument("--out", default="outputs", help="output directory (default: outputs)")
    parser.add_argument("--tol", type=float, default=None, help="value-iteration tolerance in seconds")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads (results do not depend on it)")
    if trials:
        parser.add_argument("--trials", type=int, default=20, help="trials per policy (default: 20)")
        parser.add_argument("--seed", type=int, default=0, help="seed of the first trial (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semantic_belief_graph", description="Semantic Belief Graph planner and simulator.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    commands = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    plan = commands.add_parser("plan", help="solve a scenario and write values.csv and policy.csv")
    _add_common(plan, "sbg", trials=False)
    plan.add_argument("--dot", action="store_true", help="also write graph.dot")

    simulate = commands.add_parser("simulate", help="run seeded trials of one policy")
    _add_common(simulate, "sbg", trials=True)

    compare = commands.add_parser("compare", help="compare policies on common seeds")
    _add_common(compare, "all", trials=True)
    compare.add_argument("--plot", action="store_true", help="also write time_breakdown.png")

    export = commands.add_parser("export", help="write the planned graph as graph.dot")
    _add_common(export, "sbg", trials=False)

    generate = commands.add_parser("generate", help="write an urban-course scenario document")
    generate.add_argument("--out", default="outputs", help="output directory (default: outputs)")
    generate.add_argument("--name", default="urban_course", help="scenario name and file stem")
    generate.add_argument("--segments", type=int, default=27)
    generate.add_argument("--total-length", type=float, default=300.0)
    generate.add_argument("--stair-fraction", type=float, default=0.2)
    generate.add_argument("--rubble-fraction", type=float, default=0.2)
    generate.add_argument("--ig-cost", type=float, default=5.0)
    generate.add_argument("--seed", type=int, default=7, help="generator seed (default: 7)")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse a command line into a RunConfig; raises UsageError on any problem."""
    args = build_parser().parse_args(argv)
    if args.subcommand is None:
        raise UsageError(f"a subcommand is required: {', '.join(SUBCOMMANDS)}")
    verbosity = 1 if args.verbose else (-1 if args.quiet else 0)

    if args.subcommand == "generate":
        generator = {
            "segments": args.segments,
            "total_length": args.total_length,
            "stair_fraction": args.stair_fraction,
            "rubble_fraction": args.rubble_fraction,
            "ig_cost": args.ig_cost,
            "seed": args.seed,
            "name": args.name,
        }
        return RunConfig("generate", seed=args.seed, out=args.out, verbosity=verbosity, generator=generator)

    if args.scenario_arg and args.scenario_opt and args.scenario_arg != args.scenario_opt:
        raise UsageError("give the scenario either positionally or with --scenario, not both")
    return RunConfig(
        subcommand=args.subcommand,
        scenario=args.scenario_opt or args.scenario_arg,
        policies=args.policies,
        trials=getattr(args, "trials", 20),
        seed=getattr(args, "seed", 0),
        out=args.out,
        dot=getattr(args, "dot", False),
        plot=getattr(args, "plot", False),
        tol=args.tol,
        jobs=args.jobs,
        verbosity=verbosity,
    )


def resolve_scenario(name: str) -> str:
    """Existing paths win; otherwise a bundled fixture of that name; otherwise the name unchanged."""
    if os.path.exists(name):
        return name
    candidate = fixture_path(name)
    if os.path.exists(candidate):
        return candidate
    return name

##################################################################################################
#                                            DISPATCH                                            #
##################################################################################################

def run(config: RunConfig) -> int:
    from cli.compare_command import cmd_compare, cmd_simulate
    from cli.generate_command import cmd_generate
    from cli.plan_command import cmd_export, cmd_plan

    handlers = {
        "plan": cmd_plan,
        "simulate": cmd_simulate,
        "compare": cmd_compare,
        "export": cmd_export,
        "generate": cmd_generate,
    }
    return handlers[config.subcommand](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the command-line tool.

    Args:
        argv (Sequence[str] | None): Arguments without the program name (sys.argv[1:] when None).

    Returns:
        int: Process exit status.
    """

    configure_logging(0)
    try:
        config = parse_args(argv)
        configure_logging(config.verbosity)
        return run(config)
    except SbgError as error:
        logger.error(str(error))
        return error.exit_code
    except OSError as error:
        logger.error(f"cannot write output: {error}")
        return EXIT_DATA
