##################################################################################################
#                                         REPORT WRITERS                                         #
#                                                                                                #
# CSV tables, Markdown report, time-breakdown chart and the standard-output summary table        #
# produced by the command-line tools. Every writer except the chart is byte-deterministic.       #
##################################################################################################

##################################################################################################
#                                            IMPORTS                                             #
##################################################################################################

from __future__ import annotations

import csv
from typing import Iterable, Mapping, Optional

from planning.graph import Sbg
from planning.planner import Policy, PolicyKind, ValueTable, bellman_backup, make_view
from simulation.simulator import RunSummary
from utils.log import get_logger

logger = get_logger(__name__)

VALUES_HEADER = ["node_id", "kind", "vertex", "value_s", "reachable"]
POLICY_HEADER = ["node_id", "action", "target", "controller", "length_m", "q_value_s"]
TRIALS_HEADER = [
    "seed", "policy", "traversal_time_s", "controller_correct", "controller_total", "ig_count", "reached_goal",
]
SUMMARY_HEADER = [
    "policy", "trials", "mean_time_s", "min_time_s", "max_time_s", "correct_controller_pct",
    "static_controller_accuracy_pct", "mean_ig_count", "matched_nav_time_s", "mismatched_nav_time_s",
    "ig_time_s", "goal_rate",
]
NOT_APPLICABLE = "n/a"

##################################################################################################
#                                           FORMATTING                                           #
##################################################################################################

def fmt_float(value: Optional[float]) -> str:
    """Fixed six-decimal rendering; None becomes "n/a"."""
    if value is None or value == float("inf"):
        return NOT_APPLICABLE
    return format(value, ".6f")


def fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _write_csv(path: str, header: list, rows: Iterable[list]) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")
    return path

##################################################################################################
#                                        PLANNING TABLES                                         #
##################################################################################################

def write_values_csv(path: str, sbg: Sbg, table: ValueTable) -> str:
    rows = []
    for node_id in sbg.node_ids():
        node = sbg.nodes[node_id]
        reachable = table.is_reachable(node_id)
        rows.append([
            node_id,
            node.kind.value,
            node.vertex,
            fmt_float(table[node_id] if reachable else None),
            fmt_bool(reachable),
        ])
    return _write_csv(path, VALUES_HEADER, rows)


def write_policy_csv(path: str, sbg: Sbg, cost, table: ValueTable, policy: Policy, confidence: float = 0.95) -> str:
    view = make_view(sbg, cost, policy.kind, confidence)
    rows = []
    for node_id in sorted(policy.actions):
        edge = policy.actions[node_id]
        q_value, _ = bellman_backup(sbg, cost, table, node_id, view)
        rows.append([
            node_id,
            edge.kind.value,
            edge.target,
            edge.controller.name if edge.is_navigate else "",
            fmt_float(edge.length) if edge.is_navigate else "",
            fmt_float(q_value),
        ])
    return _write_csv(path, POLICY_HEADER, rows)

##################################################################################################
#                                       EXPERIMENT TABLES                                        #
##################################################################################################

def write_trials_csv(path: str, summaries: Mapping[PolicyKind, RunSummary]) -> str:
    rows = []
    for kind, summary in summaries.items():
        for result in summary.results:
            rows.append([
                result.seed,
                kind.value,
                fmt_float(result.traversal_time),
                result.controller_correct,
                result.controller_total,
                result.ig_count,
                fmt_bool(result.reached_goal),
            ])
    return _write_csv(path, TRIALS_HEADER, rows)


def summary_row(summary: RunSummary) -> list:
    return [
        summary.policy.value,
        summary.trials,
        fmt_float(summary.mean_time),
        fmt_float(summary.min_time),
        fmt_float(summary.max_time),
        fmt_float(summary.correct_controller_pct),
        fmt_float(summary.static_accuracy),
        fmt_float(summary.mean_ig_count),
        fmt_float(summary.matched_time),
        fmt_float(summary.mismatched_time),
        fmt_float(summary.ig_time),
        fmt_float(summary.goal_rate),
    ]


def write_summary_csv(path: str, summaries: Mapping[PolicyKind, RunSummary]) -> str:
    return _write_csv(path, SUMMARY_HEADER, [summary_row(summary) for summary in summaries.values()])


def _pct(value: Optional[float]) -> str:
    return NOT_APPLICABLE if value is None else f"{value:.1f}"


def format_summary_table(summaries: Mapping[PolicyKind, RunSummary]) -> str:
    """Fixed-width comparison table (policy, controller accuracy, traversal time)."""
    lines = [
        f"{'Policy':<14}{'Correct ctrl %':>16}{'Static acc %':>14}{'Mean time s':>13}{'Min s':>10}{'Max s':>10}{'IG/run':>8}",
        "-" * 85,
    ]
    for kind, summary in summaries.items():
        lines.append(
            f"{kind.value:<14}{_pct(summary.correct_controller_pct):>16}{_pct(summary.static_accuracy):>14}"
            f"{summary.mean_time:>13.2f}{summary.min_time:>10.2f}{summary.max_time:>10.2f}{summary.mean_ig_count:>8.2f}"
        )
    return "\n".join(lines) + "\n"

##################################################################################################
#                                        MARKDOWN REPORT                                         #
##################################################################################################

def write_markdown_report(path: str, scenario, summaries: Mapping[PolicyKind, RunSummary], trials: int, seed: int) -> str:
    """
    Comparison report in Markdown.

    The report includes:
    - Scenario and planner configuration
    - The comparison table
    - The mean time breakdown per policy

    Args:
        path (str): Output file.
        scenario (Scenario): Compared scenario.
        summaries (Mapping[PolicyKind, RunSummary]): Results per policy.
        trials (int): Trials per policy.
        seed (int): Seed of the first trial.

    Returns:
        str: The written path.
    """

    planner = scenario.planner
    with open(path, "w", encoding="utf-8") as f:
        # --- Header ---
        f.write(f"# 🤖 Semantic Belief Graph – Comparison Report: `{scenario.name}`\n\n")
        f.write("Traversal time and controller choice of the SBG planner against the conservative and optimistic baselines.  \n")
        f.write("Generated automatically by **semantic_belief_graph compare**.\n\n")
        f.write("---\n\n")

        # --- Configuration Section ---
        f.write("## ⚙️ Configuration\n\n")
        f.write(f"- **Vertices / links**: {len(scenario.roadmap.vertices)} / {len(scenario.roadmap.links)}  \n")
        f.write(f"- **Start → goal**: `{scenario.start}` → `{scenario.goal}`  \n")
        f.write(f"- **Terrain classes**: {', '.join(cls.name for cls in scenario.class_set)}  \n")
        f.write(f"- **IG cost**: {scenario.cost_model.ig_cost:g} s  \n")
        f.write(f"- **Outcomes per IG**: {planner.top_k} ({planner.outcome_probabilities} probabilities)  \n")
        f.write(f"- **Trials**: {trials} (seeds {seed}..{seed + trials - 1})  \n\n")
        f.write("---\n\n")

        # --- Results Section ---
        f.write("## 📊 Results\n\n")
        f.write("| Policy | Correct controller (executed) | Correct controller (policy) | Mean time (s) | Min (s) | Max (s) | IG / run | Goal rate |\n")
        f.write("|---|---:|---:|---:|---:|---:|---:|---:|\n")
        for kind, summary in summaries.items():
            f.write(
                f"| {kind.value} | {_pct(summary.correct_controller_pct)} | {_pct(summary.static_accuracy)} | "
                f"{summary.mean_time:.2f} | {summary.min_time:.2f} | {summary.max_time:.2f} | "
                f"{summary.mean_ig_count:.2f} | {summary.goal_rate:.0%} |\n"
            )
        f.write("\n")

        # --- Time Breakdown Section ---
        f.write("## ⏱️ Time Breakdown\n\n")
        f.write("| Policy | Matched navigation (s) | Mismatched navigation (s) | Information gathering (s) |\n")
        f.write("|---|---:|---:|---:|\n")
        for kind, summary in summaries.items():
            f.write(f"| {kind.value} | {summary.matched_time:.2f} | {summary.mismatched_time:.2f} | {summary.ig_time:.2f} |\n")
        f.write("\n---\n")
        f.write("_End of report._\n")
    logger.info(f"Wrote {path}")
    return path

##################################################################################################
#                                             PLOTS                                              #
##################################################################################################

def plot_time_breakdown(path: str, summaries: Mapping[PolicyKind, RunSummary]) -> str:
    """Stacked bars of the mean traversal time per category and policy, saved as PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [kind.value for kind in summaries]
    matched = [summary.matched_time for summary in summaries.values()]
    mismatched = [summary.mismatched_time for summary in summaries.values()]
    gathering = [summary.ig_time for summary in summaries.values()]

    fig = plt.figure("Time Breakdown", figsize=(9, 7))
    plt.bar(names, matched, label="Matched navigation", color="tab:blue")
    plt.bar(names, mismatched, bottom=matched, label="Mismatched navigation", color="tab:red")
    plt.bar(names, gathering, bottom=[a + b for a, b in zip(matched, mismatched)], label="Information gathering", color="tab:green")
    plt.xlabel("Policy", fontsize=12)
    plt.ylabel("Mean traversal time (s)", fontsize=12)
    plt.title("TIME BREAKDOWN\n", fontsize=15)
    plt.legend(loc="upper right")
    plt.grid(True, axis="y", alpha=0.3)
    plt.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path
