"""Figure rendering for the report paths.

Every report command can drop PNGs next to its delimited output. The
renderers are deliberately dependency-light: a headless backend, one
figure per file, no styling beyond labels. Each function returns the
paths it wrote so callers can list them.
"""

from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .store import GraphStats
from .workflow import ExecutionTrace

logger = logging.getLogger(__name__)

_BAR_COLOR = "#4878a8"


def _bar_chart(
    path: Path, labels: list[str], values: list[float], title: str, ylabel: str
) -> Path:
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(labels) + 2.0), 3.5))
    positions = range(len(labels))
    ax.bar(positions, values, color=_BAR_COLOR)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    logger.debug("wrote figure %s", path)
    return path


def render_stats_figures(stats: GraphStats, directory: str | Path) -> list[Path]:
    """Nodes-per-collection and edges-per-kind bar charts."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    written = [
        _bar_chart(
            target / "nodes_per_collection.png",
            list(stats.per_collection),
            [float(v) for v in stats.per_collection.values()],
            f"Nodes per collection (total {stats.node_count})",
            "nodes",
        ),
        _bar_chart(
            target / "edges_per_kind.png",
            list(stats.per_edge_kind),
            [float(v) for v in stats.per_edge_kind.values()],
            f"Edges per kind (total {stats.edge_count})",
            "edges",
        ),
    ]
    return written


def render_degree_figures(
    degrees: list[tuple[str, int]], directory: str | Path, top: int = 15
) -> list[Path]:
    """Degree histogram plus the highest-degree nodes."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    counts = Counter(degree for _node, degree in degrees)
    xs = sorted(counts)
    head = degrees[:top]
    return [
        _bar_chart(
            target / "degree_distribution.png",
            [str(x) for x in xs],
            [float(counts[x]) for x in xs],
            "Degree distribution",
            "nodes",
        ),
        _bar_chart(
            target / "degree_top.png",
            [node for node, _deg in head],
            [float(d) for _node, d in head],
            f"Top {len(head)} nodes by degree",
            "degree",
        ),
    ]


def render_group_sizes(
    groups: list[list[str]], directory: str | Path, name: str, title: str
) -> list[Path]:
    """Bar chart of group sizes (components or clusters)."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    return [
        _bar_chart(
            target / f"{name}.png",
            [str(i) for i in range(len(groups))],
            [float(len(g)) for g in groups],
            title,
            "members",
        )
    ]


def render_trace_figure(trace: ExecutionTrace, directory: str | Path) -> list[Path]:
    """Per-step result cardinalities for a workflow run."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    return [
        _bar_chart(
            target / "workflow_cardinalities.png",
            [entry.step_id for entry in trace.entries],
            [float(entry.cardinality) for entry in trace.entries],
            "Workflow step cardinalities",
            "nodes",
        )
    ]
