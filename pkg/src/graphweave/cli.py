"""Command-line interface.

Subcommands mirror the pipeline phases:

    graphweave ingest --descriptor D --input F --graph DIR
    graphweave docs --input DIR --graph DIR
    graphweave link --graph DIR
    graphweave query --workflow W --graph DIR [--output P] [--parallel]
    graphweave stats --graph DIR [--output P]
    graphweave analytics {degree,components,clusters} --graph DIR [--seed N]
    graphweave export --graph DIR --out DIR

``--graph`` falls back to the GRAPHWEAVE_GRAPH environment variable. All
tabular output is tab-delimited; report commands accept ``--figures DIR``
to render PNG charts next to the delimited output. Exit codes: 0 success,
1 domain errors (validation, missing graph, cycles), 2 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .analytics import connected_components, degree_centrality, label_propagation
from .errors import GraphweaveError
from .pipeline import Workspace, run_docs, run_export, run_ingest, run_link, run_query

logger = logging.getLogger(__name__)

GRAPH_DIR_ENV = "GRAPHWEAVE_GRAPH"

_METRICS = ("degree", "components", "clusters")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract wants 1
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="graphweave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_graph_flag(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--graph",
            default=os.environ.get(GRAPH_DIR_ENV),
            help=f"graph directory (default: ${GRAPH_DIR_ENV})",
        )

    sub = commands.add_parser("ingest", help="ingest one structured source")
    sub.add_argument("--descriptor", required=True, help="source descriptor file")
    sub.add_argument("--input", required=True, help="JSONL records file")
    add_graph_flag(sub)

    sub = commands.add_parser("docs", help="attach a directory of converted documents")
    sub.add_argument("--input", required=True, help="directory of document JSON files")
    add_graph_flag(sub)

    sub = commands.add_parser("link", help="concepts, relations, mentions, facts")
    add_graph_flag(sub)

    sub = commands.add_parser("query", help="execute a workflow file")
    sub.add_argument("--workflow", required=True, help="workflow YAML file")
    add_graph_flag(sub)
    sub.add_argument("--output", help="write result rows (TSV) here")
    sub.add_argument("--parallel", action="store_true", help="evaluate independent steps concurrently")
    sub.add_argument("--figures", help="directory for PNG charts")

    sub = commands.add_parser("stats", help="graph size summary")
    add_graph_flag(sub)
    sub.add_argument("--output", help="write stats JSON here")
    sub.add_argument("--figures", help="directory for PNG charts")

    sub = commands.add_parser("analytics", help="whole-graph metrics")
    sub.add_argument("metric", choices=_METRICS)
    add_graph_flag(sub)
    sub.add_argument("--collection", help="restrict degree reporting to one collection")
    sub.add_argument("--seed", type=int, default=0, help="clustering shuffle seed")
    sub.add_argument("--max-iters", type=int, default=100, help="clustering iteration cap")
    sub.add_argument("--output", help="write rows (TSV) here")
    sub.add_argument("--figures", help="directory for PNG charts")

    sub = commands.add_parser("export", help="copy the graph to another directory")
    add_graph_flag(sub)
    sub.add_argument("--out", required=True, help="destination directory")

    return parser


def _workspace(args: argparse.Namespace) -> Workspace:
    if not args.graph:
        raise GraphweaveError(
            f"no graph directory: pass --graph or set ${GRAPH_DIR_ENV}"
        )
    return Workspace(args.graph)


def _emit(lines: list[str], output: str | None) -> None:
    """Print rows, optionally teeing the identical bytes to a file."""
    for line in lines:
        print(line)
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _cmd_ingest(args: argparse.Namespace) -> int:
    report = run_ingest(_workspace(args), args.descriptor, args.input)
    print(
        f"ingested\tinserted={report.inserted}\tmerged={report.merged}"
        f"\trejected={report.rejected}\twarnings={report.warnings}"
        f"\trelation_edges={report.relation_edges}"
    )
    return 0


def _cmd_docs(args: argparse.Namespace) -> int:
    report = run_docs(_workspace(args), args.input)
    print(
        f"documents\tparsed={report.documents}\tsegments={report.segments}"
        f"\tskipped_elements={report.skipped_elements}\tfailures={len(report.failures)}"
    )
    for failure in report.failures:
        sys.stderr.write(f"failed: {failure}\n")
    return 1 if report.failures else 0


def _cmd_link(args: argparse.Namespace) -> int:
    summary = run_link(_workspace(args))
    for key, value in summary.to_dict().items():
        print(f"{key}\t{value}")
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    workflow, results, trace, store = run_query(
        _workspace(args), args.workflow, parallel=args.parallel
    )
    lines: list[str] = []
    for step_id in trace.outputs:
        for node_id in results[step_id].node_ids:
            node = store.get_node(node_id)
            lines.append(f"{step_id}\t{node_id}\t{node.collection}\t{node.label}")
    _emit(lines, args.output)
    for entry in trace.entries:
        sys.stderr.write(
            f"trace\t{entry.step_id}\t{entry.op}\t{entry.cardinality}\t{entry.seconds:.4f}\n"
        )
    if args.figures:
        from . import figures

        for path in figures.render_trace_figure(trace, args.figures):
            sys.stderr.write(f"figure\t{path}\n")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    store = _workspace(args).load_store(require=False)
    stats = store.stats()
    print(f"nodes\t{stats.node_count}")
    print(f"edges\t{stats.edge_count}")
    for name, count in stats.per_collection.items():
        print(f"collection:{name}\t{count}")
    for kind, count in stats.per_edge_kind.items():
        print(f"edge_kind:{kind}\t{count}")
    if args.output:
        payload = {
            "node_count": stats.node_count,
            "edge_count": stats.edge_count,
            "per_collection": stats.per_collection,
            "per_edge_kind": stats.per_edge_kind,
        }
        Path(args.output).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if args.figures:
        from . import figures

        for path in figures.render_stats_figures(stats, args.figures):
            sys.stderr.write(f"figure\t{path}\n")
    return 0


def _cmd_analytics(args: argparse.Namespace) -> int:
    store = _workspace(args).load_store(require=False)
    store.freeze()
    lines: list[str] = []
    if args.metric == "degree":
        rows = degree_centrality(store, collection=args.collection)
        lines = [f"{node_id}\t{degree}" for node_id, degree in rows]
    elif args.metric == "components":
        components = connected_components(store)
        lines = [
            f"{index}\t{node_id}"
            for index, members in enumerate(components)
            for node_id in members
        ]
    else:
        clusters = label_propagation(store, seed=args.seed, max_iters=args.max_iters)
        lines = [
            f"{index}\t{node_id}"
            for index, members in enumerate(clusters)
            for node_id in members
        ]
    _emit(lines, args.output)
    if args.figures:
        from . import figures

        if args.metric == "degree":
            written = figures.render_degree_figures(rows, args.figures)
        elif args.metric == "components":
            written = figures.render_group_sizes(
                components, args.figures, "component_sizes", "Connected component sizes"
            )
        else:
            written = figures.render_group_sizes(
                clusters, args.figures, "cluster_sizes", "Cluster sizes"
            )
        for path in written:
            sys.stderr.write(f"figure\t{path}\n")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    target = run_export(_workspace(args), args.out)
    print(f"exported\t{target}")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "docs": _cmd_docs,
    "link": _cmd_link,
    "query": _cmd_query,
    "stats": _cmd_stats,
    "analytics": _cmd_analytics,
    "export": _cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _HANDLERS[args.command](args)
    except GraphweaveError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
