"""Graph-directory workspace and the end-to-end build pipeline.

A graph directory holds everything one knowledge graph needs across
separate command invocations:

    manifest.json / nodes.jsonl / edges.jsonl   graph snapshot
    entities.jsonl                              normalized entity documents
    registry.json                               shared normalized-key registry
    reports/*.json                              per-phase count reports
    audit/mentions.jsonl, audit/facts.jsonl     what the linking pass found
    graph.lock                                  single-writer guard

``ingest`` and ``docs`` grow the graph; ``link`` materializes concepts,
re-resolves relations across sources, recognizes mentions, writes
co-occurrence edges, and lifts table facts. Re-running any phase over the
same inputs changes nothing (reports show zero new work).
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .descriptors import KeyRegistry, load_descriptor_file
from .documents import DocReport, ingest_documents, segments_from_graph
from .errors import GraphweaveError, SnapshotError
from .ingest import (
    EntityDocument,
    IngestReport,
    entity_from_dict,
    entity_to_dict,
    ingest_source,
    iter_raw_records,
)
from .linker import LinkReport, materialize_concepts, resolve_relations
from .ner import Fact, Mention, build_gazetteer, extract_facts, link_mentions, recognize
from .store import GraphStore, load_snapshot
from .workflow import (
    ExecutionTrace,
    StepResult,
    Workflow,
    execute,
    parse_workflow_file,
)

logger = logging.getLogger(__name__)

ENTITIES_FILE = "entities.jsonl"
REGISTRY_FILE = "registry.json"
LOCK_FILE = "graph.lock"


@dataclass
class LinkSummary:
    """Combined counts from one ``link`` run."""

    concepts: LinkReport
    relations: LinkReport
    ner: LinkReport
    gazetteer_surfaces: int = 0
    mentions: int = 0
    facts: int = 0
    skipped_rows: int = 0

    def to_dict(self) -> dict[str, object]:
        return {
            "concept_nodes_created": self.concepts.concept_nodes_created,
            "concept_edges_created": self.concepts.edges_created,
            "relation_edges_created": self.relations.edges_created,
            "relation_misses": self.relations.misses,
            "relation_ambiguities": self.relations.ambiguities,
            "mention_edges_created": self.ner.mention_edges,
            "cooccurrence_edges_created": self.ner.cooccurrence_edges,
            "gazetteer_surfaces": self.gazetteer_surfaces,
            "mentions": self.mentions,
            "facts": self.facts,
            "skipped_rows": self.skipped_rows,
        }


class Workspace:
    """One graph directory; owns layout, locking, and load/save plumbing."""

    def __init__(self, directory: str | Path):
        self.root = Path(directory)

    # -- paths ---------------------------------------------------------

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def audit_dir(self) -> Path:
        return self.root / "audit"

    def exists(self) -> bool:
        return (self.root / "manifest.json").is_file()

    # -- locking -------------------------------------------------------

    @contextmanager
    def lock(self):
        """Exclusive mutation lock via O_EXCL lock-file creation."""
        self.root.mkdir(parents=True, exist_ok=True)
        lock_path = self.root / LOCK_FILE
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise GraphweaveError(
                f"graph directory is locked by another writer ({lock_path}); "
                "remove the lock file if that writer is gone"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield
        finally:
            try:
                os.unlink(lock_path)
            except OSError:
                pass

    # -- store ---------------------------------------------------------

    def load_store(self, require: bool = True) -> GraphStore:
        """Load the snapshot; a missing one yields an empty store unless
        ``require``."""
        if not self.exists():
            if require:
                raise SnapshotError("no graph here; run ingest first", path=str(self.root))
            return GraphStore()
        return load_snapshot(self.root)

    def save_store(self, store: GraphStore) -> None:
        store.save_snapshot(self.root)

    # -- registry ------------------------------------------------------

    def load_registry(self) -> KeyRegistry:
        registry = KeyRegistry()
        path = self.root / REGISTRY_FILE
        if path.is_file():
            data = json.loads(path.read_text(encoding="utf-8"))
            for key, owners in data.get("keys", {}).items():
                for owner in owners:
                    registry.register(key, owner)
        return registry

    def save_registry(self, registry: KeyRegistry) -> None:
        payload = {"keys": {key: registry.owners(key) for key in registry.keys()}}
        path = self.root / REGISTRY_FILE
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    # -- entity documents ----------------------------------------------

    def load_entities(self) -> list[EntityDocument]:
        path = self.root / ENTITIES_FILE
        if not path.is_file():
            return []
        entities = []
        with path.open("r", encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    entities.append(entity_from_dict(json.loads(line)))
        return entities

    def save_entities(self, new_entities: list[EntityDocument]) -> None:
        """Merge by node id (newest wins) and rewrite, sorted, so repeated
        ingests don't bloat the file."""
        merged = {entity.node.id: entity for entity in self.load_entities()}
        for entity in new_entities:
            merged[entity.node.id] = entity
        path = self.root / ENTITIES_FILE
        with path.open("w", encoding="utf-8") as handle:
            for node_id in sorted(merged):
                handle.write(json.dumps(entity_to_dict(merged[node_id]), ensure_ascii=False))
                handle.write("\n")

    # -- reports / audit -------------------------------------------------

    def write_report(self, name: str, payload: dict[str, object]) -> Path:
        self.reports_dir.mkdir(parents=True, exist_ok=True)
        path = self.reports_dir / f"{name}.json"
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        return path

    def write_audit_jsonl(self, name: str, rows: list[dict[str, object]]) -> Path:
        self.audit_dir.mkdir(parents=True, exist_ok=True)
        path = self.audit_dir / f"{name}.jsonl"
        with path.open("w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                handle.write("\n")
        return path


# ----------------------------------------------------------------------
# phases


def run_ingest(workspace: Workspace, descriptor_path: str | Path, input_path: str | Path) -> IngestReport:
    """Ingest one source file into the workspace graph."""
    with workspace.lock():
        store = workspace.load_store(require=False)
        registry = workspace.load_registry()
        descriptor = load_descriptor_file(descriptor_path, registry)
        records = iter_raw_records(input_path, descriptor.source_name)
        report, entities = ingest_source(records, descriptor, store, registry)
        workspace.save_entities(entities)
        workspace.save_registry(registry)
        workspace.save_store(store)
        workspace.write_report(
            f"ingest_{descriptor.source_name}",
            {
                "source": descriptor.source_name,
                "inserted": report.inserted,
                "merged": report.merged,
                "rejected": report.rejected,
                "warnings": report.warnings,
                "relation_edges": report.relation_edges,
                "messages": report.messages,
            },
        )
    return report


def run_docs(workspace: Workspace, input_dir: str | Path) -> DocReport:
    """Attach every document under ``input_dir`` to the workspace graph."""
    with workspace.lock():
        store = workspace.load_store(require=False)
        report = ingest_documents(input_dir, store)
        workspace.save_store(store)
        workspace.write_report(
            "docs",
            {
                "documents": report.documents,
                "segments": report.segments,
                "skipped_elements": report.skipped_elements,
                "failures": report.failures,
            },
        )
    return report


def run_link(workspace: Workspace) -> LinkSummary:
    """Concepts, cross-source relations, NER, co-occurrence, table facts."""
    with workspace.lock():
        store = workspace.load_store(require=True)
        registry = workspace.load_registry()
        entities = workspace.load_entities()

        concepts_report = materialize_concepts(entities, store)
        relations_report = resolve_relations(entities, store)

        gazetteer = build_gazetteer(store)
        segments = segments_from_graph(store)
        mentions: list[Mention] = []
        for segment in segments:
            mentions.extend(recognize(segment, gazetteer))
        ner_report = link_mentions(mentions, store)

        facts: list[Fact] = []
        skipped_rows = 0
        for segment in segments:
            if segment.table is None:
                continue
            segment_facts, skipped = extract_facts(segment, mentions, store, registry)
            facts.extend(segment_facts)
            skipped_rows += skipped

        workspace.save_store(store)
        summary = LinkSummary(
            concepts=concepts_report,
            relations=relations_report,
            ner=ner_report,
            gazetteer_surfaces=len(gazetteer),
            mentions=len(mentions),
            facts=len(facts),
            skipped_rows=skipped_rows,
        )
        workspace.write_audit_jsonl(
            "mentions",
            [
                {
                    "node_id": m.node_id,
                    "segment_id": m.segment_id,
                    "surface": m.surface,
                    "start": m.start,
                    "end": m.end,
                    **({"row": m.cell[0], "col": m.cell[1]} if m.cell else {}),
                }
                for m in sorted(mentions, key=lambda m: (m.segment_id, m.cell or (-1, -1), m.start, m.node_id))
            ],
        )
        workspace.write_audit_jsonl(
            "facts",
            [
                {
                    "subject_id": f.subject_id,
                    "predicate": f.predicate,
                    "value": f.value,
                    "segment_id": f.segment_id,
                    "row": f.row,
                }
                for f in sorted(facts, key=lambda f: (f.segment_id, f.row, f.predicate, f.subject_id))
            ],
        )
        workspace.write_report("link", summary.to_dict())
    return summary


def run_query(
    workspace: Workspace, workflow_path: str | Path, parallel: bool = False
) -> tuple[Workflow, dict[str, StepResult], ExecutionTrace, GraphStore]:
    """Execute a workflow file against the frozen workspace graph."""
    store = workspace.load_store(require=True)
    store.freeze()
    workflow = parse_workflow_file(workflow_path)
    results, trace = execute(workflow, store, parallel=parallel)
    return workflow, results, trace, store


def run_export(workspace: Workspace, out_dir: str | Path) -> Path:
    """Copy the graph (snapshot + entity documents + registry) elsewhere.

    The exported directory is a fully working graph directory; loading it
    reproduces identical stats.
    """
    store = workspace.load_store(require=True)
    target = Path(out_dir)
    store.save_snapshot(target)
    for name in (ENTITIES_FILE, REGISTRY_FILE):
        source_path = workspace.root / name
        if source_path.is_file():
            shutil.copyfile(source_path, target / name)
    return target
