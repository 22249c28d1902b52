"""Structured-source ingestion: raw records in, entity documents + nodes out.

Ingestion runs in two phases so the result never depends on record order:
phase A normalizes every record and upserts its node; phase B resolves
declared relations against the now-complete node set and inserts edges.
Record-level failures (missing identifier, malformed JSON line) reject that
record with a reason and continue; field-level surprises (unmapped keys,
invalid concept values) drop the field with a counted warning.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .descriptors import KeyRegistry, SourceDescriptor
from .errors import InvalidConceptValueError, RecordRejectedError
from .normalize import ConceptKey, canonicalize_concept, normalize_key
from .store import Edge, GraphStore, Node, Provenance

logger = logging.getLogger(__name__)


@dataclass
class RawRecord:
    """One record as read from a source: payload plus bookkeeping.

    ``error`` is set by the reader when the line could not be parsed at
    all; such records are rejected during normalization.
    """

    source_name: str
    payload: dict[str, Any] = field(default_factory=dict)
    locator: str = ""
    error: str | None = None


@dataclass
class Relation:
    """A declared link to another collection, raw value plus resolution."""

    kind: str
    target_collection: str
    value: str
    node_id: str | None = None


@dataclass
class EntityDocument:
    """Normalized view of one record: node, extracted concepts, relations."""

    node: Node
    concepts: list[ConceptKey] = field(default_factory=list)
    relations: list[Relation] = field(default_factory=list)


@dataclass
class IngestReport:
    inserted: int = 0
    merged: int = 0
    rejected: int = 0
    warnings: int = 0
    relation_edges: int = 0
    messages: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        self.warnings += 1
        self.messages.append(message)
        logger.warning("%s", message)


def iter_raw_records(path: str | Path, source_name: str) -> Iterator[RawRecord]:
    """Stream records from a JSONL file, one object per line.

    Unparseable or non-object lines yield a record with ``error`` set, so
    the caller can count the rejection without losing its position.
    """
    file_path = Path(path)
    with file_path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            locator = f"{file_path.name}:{line_no}"
            if not raw.strip():
                continue
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                yield RawRecord(source_name, locator=locator, error=f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(payload, dict):
                yield RawRecord(source_name, locator=locator, error="record must be a JSON object")
                continue
            yield RawRecord(source_name, payload=payload, locator=locator)


def _stringify(value: Any) -> str | None:
    if isinstance(value, str):
        text = value.strip()
        return text or None
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, (int, float)):
        return str(value)
    return None


def _string_list(value: Any) -> list[str]:
    items = value if isinstance(value, list) else [value]
    out: list[str] = []
    for item in items:
        text = _stringify(item)
        if text is not None:
            out.append(text)
    return out


def normalize_record(
    record: RawRecord, descriptor: SourceDescriptor
) -> tuple[EntityDocument, list[str]]:
    """Turn one raw record into an entity document.

    Returns the document plus field-level warnings. The payload's keys are
    renamed through the descriptor's field_map; keys outside the mapped
    domain are dropped (warned). Concept extractor values are canonicalized
    per kind; invalid values are warned and skipped, they never reject the
    record.

    Raises:
        RecordRejectedError: reader error, or the identifier field is
            missing, empty, or unusable inside a node id.
    """
    if record.error is not None:
        raise RecordRejectedError(f"{record.locator or record.source_name}: {record.error}")

    known = {descriptor.id_field, descriptor.label_field}
    known.update(descriptor.synonym_fields)
    known.update(e.key for e in descriptor.concept_extractors)
    known.update(r.field for r in descriptor.relation_fields)
    known.update(descriptor.field_map.values())

    warnings: list[str] = []
    where = record.locator or record.source_name
    normalized: dict[str, Any] = {}
    for raw_key, value in record.payload.items():
        if raw_key in descriptor.field_map:
            key = descriptor.field_map[raw_key]
        elif isinstance(raw_key, str) and raw_key == normalize_key(raw_key) and raw_key in known:
            key = raw_key
        else:
            warnings.append(f"{where}: dropped unmapped field {raw_key!r}")
            continue
        if isinstance(value, dict):
            warnings.append(f"{where}: dropped nested value for {key!r}")
            continue
        normalized[key] = value

    accession = _stringify(normalized.get(descriptor.id_field))
    if accession is None:
        raise RecordRejectedError(f"{where}: missing identifier field {descriptor.id_field!r}")
    if any(ch.isspace() for ch in accession) or ":" in accession:
        raise RecordRejectedError(
            f"{where}: identifier {accession!r} cannot appear in a node id"
        )

    label = _stringify(normalized.get(descriptor.label_field))
    if label is None:
        warnings.append(f"{where}: missing label field, falling back to identifier")
        label = accession

    synonyms: list[str] = []
    for syn_field in descriptor.synonym_fields:
        if syn_field in normalized:
            synonyms.extend(_string_list(normalized[syn_field]))

    concepts: list[ConceptKey] = []
    seen_concepts: set[ConceptKey] = set()
    canonical_by_field: dict[str, list[str]] = {}
    for extractor in descriptor.concept_extractors:
        if extractor.key not in normalized:
            continue
        canonicals: list[str] = []
        for raw_value in _string_list(normalized[extractor.key]):
            try:
                concept = canonicalize_concept(extractor.kind, raw_value)
            except InvalidConceptValueError as exc:
                warnings.append(f"{where}: {exc}")
                continue
            canonicals.append(concept.canonical)
            if concept not in seen_concepts:
                seen_concepts.add(concept)
                concepts.append(concept)
        canonical_by_field[extractor.key] = canonicals

    relations: list[Relation] = []
    for rule in descriptor.relation_fields:
        if rule.field not in normalized:
            continue
        for value in _string_list(normalized[rule.field]):
            relations.append(
                Relation(kind=rule.kind, target_collection=rule.target_collection, value=value)
            )

    skip = {descriptor.id_field, descriptor.label_field, *descriptor.synonym_fields}
    properties: dict[str, Any] = {}
    for key, value in normalized.items():
        if key in skip:
            continue
        if key in canonical_by_field:
            canonicals = canonical_by_field[key]
            if not canonicals:
                continue
            properties[key] = canonicals[0] if len(canonicals) == 1 else sorted(canonicals)
        else:
            properties[key] = value

    node = Node(
        id=f"{descriptor.source_name}:{descriptor.collection}:{accession}",
        collection=descriptor.collection,
        label=label,
        synonyms=synonyms,
        properties=properties,
    )
    return EntityDocument(node=node, concepts=concepts, relations=relations), warnings


def looks_like_node_id(value: str) -> bool:
    return value.count(":") >= 2 and not any(ch.isspace() for ch in value)


def resolve_relation(graph: GraphStore, relation: Relation) -> str:
    """Resolve a relation target against the graph; sets ``node_id``.

    Resolution order: a value with node-id shape must name an existing node
    in the target collection; otherwise exact accession match, then
    case-insensitive label/synonym match. Returns ``"resolved"``,
    ``"miss"``, or ``"ambiguous"`` (several candidates, nothing linked).
    """
    value = relation.value.strip()
    if looks_like_node_id(value):
        if graph.has_node(value) and graph.get_node(value).collection == relation.target_collection:
            relation.node_id = value
            return "resolved"
        return "miss"
    if not graph.has_collection(relation.target_collection):
        return "miss"
    matches = graph.find_by_accession(relation.target_collection, value)
    if not matches:
        matches = graph.find_nodes(
            collection=relation.target_collection, label_or_synonym=value
        )
    if len(matches) == 1:
        relation.node_id = matches[0].id
        return "resolved"
    if not matches:
        return "miss"
    return "ambiguous"


def add_relation_edges(
    graph: GraphStore,
    entities: Iterable[EntityDocument],
    report: IngestReport,
    *,
    quiet_misses: bool = False,
) -> None:
    """Phase B: resolve each entity's relations and insert declared edges.

    Safe to re-run: already-present edges are duplicates (not counted).
    Misses and ambiguities are counted as warnings unless ``quiet_misses``
    (used by the cross-source re-resolution pass, which expects early runs
    to miss targets that arrive later).
    """
    for entity in entities:
        accession = entity.node.id.split(":", 2)[2]
        for relation in entity.relations:
            status = resolve_relation(graph, relation)
            if status != "resolved":
                if not quiet_misses:
                    report.warn(
                        f"{entity.node.id}: relation {relation.kind!r} -> "
                        f"{relation.value!r} {status}"
                    )
                continue
            outcome = graph.add_edge(
                Edge(
                    src=entity.node.id,
                    dst=relation.node_id,  # type: ignore[arg-type]
                    kind=relation.kind,
                    provenance=Provenance(
                        origin=entity.node.id.split(":", 1)[0],
                        locator=accession,
                        method="declared",
                    ),
                )
            )
            if outcome == "inserted":
                report.relation_edges += 1


def ingest_source(
    records: Iterable[RawRecord],
    descriptor: SourceDescriptor,
    graph: GraphStore,
    registry: KeyRegistry | None = None,
) -> tuple[IngestReport, list[EntityDocument]]:
    """Ingest one source stream into the graph.

    Registers the descriptor's collection, upserts every record's node
    (phase A), then resolves declared relations (phase B). Returns the
    report with exact counts and the normalized entity documents so callers
    can persist them for the linking pass.
    """
    if registry is not None:
        for key in sorted(set(descriptor.field_map.values())):
            registry.register(key, descriptor.source_name)
    graph.register_collection(descriptor.collection)
    report = IngestReport()
    entities: list[EntityDocument] = []

    for record in records:
        try:
            entity, warnings = normalize_record(record, descriptor)
        except RecordRejectedError as exc:
            report.rejected += 1
            report.messages.append(str(exc))
            logger.warning("rejected record: %s", exc)
            continue
        for message in warnings:
            report.warn(message)
        outcome = graph.upsert_node(entity.node)
        if outcome == "inserted":
            report.inserted += 1
        else:
            report.merged += 1
        entities.append(entity)

    add_relation_edges(graph, entities, report)
    logger.info(
        "ingested %s: %d inserted, %d merged, %d rejected, %d relation edges",
        descriptor.source_name,
        report.inserted,
        report.merged,
        report.rejected,
        report.relation_edges,
    )
    return report, entities


# ----------------------------------------------------------------------
# entity document persistence (so linking can run in a later invocation)


def entity_to_dict(entity: EntityDocument) -> dict[str, Any]:
    return {
        "node": {
            "id": entity.node.id,
            "collection": entity.node.collection,
            "label": entity.node.label,
            "synonyms": entity.node.synonyms,
            "properties": entity.node.properties,
        },
        "concepts": [{"kind": c.kind, "canonical": c.canonical} for c in entity.concepts],
        "relations": [
            {
                "kind": r.kind,
                "target_collection": r.target_collection,
                "value": r.value,
                "node_id": r.node_id,
            }
            for r in entity.relations
        ],
    }


def entity_from_dict(data: dict[str, Any]) -> EntityDocument:
    node_data = data["node"]
    return EntityDocument(
        node=Node(
            id=node_data["id"],
            collection=node_data["collection"],
            label=node_data["label"],
            synonyms=list(node_data.get("synonyms", [])),
            properties=dict(node_data.get("properties", {})),
        ),
        concepts=[ConceptKey(c["kind"], c["canonical"]) for c in data.get("concepts", [])],
        relations=[
            Relation(
                kind=r["kind"],
                target_collection=r["target_collection"],
                value=r["value"],
                node_id=r.get("node_id"),
            )
            for r in data.get("relations", [])
        ],
    )
