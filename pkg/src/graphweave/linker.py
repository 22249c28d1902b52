"""Concept linking: shared-value nodes that bridge entities across sources.

Two databases rarely agree on identifiers, but they do agree on values:
the same enzyme classification number, the same compound name, the same
taxon. Each distinct canonicalized (kind, value) pair becomes one concept
node, and every entity carrying that value gets a ``has_concept`` edge to
it, so entities from different sources that share a value sit exactly two
hops apart.

Equivalent entities across sources stay separate nodes; the concept node
is the bridge, never a merge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable
from urllib.parse import quote, unquote

from .ingest import EntityDocument, resolve_relation
from .normalize import ConceptKey
from .store import Edge, GraphStore, Node, Provenance

logger = logging.getLogger(__name__)

CONCEPT_COLLECTION = "concept"


@dataclass
class LinkReport:
    """Counts from one linking pass; the NER pass also fills the per-kind
    edge breakdown."""

    concept_nodes_created: int = 0
    edges_created: int = 0
    misses: int = 0
    ambiguities: int = 0
    mention_edges: int = 0
    cooccurrence_edges: int = 0
    messages: list[str] = field(default_factory=list)


def concept_node_id(kind: str, canonical: str) -> str:
    """Stable id for a concept node.

    Canonical values may contain spaces (compound names) and custom kinds
    may contain colons (``other:cofactor``), both forbidden inside id
    segments, so kind and value are percent-encoded. Encoding is
    injective, therefore distinct concepts keep distinct ids.
    """
    return f"concept:{quote(kind, safe='')}:{quote(canonical, safe='')}"


def concept_from_node_id(node_id: str) -> ConceptKey:
    """Inverse of :func:`concept_node_id`."""
    _, kind, encoded = node_id.split(":", 2)
    return ConceptKey(kind=unquote(kind), canonical=unquote(encoded))


def materialize_concepts(
    entities: Iterable[EntityDocument], graph: GraphStore
) -> LinkReport:
    """Create concept nodes and ``has_concept`` edges for every entity.

    One concept node per distinct (kind, canonical) pair; re-running over
    the same entities creates nothing new. Entities missing from the graph
    are counted as misses (the stream is stale), never an exception.
    """
    graph.register_collection(CONCEPT_COLLECTION)
    report = LinkReport()
    for entity in entities:
        if not graph.has_node(entity.node.id):
            report.misses += 1
            report.messages.append(f"entity not in graph: {entity.node.id}")
            continue
        accession = entity.node.id.split(":", 2)[2]
        for concept in entity.concepts:
            node_id = concept_node_id(concept.kind, concept.canonical)
            outcome = graph.upsert_node(
                Node(
                    id=node_id,
                    collection=CONCEPT_COLLECTION,
                    label=concept.canonical,
                    properties={"kind": concept.kind},
                )
            )
            if outcome == "inserted":
                report.concept_nodes_created += 1
            edge_outcome = graph.add_edge(
                Edge(
                    src=entity.node.id,
                    dst=node_id,
                    kind="has_concept",
                    provenance=Provenance(
                        origin=entity.node.id.split(":", 1)[0],
                        locator=accession,
                        method="concept",
                    ),
                )
            )
            if edge_outcome == "inserted":
                report.edges_created += 1
    logger.info(
        "concepts: %d nodes created, %d edges created, %d stale entities",
        report.concept_nodes_created,
        report.edges_created,
        report.misses,
    )
    return report


def resolve_relations(entities: Iterable[EntityDocument], graph: GraphStore) -> LinkReport:
    """Re-resolve declared relations across the full multi-source graph.

    Ingestion resolves what it can see; this pass runs after every source
    is loaded, so references that pointed forward (e.g. a family list that
    arrived before its member proteins) finally land. Already-present
    edges are duplicates and not counted. Unresolvable values are counted
    as misses, ambiguous ones as ambiguities; nothing is guessed.
    """
    report = LinkReport()
    for entity in entities:
        if not graph.has_node(entity.node.id):
            report.misses += 1
            report.messages.append(f"entity not in graph: {entity.node.id}")
            continue
        accession = entity.node.id.split(":", 2)[2]
        for relation in entity.relations:
            status = resolve_relation(graph, relation)
            if status == "ambiguous":
                report.ambiguities += 1
                report.messages.append(
                    f"{entity.node.id}: relation {relation.kind!r} -> {relation.value!r} ambiguous"
                )
                continue
            if status != "resolved":
                report.misses += 1
                report.messages.append(
                    f"{entity.node.id}: relation {relation.kind!r} -> {relation.value!r} unresolved"
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
                report.edges_created += 1
    logger.info(
        "relations: %d edges created, %d misses, %d ambiguities",
        report.edges_created,
        report.misses,
        report.ambiguities,
    )
    return report
