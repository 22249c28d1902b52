"""Dictionary-driven entity recognition and document-graph linking.

The gazetteer is built from the graph itself: every entity label and
synonym (documents and concepts excluded) becomes a lookup surface after
casefolding and whitespace collapsing. Scanning finds leftmost-longest,
non-overlapping matches on word boundaries via a character trie over the
normalized text, then maps spans back to original character offsets. An
ambiguous surface (one shared by k entities) yields k mentions at the same
span; nothing is guessed.

Downstream, mentions become ``mentioned_in`` edges, per-segment entity
pairs become symmetric ``cooccurs_with`` edges carrying co-mention counts,
and tables whose first column resolves to exactly one entity per row yield
facts.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass

from .descriptors import KeyRegistry
from .documents import DocumentSegment, flatten_table
from .errors import UsageError
from .linker import LinkReport
from .normalize import normalize_key, normalize_surface
from .store import Edge, GraphStore, Provenance

logger = logging.getLogger(__name__)

# Shorter surfaces ("Na", "at") match everywhere and mean nothing.
MIN_SURFACE_LEN = 3

# Collections whose labels must not feed the gazetteer: document segments
# would match themselves, concept labels duplicate entity surfaces.
NON_ENTITY_COLLECTIONS = ("concept", "document")


@dataclass(frozen=True)
class Mention:
    """One recognized entity occurrence inside a segment.

    Offsets index the original text (the cell text for tables, with the
    cell's grid position in ``cell``). ``surface`` is the text exactly as
    it appeared.
    """

    node_id: str
    segment_id: str
    surface: str
    start: int
    end: int
    cell: tuple[int, int] | None = None


@dataclass(frozen=True)
class Fact:
    """A (subject, predicate, value) triple lifted from a table row."""

    subject_id: str
    predicate: str
    value: str
    segment_id: str
    row: int
    provenance: Provenance


class _TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.terminal: str | None = None


def _is_word(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _valid_start(norm: str, start: int) -> bool:
    return start == 0 or not _is_word(norm[start - 1]) or not _is_word(norm[start])


def _valid_end(norm: str, end: int) -> bool:
    return end == len(norm) or not _is_word(norm[end]) or not _is_word(norm[end - 1])


class Gazetteer:
    """Normalized surface -> sorted entity ids, with a trie for scanning."""

    def __init__(self) -> None:
        self._entries: dict[str, tuple[str, ...]] = {}
        self._root = _TrieNode()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, surface: str) -> bool:
        return normalize_surface(surface) in self._entries

    def ids_for(self, surface: str) -> tuple[str, ...]:
        return self._entries.get(normalize_surface(surface), ())

    def entries(self) -> dict[str, tuple[str, ...]]:
        return dict(self._entries)

    def ambiguous_surfaces(self) -> list[str]:
        return sorted(k for k, ids in self._entries.items() if len(ids) > 1)

    @classmethod
    def from_entries(cls, entries: dict[str, list[str] | tuple[str, ...]]) -> "Gazetteer":
        """Build directly from surface -> node ids; surfaces are normalized
        here, and those too short after normalization are dropped."""
        collected: dict[str, set[str]] = defaultdict(set)
        for surface, node_ids in entries.items():
            key = normalize_surface(surface)
            if len(key) >= MIN_SURFACE_LEN:
                collected[key].update(node_ids)
        gazetteer = cls()
        for key in sorted(collected):
            gazetteer._insert(key, tuple(sorted(collected[key])))
        return gazetteer

    def _insert(self, key: str, ids: tuple[str, ...]) -> None:
        self._entries[key] = ids
        node = self._root
        for ch in key:
            node = node.children.setdefault(ch, _TrieNode())
        node.terminal = key

    def longest_match(self, norm: str, start: int) -> tuple[str, int] | None:
        """Longest entry starting at ``start`` whose end is a boundary."""
        node = self._root
        best: tuple[str, int] | None = None
        for pos in range(start, len(norm)):
            node = node.children.get(norm[pos])
            if node is None:
                break
            if node.terminal is not None and _valid_end(norm, pos + 1):
                best = (node.terminal, pos + 1)
        return best


def build_gazetteer(graph: GraphStore) -> Gazetteer:
    """Collect every entity label and synonym into a gazetteer.

    Call this once entity ingestion is complete; the gazetteer is a frozen
    snapshot and does not track later graph writes. Surfaces shorter than
    MIN_SURFACE_LEN after normalization are left out.
    """
    collected: dict[str, set[str]] = defaultdict(set)
    for node in graph.nodes():
        if node.collection in NON_ENTITY_COLLECTIONS:
            continue
        for surface in [node.label] + node.synonyms:
            collected[surface].add(node.id)
    gazetteer = Gazetteer.from_entries({k: sorted(v) for k, v in collected.items()})
    logger.info(
        "gazetteer: %d surfaces (%d ambiguous)",
        len(gazetteer),
        len(gazetteer.ambiguous_surfaces()),
    )
    return gazetteer


def _normalized_view(text: str) -> tuple[str, list[tuple[int, int]]]:
    """Casefold + collapse whitespace, keeping per-character origin spans.

    spans[i] is the half-open original range that produced normalized
    character i, so a normalized match [s, e) maps back to original
    offsets (spans[s][0], spans[e-1][1]).
    """
    chars: list[str] = []
    spans: list[tuple[int, int]] = []
    ws_start: int | None = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if ws_start is None:
                ws_start = i
            continue
        if ws_start is not None:
            if chars:
                chars.append(" ")
                spans.append((ws_start, i))
            ws_start = None
        for folded in ch.casefold():
            chars.append(folded)
            spans.append((i, i + 1))
    return "".join(chars), spans


def _scan_text(
    text: str, gazetteer: Gazetteer, segment_id: str, cell: tuple[int, int] | None
) -> list[Mention]:
    norm, spans = _normalized_view(text)
    mentions: list[Mention] = []
    pos = 0
    while pos < len(norm):
        if _valid_start(norm, pos):
            found = gazetteer.longest_match(norm, pos)
            if found is not None:
                key, end = found
                orig_start = spans[pos][0]
                orig_end = spans[end - 1][1]
                for node_id in gazetteer.ids_for(key):
                    mentions.append(
                        Mention(
                            node_id=node_id,
                            segment_id=segment_id,
                            surface=text[orig_start:orig_end],
                            start=orig_start,
                            end=orig_end,
                            cell=cell,
                        )
                    )
                pos = end
                continue
        pos += 1
    return mentions


def recognize(segment: DocumentSegment, gazetteer: Gazetteer) -> list[Mention]:
    """Find all entity mentions in one segment.

    Text segments are scanned whole; table segments are scanned cell by
    cell with offsets local to the cell. Distinct spans never overlap; the
    k mentions of an ambiguous surface share one span.
    """
    if segment.table is not None:
        mentions: list[Mention] = []
        for r, row in enumerate(segment.table):
            for c, cell_text in enumerate(row):
                mentions.extend(_scan_text(cell_text, gazetteer, segment.segment_id, (r, c)))
        return mentions
    return _scan_text(segment.text or "", gazetteer, segment.segment_id, None)


def _doc_of(segment_id: str) -> str:
    parts = segment_id.split(":", 2)
    return parts[1] if len(parts) >= 3 else segment_id


def link_mentions(mentions: list[Mention], graph: GraphStore) -> LinkReport:
    """Write mention and co-occurrence edges for a batch of mentions.

    Each mention becomes one ``mentioned_in`` edge carrying surface and
    span (row/col too for cells); repeats of an entity at different spans
    stay distinct edges. Every unordered entity pair sharing a segment
    gets a symmetric ``cooccurs_with`` edge pair whose ``count`` is the
    number of shared segments, computed over the whole batch and inserted
    once, so feed this the full corpus in one call.
    """
    report = LinkReport()
    by_segment: dict[str, set[str]] = defaultdict(set)
    for mention in mentions:
        properties: dict[str, object] = {
            "surface": mention.surface,
            "start": mention.start,
            "end": mention.end,
        }
        if mention.cell is not None:
            properties["row"], properties["col"] = mention.cell
        outcome = graph.add_edge(
            Edge(
                src=mention.node_id,
                dst=mention.segment_id,
                kind="mentioned_in",
                properties=properties,
                provenance=Provenance(
                    origin=_doc_of(mention.segment_id),
                    locator=mention.segment_id,
                    method="ner",
                ),
            )
        )
        if outcome == "inserted":
            report.edges_created += 1
            report.mention_edges += 1
        by_segment[mention.segment_id].add(mention.node_id)

    pair_counts: dict[tuple[str, str], int] = defaultdict(int)
    pair_first_segment: dict[tuple[str, str], str] = {}
    for segment_id in sorted(by_segment):
        ids = sorted(by_segment[segment_id])
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                pair = (a, b)
                pair_counts[pair] += 1
                pair_first_segment.setdefault(pair, segment_id)

    for (a, b), count in sorted(pair_counts.items()):
        segment_id = pair_first_segment[(a, b)]
        provenance = Provenance(
            origin=_doc_of(segment_id), locator=segment_id, method="cooccurrence"
        )
        for src, dst in ((a, b), (b, a)):
            outcome = graph.add_edge(
                Edge(
                    src=src,
                    dst=dst,
                    kind="cooccurs_with",
                    properties={"count": count},
                    provenance=provenance,
                )
            )
            if outcome == "inserted":
                report.edges_created += 1
                report.cooccurrence_edges += 1
    return report


def extract_facts(
    segment: DocumentSegment,
    mentions: list[Mention],
    graph: GraphStore,
    registry: KeyRegistry,
) -> tuple[list[Fact], int]:
    """Lift facts out of a table whose rows name entities in column 0.

    A data row participates only when its column-0 cell resolves to
    exactly one entity among the given mentions; zero or several distinct
    candidates skip the row (counted). Each (header, value) pair of a
    resolved row becomes a fact: a ``fact`` edge from the entity to the
    table segment and a ``doc_facts`` entry on the entity node. Predicates
    come from the shared key registry when the normalized header is known,
    else ``raw:<normalized header>``.

    Returns (facts, skipped_rows).
    """
    if segment.table is None:
        raise UsageError(f"segment {segment.segment_id} is not a table")
    subjects: dict[int, set[str]] = defaultdict(set)
    for mention in mentions:
        if mention.segment_id != segment.segment_id or mention.cell is None:
            continue
        row, col = mention.cell
        if col == 0 and row >= 1:
            subjects[row].add(mention.node_id)

    facts: list[Fact] = []
    skipped: set[int] = set()
    for row, header, value in flatten_table(segment):
        candidates = subjects.get(row, set())
        if len(candidates) != 1:
            skipped.add(row)
            continue
        value_text = value.strip()
        if not value_text:
            continue
        subject_id = next(iter(candidates))
        header_key = normalize_key(header)
        predicate = header_key if header_key in registry else f"raw:{header_key}"
        provenance = Provenance(
            origin=_doc_of(segment.segment_id),
            locator=f"{segment.segment_id}#row{row}",
            method="fact",
        )
        fact = Fact(
            subject_id=subject_id,
            predicate=predicate,
            value=value_text,
            segment_id=segment.segment_id,
            row=row,
            provenance=provenance,
        )
        facts.append(fact)
        graph.add_edge(
            Edge(
                src=subject_id,
                dst=segment.segment_id,
                kind="fact",
                properties={"predicate": predicate, "value": value_text, "row": row},
                provenance=provenance,
            )
        )
        graph.merge_node_properties(subject_id, {"doc_facts": [f"{predicate}={value_text}"]})

    if skipped:
        logger.info(
            "table %s: skipped rows %s (column 0 unresolved or ambiguous)",
            segment.segment_id,
            sorted(skipped),
        )
    return facts, len(skipped)
