"""Document corpus ingestion: converted-book JSON into segment nodes.

A converted document arrives as one JSON object holding a ``doc_id``, an
optional ``title``, and an ordered ``elements`` list mixing abstracts,
section titles, paragraphs, and tables (grids of strings). Each usable
element becomes a segment node ``doc:<docid>:<index>`` in the ``document``
collection; unrecognized element types (figures in textual form, etc.) are
skipped with a count, never an error.

Example document::

    {
      "doc_id": "handbook-carbo-eng",
      "title": "Handbook of Carbohydrate Engineering (excerpt)",
      "elements": [
        {"type": "abstract", "text": "Trehalose is a disaccharide..."},
        {"type": "section_title", "text": "Biosynthesis"},
        {"type": "paragraph", "text": "In Mycobacterium tuberculosis..."},
        {"type": "table", "rows": [["compound", "molar mass"],
                                   ["trehalose", "342.30"]]}
      ]
    }
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DocumentParseError
from .store import GraphStore, Node

logger = logging.getLogger(__name__)

DOCUMENT_COLLECTION = "document"

TEXT_KINDS = ("title", "abstract", "section_title", "paragraph")
SEGMENT_KINDS = TEXT_KINDS + ("table",)

_LABEL_WIDTH = 72


@dataclass
class DocumentSegment:
    """One attachable unit of a document: a text span or a table grid."""

    segment_id: str
    doc_id: str
    kind: str
    index: int
    text: str | None = None
    table: list[list[str]] | None = None


@dataclass
class ParsedDocument:
    doc_id: str
    title: str | None
    segments: list[DocumentSegment] = field(default_factory=list)
    skipped: int = 0


@dataclass
class DocReport:
    documents: int = 0
    segments: int = 0
    skipped_elements: int = 0
    failures: list[str] = field(default_factory=list)


def segment_node_id(doc_id: str, index: int) -> str:
    return f"doc:{doc_id}:{index}"


def _segment_label(segment: DocumentSegment) -> str:
    if segment.table is not None:
        rows = len(segment.table)
        cols = len(segment.table[0]) if rows else 0
        return f"table {segment.index} ({rows}x{cols})"
    text = segment.text or ""
    return text if len(text) <= _LABEL_WIDTH else text[:_LABEL_WIDTH]


def _parse_table_rows(raw_rows: object, element: str) -> list[list[str]]:
    if not isinstance(raw_rows, list) or not raw_rows:
        raise DocumentParseError("table needs a non-empty 'rows' list", element=element)
    rows: list[list[str]] = []
    for r, raw_row in enumerate(raw_rows):
        if not isinstance(raw_row, list):
            raise DocumentParseError(f"row {r} is not a list", element=element)
        cells: list[str] = []
        for c, cell in enumerate(raw_row):
            if isinstance(cell, (dict, list)):
                raise DocumentParseError(f"cell ({r},{c}) is not a scalar", element=element)
            cells.append("" if cell is None else str(cell))
        rows.append(cells)
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DocumentParseError(
                f"ragged table: row {r} has {len(row)} cells, header has {width}",
                element=element,
            )
    return rows


def parse_document(json_text: str, graph: GraphStore | None = None) -> ParsedDocument:
    """Parse one converted document; optionally attach segments to a graph.

    A document-level ``title`` becomes segment 0. Segment indexes run over
    emitted segments in order. When ``graph`` is given, each segment is
    upserted as a node in the ``document`` collection (registered on
    demand); tables are stored as a JSON string property since node values
    are flat.

    Raises:
        DocumentParseError: invalid JSON, missing/unusable doc_id, a text
            element without text, a ragged or empty table (naming the
            element), or a document that yields no segments at all.
    """
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise DocumentParseError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise DocumentParseError("document must be a JSON object")

    doc_id = data.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id.strip():
        raise DocumentParseError("missing or empty doc_id")
    doc_id = doc_id.strip()
    if any(ch.isspace() for ch in doc_id) or ":" in doc_id:
        raise DocumentParseError(f"doc_id {doc_id!r} cannot appear in a node id")

    title = data.get("title")
    if title is not None and not isinstance(title, str):
        raise DocumentParseError("title must be a string")

    elements = data.get("elements", [])
    if not isinstance(elements, list):
        raise DocumentParseError("elements must be a list")

    parsed = ParsedDocument(doc_id=doc_id, title=title)

    def emit(kind: str, text: str | None, table: list[list[str]] | None) -> None:
        index = len(parsed.segments)
        parsed.segments.append(
            DocumentSegment(
                segment_id=segment_node_id(doc_id, index),
                doc_id=doc_id,
                kind=kind,
                index=index,
                text=text,
                table=table,
            )
        )

    if title and title.strip():
        emit("title", title.strip(), None)

    for i, element in enumerate(elements):
        where = f"elements[{i}]"
        if not isinstance(element, dict):
            raise DocumentParseError("element must be an object", element=where)
        kind = element.get("type")
        if kind == "table":
            emit("table", None, _parse_table_rows(element.get("rows"), where))
        elif kind in TEXT_KINDS:
            text = element.get("text")
            if not isinstance(text, str) or not text.strip():
                raise DocumentParseError("text element needs non-empty 'text'", element=where)
            emit(kind, text.strip(), None)
        else:
            parsed.skipped += 1
            logger.debug("skipping element %s of unrecognized type %r", where, kind)

    if not parsed.segments:
        raise DocumentParseError(f"document {doc_id!r} yields no segments")

    if graph is not None:
        attach_segments(parsed, graph)
    return parsed


def attach_segments(parsed: ParsedDocument, graph: GraphStore) -> None:
    """Upsert one node per segment. Re-attaching the same parse is a merge
    that changes nothing."""
    graph.register_collection(DOCUMENT_COLLECTION)
    for segment in parsed.segments:
        properties: dict[str, object] = {
            "doc_id": segment.doc_id,
            "kind": segment.kind,
            "segment_index": segment.index,
        }
        if segment.table is not None:
            properties["table"] = json.dumps(segment.table, ensure_ascii=False)
        else:
            properties["text"] = segment.text or ""
        graph.upsert_node(
            Node(
                id=segment.segment_id,
                collection=DOCUMENT_COLLECTION,
                label=_segment_label(segment),
                properties=properties,
            )
        )


def segments_from_graph(graph: GraphStore) -> list[DocumentSegment]:
    """Rebuild segment objects from attached nodes (for the linking pass)."""
    segments: list[DocumentSegment] = []
    if not graph.has_collection(DOCUMENT_COLLECTION):
        return segments
    for node in graph.find_nodes(collection=DOCUMENT_COLLECTION):
        props = node.properties
        table = None
        if "table" in props:
            table = json.loads(props["table"])
        segments.append(
            DocumentSegment(
                segment_id=node.id,
                doc_id=str(props.get("doc_id", "")),
                kind=str(props.get("kind", "paragraph")),
                index=int(props.get("segment_index", 0)),
                text=props.get("text"),
                table=table,
            )
        )
    segments.sort(key=lambda s: (s.doc_id, s.index))
    return segments


def flatten_table(segment: DocumentSegment) -> list[tuple[int, str, str]]:
    """Flatten a table into (row_index, header, cell) triples.

    The first row is the header, column 0 names the row entity, so a table
    with R rows and C columns yields (R-1)*(C-1) triples. Row indexes are
    1-based (they count data rows as laid out in the grid). A header-only
    table yields nothing and logs a warning.
    """
    if segment.table is None:
        raise DocumentParseError(f"segment {segment.segment_id} is not a table")
    rows = segment.table
    if len(rows) < 2:
        logger.warning("table %s has no data rows", segment.segment_id)
        return []
    header = rows[0]
    triples: list[tuple[int, str, str]] = []
    for r, row in enumerate(rows[1:], start=1):
        for c in range(1, len(header)):
            triples.append((r, header[c], row[c]))
    return triples


def load_document_file(path: str | Path, graph: GraphStore | None = None) -> ParsedDocument:
    """Parse a document file; errors carry the file name."""
    file_path = Path(path)
    text = file_path.read_text(encoding="utf-8")
    try:
        return parse_document(text, graph)
    except DocumentParseError as exc:
        raise DocumentParseError(f"{file_path.name}: {exc}") from exc


def ingest_documents(directory: str | Path, graph: GraphStore) -> DocReport:
    """Parse every ``*.json`` file under a directory (sorted, recursive).

    Per-file parse failures are recorded and the batch continues; the
    report's ``failures`` list lets the caller decide how loudly to fail.
    """
    report = DocReport()
    paths = sorted(Path(directory).rglob("*.json"))
    for path in paths:
        try:
            parsed = load_document_file(path, graph)
        except DocumentParseError as exc:
            report.failures.append(str(exc))
            logger.error("failed to parse %s: %s", path, exc)
            continue
        except OSError as exc:
            report.failures.append(f"{path.name}: {exc}")
            logger.error("failed to read %s: %s", path, exc)
            continue
        report.documents += 1
        report.segments += len(parsed.segments)
        report.skipped_elements += parsed.skipped
    logger.info(
        "documents: %d parsed, %d segments, %d skipped elements, %d failures",
        report.documents,
        report.segments,
        report.skipped_elements,
        len(report.failures),
    )
    return report
