import json

import pytest

from graphweave.documents import (
    DocumentSegment,
    flatten_table,
    ingest_documents,
    parse_document,
    segments_from_graph,
)
from graphweave.errors import DocumentParseError
from graphweave.store import GraphStore

from .conftest import FIXTURES


def doc(**overrides):
    base = {
        "doc_id": "demo-doc",
        "title": "A Title",
        "elements": [
            {"type": "abstract", "text": "Some overview text."},
            {"type": "paragraph", "text": "  Body text.  "},
            {"type": "figure", "caption": "not text"},
            {"type": "table", "rows": [["compound", "mass"], ["trehalose", "342.30"]]},
        ],
    }
    base.update(overrides)
    return json.dumps(base)


def test_parse_segments_in_order():
    parsed = parse_document(doc())
    assert parsed.doc_id == "demo-doc"
    assert [s.kind for s in parsed.segments] == ["title", "abstract", "paragraph", "table"]
    assert [s.segment_id for s in parsed.segments] == [
        "doc:demo-doc:0",
        "doc:demo-doc:1",
        "doc:demo-doc:2",
        "doc:demo-doc:3",
    ]
    assert parsed.segments[2].text == "Body text."  # stripped
    assert parsed.skipped == 1
    assert parsed.segments[3].table == [["compound", "mass"], ["trehalose", "342.30"]]


def test_title_is_optional():
    parsed = parse_document(doc(title=None))
    assert parsed.segments[0].kind == "abstract"
    assert parsed.segments[0].segment_id == "doc:demo-doc:0"


@pytest.mark.parametrize(
    "broken,message",
    [
        ({"doc_id": None}, "doc_id"),
        ({"doc_id": "has space"}, "node id"),
        ({"doc_id": "has:colon"}, "node id"),
        ({"elements": [], "title": None}, "no segments"),
        ({"elements": [{"type": "paragraph"}]}, r"elements\[0\]"),
        ({"elements": [{"type": "paragraph", "text": "  "}]}, "non-empty"),
        ({"elements": ["not an object"]}, "must be an object"),
    ],
)
def test_parse_rejections(broken, message):
    with pytest.raises(DocumentParseError, match=message):
        parse_document(doc(**broken))


def test_invalid_json_rejected():
    with pytest.raises(DocumentParseError, match="invalid JSON"):
        parse_document("{broken")


def test_ragged_table_names_element():
    payload = doc(
        elements=[
            {"type": "table", "rows": [["a", "b"], ["only one"]]},
        ]
    )
    with pytest.raises(DocumentParseError, match=r"elements\[0\]") as exc_info:
        parse_document(payload)
    assert "ragged" in str(exc_info.value)


def test_table_cell_must_be_scalar():
    payload = doc(elements=[{"type": "table", "rows": [["a"], [["nested"]]]}])
    with pytest.raises(DocumentParseError, match=r"\(1,0\)"):
        parse_document(payload)


def test_numeric_cells_become_text():
    parsed = parse_document(
        doc(elements=[{"type": "table", "rows": [["compound", "mass"], ["x", 342.3]]}])
    )
    table = next(s for s in parsed.segments if s.kind == "table")
    assert table.table[1] == ["x", "342.3"]


def test_attach_and_rebuild_round_trip():
    store = GraphStore()
    parsed = parse_document(doc(), store)
    assert store.has_collection("document")
    rebuilt = segments_from_graph(store)
    assert [(s.segment_id, s.kind, s.index) for s in rebuilt] == [
        (s.segment_id, s.kind, s.index) for s in parsed.segments
    ]
    assert rebuilt[3].table == parsed.segments[3].table
    assert rebuilt[1].text == parsed.segments[1].text

    # labels: texts verbatim (truncated), tables described by shape
    title_node = store.get_node("doc:demo-doc:0")
    assert title_node.label == "A Title"
    table_node = store.get_node("doc:demo-doc:3")
    assert table_node.label == "table 3 (2x2)"

    # re-attaching is a merge that changes nothing
    stats = store.stats()
    parse_document(doc(), store)
    assert store.stats() == stats


def test_long_labels_truncate():
    text = "word " * 40
    parsed = parse_document(doc(elements=[{"type": "paragraph", "text": text}], title=None))
    store = GraphStore()
    parse_document(doc(elements=[{"type": "paragraph", "text": text}], title=None), store)
    node = store.get_node(parsed.segments[0].segment_id)
    assert len(node.label) == 72


def test_flatten_table():
    segment = DocumentSegment(
        segment_id="doc:d:0",
        doc_id="d",
        kind="table",
        index=0,
        table=[
            ["compound", "molar mass", "sweetness"],
            ["trehalose", "342.30", "0.45"],
            ["sucrose", "342.30", "1.00"],
        ],
    )
    assert flatten_table(segment) == [
        (1, "molar mass", "342.30"),
        (1, "sweetness", "0.45"),
        (2, "molar mass", "342.30"),
        (2, "sweetness", "1.00"),
    ]


def test_flatten_header_only_table():
    segment = DocumentSegment(
        segment_id="doc:d:0", doc_id="d", kind="table", index=0, table=[["a", "b"]]
    )
    assert flatten_table(segment) == []


def test_flatten_requires_table():
    segment = DocumentSegment(segment_id="doc:d:0", doc_id="d", kind="paragraph", index=0, text="x")
    with pytest.raises(DocumentParseError):
        flatten_table(segment)


def test_ingest_directory_continues_past_failures(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(doc(), encoding="utf-8")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    store = GraphStore()
    report = ingest_documents(tmp_path, store)
    assert report.documents == 1
    assert report.segments == 4
    assert report.skipped_elements == 1
    assert len(report.failures) == 1
    assert "bad.json" in report.failures[0]


def test_bundled_corpus_counts(expected):
    store = GraphStore()
    report = ingest_documents(FIXTURES / "docs", store)
    assert report.failures == []
    assert report.documents == 1
    assert report.segments == expected["document_segments"]
    assert report.skipped_elements == expected["skipped_elements"]
