from __future__ import annotations

import json
from pathlib import Path

import pytest

from graphweave.pipeline import Workspace, run_docs, run_ingest, run_link
from graphweave.store import Edge, GraphStore, Node, Provenance

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

SOURCES = [
    ("compounds.descriptor", "compounds.jsonl"),
    ("uniprot.descriptor", "uniprot.jsonl"),
    ("cazy.descriptor", "cazy.jsonl"),
]


def build_corpus(root: Path) -> Workspace:
    """Run the whole pipeline over the bundled fixture corpus."""
    workspace = Workspace(root)
    for descriptor, source in SOURCES:
        run_ingest(workspace, FIXTURES / "descriptors" / descriptor, FIXTURES / "sources" / source)
    run_docs(workspace, FIXTURES / "docs")
    run_link(workspace)
    return workspace


@pytest.fixture(scope="session")
def corpus_workspace(tmp_path_factory) -> Workspace:
    return build_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def corpus_store(corpus_workspace) -> GraphStore:
    store = corpus_workspace.load_store()
    store.freeze()
    return store


@pytest.fixture(scope="session")
def expected() -> dict:
    """Hand-counted expectations for the fixture corpus."""
    return json.loads((FIXTURES / "manifest.json").read_text(encoding="utf-8"))


def put(store: GraphStore, node_id: str, collection: str, label: str, synonyms=None, properties=None) -> str:
    return store.upsert_node(
        Node(id=node_id, collection=collection, label=label, synonyms=synonyms or [], properties=properties or {})
    )


def connect(store: GraphStore, src: str, dst: str, kind: str, properties=None, origin: str = "test", method: str = "declared") -> str:
    prov = Provenance(origin=origin, method=method)
    return store.add_edge(Edge(src=src, dst=dst, kind=kind, provenance=prov, properties=properties or {}))


def tiny_store() -> GraphStore:
    """Two proteins, two compounds, one enzyme family; enough structure
    for edge / traversal tests without the full corpus."""
    store = GraphStore()
    for collection in ("proteins", "compounds", "families"):
        store.register_collection(collection)
    put(store, "src:proteins:P1", "proteins", "Alpha amylase", ["AMY1"], {"length": 512})
    put(store, "src:proteins:P2", "proteins", "Trehalase", [], {"length": 300})
    put(store, "src:compounds:C1", "compounds", "Starch")
    put(store, "src:compounds:C2", "compounds", "Trehalose", ["Mycose"])
    put(store, "src:families:F1", "families", "GH13")
    connect(store, "src:proteins:P1", "src:compounds:C1", "catalyzes")
    connect(store, "src:proteins:P2", "src:compounds:C2", "catalyzes")
    connect(store, "src:families:F1", "src:proteins:P1", "classifies")
    return store
