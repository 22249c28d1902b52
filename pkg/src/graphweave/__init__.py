"""graphweave: property-graph construction and query toolkit.

Build a knowledge graph from heterogeneous structured sources and a
converted-document corpus, bridge sources through shared concept values,
recognize entity mentions in text, and answer questions with small
declarative workflow DAGs.
"""

from .analytics import connected_components, degree_centrality, label_propagation
from .descriptors import KeyRegistry, SourceDescriptor, load_descriptor
from .documents import DocumentSegment, ParsedDocument, flatten_table, parse_document
from .errors import GraphweaveError
from .ingest import EntityDocument, IngestReport, RawRecord, ingest_source, normalize_record
from .linker import LinkReport, materialize_concepts, resolve_relations
from .ner import Fact, Gazetteer, Mention, build_gazetteer, extract_facts, link_mentions, recognize
from .normalize import ConceptKey, normalize_ec, normalize_key, normalize_surface
from .pipeline import Workspace, run_docs, run_ingest, run_link, run_query
from .store import Edge, GraphStats, GraphStore, Node, Provenance, load_snapshot
from .workflow import Workflow, execute, parse_workflow, validate_dag

__version__ = "0.1.0"

__all__ = [
    "ConceptKey",
    "DocumentSegment",
    "Edge",
    "EntityDocument",
    "Fact",
    "Gazetteer",
    "GraphStats",
    "GraphStore",
    "GraphweaveError",
    "IngestReport",
    "KeyRegistry",
    "LinkReport",
    "Mention",
    "Node",
    "ParsedDocument",
    "Provenance",
    "RawRecord",
    "SourceDescriptor",
    "Workflow",
    "Workspace",
    "build_gazetteer",
    "connected_components",
    "degree_centrality",
    "execute",
    "extract_facts",
    "flatten_table",
    "ingest_source",
    "label_propagation",
    "link_mentions",
    "load_descriptor",
    "load_snapshot",
    "materialize_concepts",
    "normalize_ec",
    "normalize_key",
    "normalize_record",
    "normalize_surface",
    "parse_document",
    "parse_workflow",
    "recognize",
    "resolve_relations",
    "run_docs",
    "run_ingest",
    "run_link",
    "run_query",
    "validate_dag",
]
