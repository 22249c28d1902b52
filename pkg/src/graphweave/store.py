"""In-memory property graph with line-delimited JSON snapshots.

Nodes live in named collections and carry a stable three-segment id
(``<source>:<collection>:<accession>``, ``concept:<kind>:<value>``,
``doc:<docid>:<index>``). Edges are directed, typed, deduplicated by
``(src, dst, kind, canonically-serialized properties)``, and every edge
records where it came from. The store is built single-writer, then frozen
for query and analytics passes.

Snapshots are two sorted JSONL files plus a manifest; loading is
all-or-nothing so a truncated or hand-edited snapshot never yields a
half-populated graph.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .errors import (
    DanglingEdgeError,
    FrozenGraphError,
    MalformedNodeIdError,
    NodeNotFoundError,
    SnapshotError,
    UnknownCollectionError,
    UsageError,
    ValidationError,
)
from .normalize import normalize_surface

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

# Every edge must say how it was produced.
EDGE_METHODS = ("declared", "concept", "ner", "cooccurrence", "fact")

NODES_FILE = "nodes.jsonl"
EDGES_FILE = "edges.jsonl"
MANIFEST_FILE = "manifest.json"

_SCALARS = (str, int, float, bool)
_NODE_FIELDS = {"id", "collection", "label", "synonyms", "properties"}
_EDGE_FIELDS = {"src", "dst", "kind", "properties", "provenance"}

Value = Any  # str | int | float | bool, or a list of those

EdgeKey = tuple[str, str, str, str]


def validate_node_id(node_id: str) -> None:
    """Check the three-segment id shape: scheme:qualifier:local.

    Raises:
        MalformedNodeIdError: empty, containing whitespace, or with fewer
            than two colon separators.
    """
    if not isinstance(node_id, str) or not node_id:
        raise MalformedNodeIdError(f"node id must be a non-empty string, got {node_id!r}")
    if any(ch.isspace() for ch in node_id):
        raise MalformedNodeIdError(f"node id contains whitespace: {node_id!r}")
    if node_id.count(":") < 2:
        raise MalformedNodeIdError(f"node id needs at least two ':' separators: {node_id!r}")


def canonical_properties(properties: dict[str, Value]) -> str:
    """Serialize a property map deterministically (sorted keys, no spaces)."""
    return json.dumps(properties, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _value_sort_key(value: Value) -> tuple[str, str]:
    return (type(value).__name__, str(value))


def normalize_value(value: Value, key: str) -> Value:
    """Validate and canonicalize one property value.

    Scalars pass through; lists are deduplicated and sorted with a
    type-aware key so merge results are independent of arrival order.
    """
    if isinstance(value, bool) or isinstance(value, (str, int, float)):
        return value
    if isinstance(value, list):
        seen: set[tuple[str, Value]] = set()
        out: list[Value] = []
        for item in value:
            if not isinstance(item, _SCALARS):
                raise ValidationError(
                    f"property {key!r}: list elements must be scalars, got {type(item).__name__}"
                )
            marker = (type(item).__name__, item)
            if marker not in seen:
                seen.add(marker)
                out.append(item)
        out.sort(key=_value_sort_key)
        return out
    raise ValidationError(
        f"property {key!r}: values must be scalars or lists of scalars, got {type(value).__name__}"
    )


def _as_list(value: Value) -> list[Value]:
    return list(value) if isinstance(value, list) else [value]


def merge_values(old: Value, new: Value) -> Value:
    """Set-union two property values.

    A pair of equal scalars stays scalar; anything else becomes a sorted,
    deduplicated list. Commutative, associative, idempotent.
    """
    merged = normalize_value(_as_list(old) + _as_list(new), "merge")
    if len(merged) == 1 and not isinstance(old, list) and not isinstance(new, list):
        return merged[0]
    return merged


@dataclass(frozen=True)
class Provenance:
    """Where an edge came from: source or document, locator, and method."""

    origin: str
    locator: str = ""
    method: str = "declared"


@dataclass
class Node:
    id: str
    collection: str
    label: str
    synonyms: list[str] = field(default_factory=list)
    properties: dict[str, Value] = field(default_factory=dict)


@dataclass
class Edge:
    src: str
    dst: str
    kind: str
    provenance: Provenance
    properties: dict[str, Value] = field(default_factory=dict)

    @property
    def key(self) -> EdgeKey:
        return (self.src, self.dst, self.kind, canonical_properties(self.properties))


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    per_collection: dict[str, int]
    per_edge_kind: dict[str, int]


def _dedupe_synonyms(synonyms: list[str], *, context: str) -> list[str]:
    """Drop empties and case-fold duplicates, keep first casing, sort."""
    by_fold: dict[str, str] = {}
    for raw in synonyms:
        if not isinstance(raw, str):
            raise ValidationError(f"{context}: synonyms must be strings, got {type(raw).__name__}")
        surface = raw.strip()
        if not surface:
            continue
        folded = normalize_surface(surface)
        if folded not in by_fold:
            by_fold[folded] = surface
    return sorted(by_fold.values(), key=lambda s: (normalize_surface(s), s))


class GraphStore:
    """Mutable property graph; see module docstring for the data model.

    Nodes returned by accessors are the store's own objects: treat them as
    read-only and go through :meth:`upsert_node` / :meth:`merge_node_properties`
    for changes.
    """

    def __init__(self) -> None:
        self._nodes: dict[str, Node] = {}
        self._edges: dict[EdgeKey, Edge] = {}
        self._out: defaultdict[str, set[EdgeKey]] = defaultdict(set)
        self._in: defaultdict[str, set[EdgeKey]] = defaultdict(set)
        self._collections: set[str] = set()
        self._by_collection: defaultdict[str, set[str]] = defaultdict(set)
        self._by_surface: defaultdict[str, set[str]] = defaultdict(set)
        self._by_accession: defaultdict[tuple[str, str], set[str]] = defaultdict(set)
        self._edge_kinds: Counter[str] = Counter()
        self._frozen = False

    # ------------------------------------------------------------------
    # lifecycle

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> None:
        """Switch to read-only mode; later mutations raise FrozenGraphError."""
        self._frozen = True

    def _check_writable(self) -> None:
        if self._frozen:
            raise FrozenGraphError("graph is frozen; mutations are not allowed")

    # ------------------------------------------------------------------
    # collections

    def register_collection(self, name: str) -> None:
        """Declare a collection. Registering the same name twice is a no-op."""
        self._check_writable()
        if not name or any(ch.isspace() for ch in name) or ":" in name:
            raise ValidationError(f"invalid collection name: {name!r}")
        self._collections.add(name)

    @property
    def collections(self) -> list[str]:
        return sorted(self._collections)

    def has_collection(self, name: str) -> bool:
        return name in self._collections

    # ------------------------------------------------------------------
    # nodes

    def upsert_node(self, node: Node) -> str:
        """Insert or merge a node; returns ``"inserted"`` or ``"merged"``.

        Merge policy: label keeps the first writer's value, synonyms and
        properties union as sets. The id's collection may never change.
        """
        self._check_writable()
        validate_node_id(node.id)
        if node.collection not in self._collections:
            raise UnknownCollectionError(f"collection not registered: {node.collection!r}")
        if not isinstance(node.label, str) or not node.label.strip():
            raise ValidationError(f"node {node.id}: label must be non-empty")
        synonyms = _dedupe_synonyms(node.synonyms, context=f"node {node.id}")
        properties = {k: normalize_value(v, k) for k, v in node.properties.items()}
        for key in properties:
            if not isinstance(key, str) or not key:
                raise ValidationError(f"node {node.id}: property keys must be non-empty strings")

        existing = self._nodes.get(node.id)
        if existing is None:
            stored = Node(
                id=node.id,
                collection=node.collection,
                label=node.label.strip(),
                synonyms=synonyms,
                properties=properties,
            )
            self._nodes[node.id] = stored
            self._by_collection[node.collection].add(node.id)
            self._index_surfaces(stored)
            accession = node.id.split(":", 2)[2]
            self._by_accession[(node.collection, accession)].add(node.id)
            return "inserted"

        if existing.collection != node.collection:
            raise ValidationError(
                f"node {node.id}: collection conflict "
                f"({existing.collection!r} vs {node.collection!r})"
            )
        existing.synonyms = _dedupe_synonyms(existing.synonyms + synonyms, context=f"node {node.id}")
        for key, value in properties.items():
            if key in existing.properties:
                existing.properties[key] = merge_values(existing.properties[key], value)
            else:
                existing.properties[key] = value
        self._index_surfaces(existing)
        return "merged"

    def merge_node_properties(self, node_id: str, properties: dict[str, Value]) -> None:
        """Union extra properties into an existing node."""
        node = self.get_node(node_id)
        self.upsert_node(
            Node(
                id=node.id,
                collection=node.collection,
                label=node.label,
                synonyms=[],
                properties=properties,
            )
        )

    def _index_surfaces(self, node: Node) -> None:
        for surface in [node.label] + node.synonyms:
            folded = normalize_surface(surface)
            if folded:
                self._by_surface[folded].add(node.id)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def get_node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(f"no such node: {node_id}") from None

    def nodes(self) -> Iterator[Node]:
        """All nodes in id order."""
        for node_id in sorted(self._nodes):
            yield self._nodes[node_id]

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    def find_nodes(
        self,
        collection: str | None = None,
        label_or_synonym: str | None = None,
    ) -> list[Node]:
        """Find nodes by collection, surface (case-insensitive), or both.

        Raises:
            UsageError: neither criterion given.
            UnknownCollectionError: collection was never registered.
        """
        if collection is None and label_or_synonym is None:
            raise UsageError("find_nodes needs a collection, a label/synonym, or both")
        if collection is not None and collection not in self._collections:
            raise UnknownCollectionError(f"collection not registered: {collection!r}")
        if label_or_synonym is not None:
            ids = set(self._by_surface.get(normalize_surface(label_or_synonym), ()))
            if collection is not None:
                ids &= self._by_collection.get(collection, set())
        else:
            ids = set(self._by_collection.get(collection, ()))  # type: ignore[arg-type]
        return [self._nodes[i] for i in sorted(ids)]

    def find_by_accession(self, collection: str, accession: str) -> list[Node]:
        """Nodes in a collection whose id's local segment equals ``accession``."""
        ids = self._by_accession.get((collection, accession), set())
        return [self._nodes[i] for i in sorted(ids)]

    # ------------------------------------------------------------------
    # edges

    def add_edge(self, edge: Edge) -> str:
        """Insert an edge; returns ``"inserted"`` or ``"duplicate"``.

        Identity is (src, dst, kind, canonical properties); provenance is
        excluded, so a duplicate keeps the first writer's provenance.
        """
        self._check_writable()
        if edge.src not in self._nodes:
            raise DanglingEdgeError(f"edge source does not exist: {edge.src}")
        if edge.dst not in self._nodes:
            raise DanglingEdgeError(f"edge target does not exist: {edge.dst}")
        if not edge.kind or any(ch.isspace() for ch in edge.kind):
            raise ValidationError(f"invalid edge kind: {edge.kind!r}")
        prov = edge.provenance
        if not isinstance(prov, Provenance) or not prov.origin:
            raise ValidationError("edge provenance needs a non-empty origin")
        if prov.method not in EDGE_METHODS:
            raise ValidationError(
                f"unknown provenance method {prov.method!r}; expected one of {EDGE_METHODS}"
            )
        properties = {k: normalize_value(v, k) for k, v in edge.properties.items()}
        stored = Edge(src=edge.src, dst=edge.dst, kind=edge.kind, provenance=prov, properties=properties)
        key = stored.key
        if key in self._edges:
            return "duplicate"
        self._edges[key] = stored
        self._out[edge.src].add(key)
        self._in[edge.dst].add(key)
        self._edge_kinds[edge.kind] += 1
        return "inserted"

    def edges(self) -> Iterator[Edge]:
        """All edges in canonical key order."""
        for key in sorted(self._edges):
            yield self._edges[key]

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def neighbors(
        self,
        node_id: str,
        kinds: list[str] | None = None,
        direction: str = "both",
    ) -> list[tuple[Edge, Node]]:
        """Adjacent (edge, far node) pairs, deterministically ordered.

        ``direction`` is ``"out"``, ``"in"`` or ``"both"``; under ``both`` a
        self-loop edge appears once. ``kinds`` filters edge kinds.
        """
        if node_id not in self._nodes:
            raise NodeNotFoundError(f"no such node: {node_id}")
        if direction not in ("out", "in", "both"):
            raise UsageError(f"direction must be out/in/both, got {direction!r}")
        wanted = set(kinds) if kinds is not None else None
        keys: set[EdgeKey] = set()
        if direction in ("out", "both"):
            keys |= self._out.get(node_id, set())
        if direction in ("in", "both"):
            keys |= self._in.get(node_id, set())
        pairs: list[tuple[Edge, Node]] = []
        for key in keys:
            edge = self._edges[key]
            if wanted is not None and edge.kind not in wanted:
                continue
            far_id = edge.dst if edge.src == node_id else edge.src
            pairs.append((edge, self._nodes[far_id]))
        pairs.sort(key=lambda pair: (pair[1].id, pair[0].kind, pair[0].key))
        return pairs

    # ------------------------------------------------------------------
    # stats

    def stats(self) -> GraphStats:
        """Counts by collection and edge kind; covers empty collections too."""
        per_collection = {
            name: len(self._by_collection.get(name, ())) for name in sorted(self._collections)
        }
        per_edge_kind = {kind: self._edge_kinds[kind] for kind in sorted(self._edge_kinds)}
        return GraphStats(
            node_count=len(self._nodes),
            edge_count=len(self._edges),
            per_collection=per_collection,
            per_edge_kind=per_edge_kind,
        )

    # ------------------------------------------------------------------
    # snapshots

    def save_snapshot(self, directory: str | Path) -> None:
        """Write nodes.jsonl, edges.jsonl, and manifest.json atomically.

        Files are sorted (nodes by id, edges by identity key) so identical
        graphs produce byte-identical snapshots. The manifest goes last and
        carries counts, so a torn write is detected on load.
        """
        target = Path(directory)
        target.mkdir(parents=True, exist_ok=True)

        node_lines = (
            json.dumps(
                {
                    "id": node.id,
                    "collection": node.collection,
                    "label": node.label,
                    "synonyms": node.synonyms,
                    "properties": node.properties,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            for node in self.nodes()
        )
        _write_atomic(target / NODES_FILE, node_lines)

        edge_lines = (
            json.dumps(
                {
                    "src": edge.src,
                    "dst": edge.dst,
                    "kind": edge.kind,
                    "properties": edge.properties,
                    "provenance": {
                        "origin": edge.provenance.origin,
                        "locator": edge.provenance.locator,
                        "method": edge.provenance.method,
                    },
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            for edge in self.edges()
        )
        _write_atomic(target / EDGES_FILE, edge_lines)

        manifest = {
            "format_version": FORMAT_VERSION,
            "collections": self.collections,
            "node_count": self.node_count,
            "edge_count": self.edge_count,
        }
        _write_atomic(
            target / MANIFEST_FILE,
            [json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2)],
        )
        logger.info(
            "snapshot written to %s (%d nodes, %d edges)", target, self.node_count, self.edge_count
        )


def _write_atomic(path: Path, lines) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            for line in lines:
                handle.write(line)
                handle.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def load_snapshot(directory: str | Path) -> GraphStore:
    """Load a snapshot directory into a fresh writable store.

    All-or-nothing: any malformed line, unknown field, dangling edge, or
    count mismatch raises :class:`SnapshotError` naming file and line, and
    no partially loaded store escapes.
    """
    target = Path(directory)
    manifest_path = target / MANIFEST_FILE
    if not manifest_path.is_file():
        raise SnapshotError("snapshot manifest missing", path=str(manifest_path))
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"unreadable manifest: {exc}", path=str(manifest_path)) from exc
    if not isinstance(manifest, dict) or manifest.get("format_version") != FORMAT_VERSION:
        raise SnapshotError(
            f"unsupported format_version {manifest.get('format_version')!r}",
            path=str(manifest_path),
        )
    collections = manifest.get("collections")
    if not isinstance(collections, list) or not all(isinstance(c, str) for c in collections):
        raise SnapshotError("manifest collections must be a list of names", path=str(manifest_path))

    store = GraphStore()
    for name in collections:
        try:
            store.register_collection(name)
        except ValidationError as exc:
            raise SnapshotError(str(exc), path=str(manifest_path)) from exc

    nodes_path = target / NODES_FILE
    edges_path = target / EDGES_FILE
    for path in (nodes_path, edges_path):
        if not path.is_file():
            raise SnapshotError("snapshot file missing", path=str(path))

    for line_no, record in _read_jsonl(nodes_path):
        unknown = set(record) - _NODE_FIELDS
        if unknown:
            raise SnapshotError(
                f"unknown node fields: {sorted(unknown)}", path=str(nodes_path), line=line_no
            )
        for required in ("id", "collection", "label"):
            if required not in record:
                raise SnapshotError(
                    f"node record missing {required!r}", path=str(nodes_path), line=line_no
                )
        node = Node(
            id=record["id"],
            collection=record["collection"],
            label=record["label"],
            synonyms=record.get("synonyms", []),
            properties=record.get("properties", {}),
        )
        try:
            outcome = store.upsert_node(node)
        except ValidationError as exc:
            raise SnapshotError(str(exc), path=str(nodes_path), line=line_no) from exc
        if outcome != "inserted":
            raise SnapshotError(
                f"duplicate node id {node.id!r}", path=str(nodes_path), line=line_no
            )

    for line_no, record in _read_jsonl(edges_path):
        unknown = set(record) - _EDGE_FIELDS
        if unknown:
            raise SnapshotError(
                f"unknown edge fields: {sorted(unknown)}", path=str(edges_path), line=line_no
            )
        for required in ("src", "dst", "kind", "provenance"):
            if required not in record:
                raise SnapshotError(
                    f"edge record missing {required!r}", path=str(edges_path), line=line_no
                )
        prov = record["provenance"]
        if not isinstance(prov, dict) or "origin" not in prov:
            raise SnapshotError("edge provenance malformed", path=str(edges_path), line=line_no)
        edge = Edge(
            src=record["src"],
            dst=record["dst"],
            kind=record["kind"],
            properties=record.get("properties", {}),
            provenance=Provenance(
                origin=prov.get("origin", ""),
                locator=prov.get("locator", ""),
                method=prov.get("method", "declared"),
            ),
        )
        try:
            outcome = store.add_edge(edge)
        except (ValidationError, DanglingEdgeError) as exc:
            raise SnapshotError(str(exc), path=str(edges_path), line=line_no) from exc
        if outcome != "inserted":
            raise SnapshotError("duplicate edge record", path=str(edges_path), line=line_no)

    expected_nodes = manifest.get("node_count")
    expected_edges = manifest.get("edge_count")
    if expected_nodes is not None and expected_nodes != store.node_count:
        raise SnapshotError(
            f"manifest claims {expected_nodes} nodes, files hold {store.node_count}",
            path=str(manifest_path),
        )
    if expected_edges is not None and expected_edges != store.edge_count:
        raise SnapshotError(
            f"manifest claims {expected_edges} edges, files hold {store.edge_count}",
            path=str(manifest_path),
        )
    return store


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict[str, Any]]]:
    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                raise SnapshotError("blank line in snapshot file", path=str(path), line=line_no)
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SnapshotError(f"invalid JSON: {exc.msg}", path=str(path), line=line_no) from exc
            if not isinstance(record, dict):
                raise SnapshotError("record must be a JSON object", path=str(path), line=line_no)
            yield line_no, record
