"""Whole-graph analytics over a frozen store.

All three metrics view the graph the same way: degree counts directed
edge endpoints (a self-loop adds two), while components and clustering
use the undirected distinct-neighbor view (parallel and reverse edges
collapse, self-loops drop out). Every result is deterministically
ordered so repeated runs and serialized outputs compare byte-equal.
"""

from __future__ import annotations

import logging
import random
from collections import Counter, defaultdict

from .errors import GraphNotFrozenError, UnknownCollectionError
from .store import GraphStore

logger = logging.getLogger(__name__)


def _require_frozen(graph: GraphStore) -> None:
    if not graph.frozen:
        raise GraphNotFrozenError("freeze the graph before running analytics")


def _undirected_adjacency(graph: GraphStore) -> dict[str, set[str]]:
    adjacency: dict[str, set[str]] = defaultdict(set)
    for node in graph.nodes():
        adjacency.setdefault(node.id, set())
    for edge in graph.edges():
        if edge.src != edge.dst:
            adjacency[edge.src].add(edge.dst)
            adjacency[edge.dst].add(edge.src)
    return adjacency


def degree_centrality(
    graph: GraphStore, collection: str | None = None
) -> list[tuple[str, int]]:
    """Per-node degree (in + out), sorted by descending degree then id.

    ``collection`` restricts which nodes are reported; edges to other
    collections still count toward the degree.
    """
    _require_frozen(graph)
    if collection is not None and not graph.has_collection(collection):
        raise UnknownCollectionError(f"collection not registered: {collection!r}")
    degrees: Counter[str] = Counter()
    for edge in graph.edges():
        degrees[edge.src] += 1
        degrees[edge.dst] += 1
    rows = [
        (node.id, degrees.get(node.id, 0))
        for node in graph.nodes()
        if collection is None or node.collection == collection
    ]
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows


def connected_components(graph: GraphStore) -> list[list[str]]:
    """Undirected components: members id-sorted, components ordered by
    descending size, ties by smallest member id."""
    _require_frozen(graph)
    adjacency = _undirected_adjacency(graph)
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        member_set = {start}
        queue = [start]
        while queue:
            current = queue.pop()
            for neighbor in adjacency[current]:
                if neighbor not in member_set:
                    member_set.add(neighbor)
                    queue.append(neighbor)
        seen |= member_set
        components.append(sorted(member_set))
    components.sort(key=lambda members: (-len(members), members[0]))
    return components


def label_propagation(
    graph: GraphStore, seed: int = 0, max_iters: int = 100
) -> list[list[str]]:
    """Synchronous label propagation clustering.

    Initial labels are the integers 0..n-1 dealt over a seeded shuffle of
    the canonical node order. Each round every node takes its neighbors'
    most frequent label (ties to the lowest number); isolated nodes keep
    their own. Stops at a fixpoint or ``max_iters`` (synchronous updates
    can oscillate on bipartite structures, hence the cap). Same seed,
    same clusters; clusters are ordered like components.
    """
    _require_frozen(graph)
    adjacency = _undirected_adjacency(graph)
    order = sorted(adjacency)
    shuffled = list(order)
    random.Random(seed).shuffle(shuffled)
    labels = {node_id: position for position, node_id in enumerate(shuffled)}

    for iteration in range(max_iters):
        updated: dict[str, int] = {}
        for node_id in order:
            neighbors = adjacency[node_id]
            if not neighbors:
                updated[node_id] = labels[node_id]
                continue
            counts = Counter(labels[neighbor] for neighbor in neighbors)
            top = max(counts.values())
            updated[node_id] = min(label for label, count in counts.items() if count == top)
        if updated == labels:
            logger.debug("label propagation converged after %d iterations", iteration + 1)
            break
        labels = updated

    grouped: dict[int, list[str]] = defaultdict(list)
    for node_id in order:
        grouped[labels[node_id]].append(node_id)
    clusters = [sorted(members) for members in grouped.values()]
    clusters.sort(key=lambda members: (-len(members), members[0]))
    return clusters
