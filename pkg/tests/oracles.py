"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive and self-contained: no trie, no
topological sort, no incremental bookkeeping. The implementations scan,
re-derive, and brute-force so that agreement with the real code is
meaningful. Keep them slow and obvious.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def norm_text(raw: str) -> str:
    return " ".join(raw.split()).casefold()


# ---------------------------------------------------------------------------
# Entity recognition


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def naive_mentions(
    text: str, entries: dict[str, list[str]]
) -> set[tuple[str, str, int, int]]:
    """Reference scanner: (node_id, surface, start, end) tuples.

    Normalizes by whitespace-collapse + casefold while remembering, for
    every normalized character, which original characters produced it.
    Then tries every (position, entry) pair, keeps the longest
    word-bounded match at each start, and skips past each match
    (leftmost-longest, non-overlapping).
    """
    norm_chars: list[str] = []
    origins: list[tuple[int, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            j = i
            while j < len(text) and text[j].isspace():
                j += 1
            # interior runs collapse to one space; edges vanish
            if norm_chars and j < len(text):
                norm_chars.append(" ")
                origins.append((i, j))
            i = j
            continue
        folded = ch.casefold()
        for out in folded:
            norm_chars.append(out)
            origins.append((i, i + 1))
        i += 1
    norm = "".join(norm_chars)

    keys: dict[str, list[str]] = {}
    for surface, ids in entries.items():
        key = norm_text(surface)
        if len(key) >= 3:
            keys.setdefault(key, [])
            for node_id in ids:
                if node_id not in keys[key]:
                    keys[key].append(node_id)

    found: set[tuple[str, str, int, int]] = set()
    pos = 0
    while pos < len(norm):
        if pos > 0 and _is_word_char(norm[pos - 1]) and _is_word_char(norm[pos]):
            pos += 1
            continue
        best: str | None = None
        for key in keys:
            if not norm.startswith(key, pos):
                continue
            end = pos + len(key)
            if end < len(norm) and _is_word_char(norm[end - 1]) and _is_word_char(norm[end]):
                continue
            if best is None or len(key) > len(best):
                best = key
        if best is None:
            pos += 1
            continue
        end = pos + len(best)
        start_orig = origins[pos][0]
        end_orig = origins[end - 1][1]
        surface = text[start_orig:end_orig]
        for node_id in keys[best]:
            found.add((node_id, surface, start_orig, end_orig))
        pos = end
    return found


# ---------------------------------------------------------------------------
# Workflow evaluation


@dataclass
class OracleGraph:
    """Plain-dict view of a graph: the oracle never touches GraphStore."""

    nodes: dict[str, dict[str, Any]] = field(default_factory=dict)
    edges: list[tuple[str, str, str]] = field(default_factory=list)


def graph_view(store: Any) -> OracleGraph:
    """Extract an OracleGraph from a GraphStore via its public API only."""
    view = OracleGraph()
    for node in store.nodes():
        view.nodes[node.id] = {
            "collection": node.collection,
            "label": node.label,
            "synonyms": list(node.synonyms),
            "properties": dict(node.properties),
        }
    for edge in store.edges():
        view.edges.append((edge.src, edge.dst, edge.kind))
    return view


def _label_matches(node: dict[str, Any], wanted: str) -> bool:
    target = norm_text(wanted)
    if norm_text(node["label"]) == target:
        return True
    return any(norm_text(s) == target for s in node["synonyms"])


def _oracle_lookup(view: OracleGraph, params: dict[str, Any]) -> set[str]:
    out = set()
    for node_id, node in view.nodes.items():
        if node["collection"] != params["collection"]:
            continue
        label = params.get("label")
        if label is None or _label_matches(node, label):
            out.add(node_id)
    return out


def _oracle_traverse(
    view: OracleGraph, seeds: set[str], params: dict[str, Any]
) -> set[str]:
    kinds = params.get("edge_kinds")
    direction = params.get("direction", "both")
    depth = params.get("depth", 1)
    frontier = set(seeds)
    reached: set[str] = set()
    for _ in range(depth):
        nxt = set()
        for src, dst, kind in view.edges:
            if kinds is not None and kind not in kinds:
                continue
            if direction in ("out", "both") and src in frontier:
                nxt.add(dst)
            if direction in ("in", "both") and dst in frontier:
                nxt.add(src)
        nxt -= seeds | reached
        reached |= nxt
        frontier = nxt
    target = params.get("target_collection")
    if target is not None:
        reached = {n for n in reached if view.nodes[n]["collection"] == target}
    return reached


def _oracle_filter(view: OracleGraph, inputs: set[str], params: dict[str, Any]) -> set[str]:
    key = params["key"]
    comparator = params["comparator"]
    value = params.get("value")
    out = set()
    for node_id in inputs:
        props = view.nodes[node_id]["properties"]
        if comparator == "exists":
            if key in props:
                out.add(node_id)
            continue
        if key not in props:
            continue
        stored = props[key]
        items = stored if isinstance(stored, list) else [stored]
        if comparator == "eq":
            if any(item == value or str(item) == str(value) for item in items):
                out.add(node_id)
        elif comparator == "contains":
            needle = str(value).casefold()
            if any(needle in str(item).casefold() for item in items):
                out.add(node_id)
    return out


def _oracle_anti_join(
    view: OracleGraph, inputs: set[str], params: dict[str, Any]
) -> set[str]:
    excluded = params["excluded_collection"]
    kinds = params.get("edge_kinds")
    out = set()
    for node_id in inputs:
        linked = False
        for src, dst, kind in view.edges:
            if kinds is not None and kind not in kinds:
                continue
            other = None
            if src == node_id:
                other = dst
            elif dst == node_id:
                other = src
            if other is not None and view.nodes[other]["collection"] == excluded:
                linked = True
                break
        if not linked:
            out.add(node_id)
    return out


def oracle_execute(
    steps: list[dict[str, Any]], view: OracleGraph
) -> dict[str, set[str]]:
    """Evaluate steps by repeated passes: run every step whose inputs are
    all already evaluated, until nothing changes. No ordering logic."""
    results: dict[str, set[str]] = {}
    remaining = list(steps)
    while remaining:
        progressed = False
        for step in list(remaining):
            inputs = step.get("inputs", [])
            if any(name not in results for name in inputs):
                continue
            sets = [results[name] for name in inputs]
            op = step["op"]
            params = step.get("params", {})
            if op == "lookup":
                value = _oracle_lookup(view, params)
            elif op == "traverse":
                value = _oracle_traverse(view, sets[0], params)
            elif op == "filter":
                value = _oracle_filter(view, sets[0], params)
            elif op == "anti_join":
                value = _oracle_anti_join(view, sets[0], params)
            elif op == "intersect":
                value = set.intersection(*sets)
            elif op == "union":
                value = set.union(*sets)
            elif op == "difference":
                value = sets[0].difference(*sets[1:])
            elif op == "limit":
                value = set(sorted(sets[0])[: params["n"]])
            else:  # pragma: no cover - generator never emits other ops
                raise AssertionError(f"oracle got unknown op {op!r}")
            results[step["id"]] = value
            remaining.remove(step)
            progressed = True
        if not progressed:
            raise AssertionError("oracle stuck: unsatisfiable step inputs")
    return results


# ---------------------------------------------------------------------------
# Components (union-find, which the package does not use)


class DisjointSet:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def oracle_components(node_ids: list[str], edges: list[tuple[str, str]]) -> set[frozenset[str]]:
    dsu = DisjointSet()
    for node_id in node_ids:
        dsu.add(node_id)
    for a, b in edges:
        dsu.union(a, b)
    groups: dict[str, set[str]] = {}
    for node_id in node_ids:
        groups.setdefault(dsu.find(node_id), set()).add(node_id)
    return {frozenset(members) for members in groups.values()}


# ---------------------------------------------------------------------------
# Randomized instances (seeded by the caller, so failures replay)

# Deliberately collision-rich: words that prefix each other, appear inside
# multi-word phrases, and recur in scanned text.
NER_WORDS = [
    "alpha",
    "alp",
    "amylase",
    "alpha-amylase",
    "beta",
    "trehalose",
    "tre",
    "synthase",
    "trehalose synthase",
    "phosphate",
    "6-phosphate",
    "maltose",
    "glucan",
    "acid",
    "ase",
]

_NER_FILLER = ["of", "the", "and", "12", "x", "unrelated", "_w"]


def gen_ner_instance(rng: Any) -> tuple[str, dict[str, list[str]]]:
    """One randomized recognition case: (text, surface -> node ids)."""
    node_ids = [f"g:ent:N{i}" for i in range(8)]
    entries: dict[str, list[str]] = {}
    for _ in range(rng.randint(1, 20)):
        words = [rng.choice(NER_WORDS) for _ in range(rng.randint(1, 3))]
        surface = rng.choice([" ", " ", "-"]).join(words)
        surface = "".join(ch.upper() if rng.random() < 0.25 else ch for ch in surface)
        bucket = entries.setdefault(surface, [])
        for node_id in rng.sample(node_ids, rng.randint(1, 2)):
            if node_id not in bucket:
                bucket.append(node_id)

    budget = rng.randint(10, 200)
    pieces: list[str] = []
    length = 0
    while length < budget:
        token = rng.choice(NER_WORDS + _NER_FILLER)
        if rng.random() < 0.3:
            token = token.capitalize()
        separator = rng.choice([" ", " ", "  ", ", ", ". ", "-", "\t", "\n", ""])
        pieces.append(token + separator)
        length += len(token) + len(separator)
    text = "".join(pieces)[:200]
    return text, entries


GRAPH_LABELS = ["Amylase", "Trehalose", "Synthase", "GH13", "Kinase", "Mycose"]
GRAPH_KINDS = ["binds", "catalyzes", "member_of"]


def gen_graph_case(rng: Any) -> tuple[list[str], list[tuple], list[tuple[str, str, str]]]:
    """Random small graph: (collections, node tuples, edge triples)."""
    collections = ["proteins", "compounds", "families"][: rng.randint(2, 3)]
    nodes = []
    for i in range(rng.randint(4, 30)):
        coll = rng.choice(collections)
        props: dict[str, Any] = {}
        if rng.random() < 0.7:
            props["mass"] = rng.randint(1, 5)
        if rng.random() < 0.5:
            props["tags"] = sorted(set(rng.sample(["a", "b", "c", "longtag"], rng.randint(1, 2))))
        if rng.random() < 0.3:
            props["note"] = rng.choice(["alpha helix", "Beta sheet", "plain"])
        nodes.append(
            (
                f"g:{coll}:N{i:02d}",
                coll,
                rng.choice(GRAPH_LABELS),
                rng.sample(GRAPH_LABELS, rng.randint(0, 2)),
                props,
            )
        )
    ids = [n[0] for n in nodes]
    edges = set()
    for _ in range(rng.randint(0, 60)):
        edges.add((rng.choice(ids), rng.choice(ids), rng.choice(GRAPH_KINDS)))
    return collections, nodes, sorted(edges)


def gen_workflow_steps(rng: Any, collections: list[str]) -> list[dict[str, Any]]:
    """Random DAG of at most 5 steps; step dicts carry a 'params' map."""
    steps: list[dict[str, Any]] = []

    def lookup_params() -> dict[str, Any]:
        params: dict[str, Any] = {"collection": rng.choice(collections)}
        if rng.random() < 0.75:
            label = rng.choice(GRAPH_LABELS)
            params["label"] = label.upper() if rng.random() < 0.3 else label
        return params

    steps.append({"id": "s0", "op": "lookup", "inputs": [], "params": lookup_params()})
    for i in range(1, rng.randint(1, 5)):
        prior = [s["id"] for s in steps]
        ops = ["lookup", "traverse", "filter", "anti_join", "limit"]
        if len(prior) >= 2:
            ops += ["intersect", "union", "difference"]
        op = rng.choice(ops)
        step: dict[str, Any] = {"id": f"s{i}", "op": op}
        if op == "lookup":
            step["inputs"] = []
            step["params"] = lookup_params()
        elif op in ("intersect", "union", "difference"):
            step["inputs"] = rng.sample(prior, 2)
            step["params"] = {}
        else:
            step["inputs"] = [rng.choice(prior)]
            if op == "traverse":
                params = {}
                if rng.random() < 0.6:
                    params["edge_kinds"] = rng.sample(GRAPH_KINDS, rng.randint(1, 2))
                if rng.random() < 0.7:
                    params["direction"] = rng.choice(["out", "in", "both"])
                if rng.random() < 0.7:
                    params["depth"] = rng.randint(1, 3)
                if rng.random() < 0.4:
                    params["target_collection"] = rng.choice(collections)
                step["params"] = params
            elif op == "filter":
                key = rng.choice(["mass", "tags", "note", "absent"])
                comparator = rng.choice(["eq", "contains", "exists"])
                params = {"key": key, "comparator": comparator}
                if comparator != "exists":
                    params["value"] = rng.choice([1, 3, "a", "alpha", "ALPHA", "5"])
                step["params"] = params
            elif op == "anti_join":
                params = {"excluded_collection": rng.choice(collections)}
                if rng.random() < 0.5:
                    params["edge_kinds"] = rng.sample(GRAPH_KINDS, rng.randint(1, 2))
                step["params"] = params
            else:  # limit
                step["params"] = {"n": rng.randint(0, 5)}
        steps.append(step)
    steps[-1]["output"] = True
    return steps


def workflow_yaml(name: str, steps: list[dict[str, Any]]) -> str:
    """Render generated steps in the on-disk format (params inline)."""
    import yaml

    rendered = []
    for step in steps:
        entry: dict[str, Any] = {"id": step["id"], "op": step["op"]}
        if step.get("inputs"):
            entry["inputs"] = list(step["inputs"])
        entry.update(step.get("params", {}))
        if step.get("output"):
            entry["output"] = True
        rendered.append(entry)
    return yaml.safe_dump({"name": name, "steps": rendered}, sort_keys=False)


# ---------------------------------------------------------------------------
# EC numbers: a generator for valid shapes plus a reference canonical form


def reference_ec(fields: list[int | None]) -> str:
    """Canonical text for four EC fields; None is a dash placeholder."""
    return ".".join("-" if f is None else str(f) for f in fields)


def vary_ec(fields: list[int | None], rng: Any) -> str:
    """Render the fields in one of the accepted input shapes."""
    parts = []
    for f in fields:
        if f is None:
            parts.append("-")
        else:
            pad = "0" * rng.randint(0, 2) if rng.random() < 0.4 else ""
            parts.append(pad + str(f))
    body = ".".join(parts)
    prefix = rng.choice(["", "EC", "ec", "Ec", "eC"])
    if prefix:
        sep = rng.choice([" ", ":", "  ", ": ", " :", ""])
        body = prefix + sep + body
    body = rng.choice(["", " ", "\t"]) + body
    body += rng.choice(["", ";", " ", ";\t", "  ", "; "])
    return body
