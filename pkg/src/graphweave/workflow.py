"""Declarative query workflows: small DAGs of set-valued steps.

A workflow file (YAML) names its steps; each step applies one operation to
the node-id sets produced by its inputs. Execution validates the DAG,
orders it topologically (Kahn's algorithm, ties broken by ascending step
id), and evaluates every step exactly once. Because steps are pure
functions of their inputs over a frozen graph, sequential and
level-parallel execution produce identical results.

Operations:

    lookup      collection (+ optional label/synonym) -> seed set
    traverse    nodes reachable within depth hops over chosen edge kinds,
                seeds excluded, optionally filtered to a target collection
    filter      keep nodes whose property matches (eq / contains / exists)
    intersect   set intersection of two or more inputs
    union       set union of two or more inputs
    difference  first input minus the union of the rest
    anti_join   keep nodes with no edge (any direction, optionally by
                kind) to any node of the excluded collection
    limit       first n ids in canonical order
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import CycleError, GraphNotFrozenError, WorkflowError
from .store import GraphStore

logger = logging.getLogger(__name__)

VALID_OPS = (
    "lookup",
    "traverse",
    "filter",
    "intersect",
    "union",
    "difference",
    "anti_join",
    "limit",
)

# op -> {param: required}
_OP_PARAMS: dict[str, dict[str, bool]] = {
    "lookup": {"collection": True, "label": False},
    "traverse": {
        "edge_kinds": False,
        "direction": False,
        "depth": False,
        "target_collection": False,
    },
    "filter": {"key": True, "comparator": False, "value": False},
    "intersect": {},
    "union": {},
    "difference": {},
    "anti_join": {"excluded_collection": True, "edge_kinds": False},
    "limit": {"n": True},
}

# op -> (min inputs, max inputs or None for unbounded)
_OP_ARITY: dict[str, tuple[int, int | None]] = {
    "lookup": (0, 0),
    "traverse": (1, 1),
    "filter": (1, 1),
    "intersect": (2, None),
    "union": (2, None),
    "difference": (2, None),
    "anti_join": (1, 1),
    "limit": (1, 1),
}

_STEP_BASE_KEYS = {"id", "op", "inputs", "output"}

COMPARATORS = ("eq", "contains", "exists")


@dataclass
class Step:
    id: str
    op: str
    inputs: list[str] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    output: bool = False


@dataclass
class Workflow:
    name: str
    steps: list[Step]

    @property
    def by_id(self) -> dict[str, Step]:
        return {step.id: step for step in self.steps}

    @property
    def outputs(self) -> list[str]:
        """Explicitly marked output steps, else the sole sink."""
        marked = [s.id for s in self.steps if s.output]
        if marked:
            return marked
        consumed = {ref for s in self.steps for ref in s.inputs}
        sinks = [s.id for s in self.steps if s.id not in consumed]
        if len(sinks) == 1:
            return sinks
        raise WorkflowError(
            "no step marked output:true and the workflow has "
            f"{len(sinks)} sinks; mark the intended outputs"
        )


@dataclass(frozen=True)
class StepResult:
    step_id: str
    node_ids: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.node_ids)


@dataclass(frozen=True)
class TraceEntry:
    step_id: str
    op: str
    cardinality: int
    seconds: float


@dataclass
class ExecutionTrace:
    entries: list[TraceEntry]
    outputs: list[str]
    parallel: bool
    total_seconds: float


def _check_step_params(step_id: str, op: str, params: dict[str, Any]) -> None:
    allowed = _OP_PARAMS[op]
    unknown = set(params) - set(allowed)
    if unknown:
        raise WorkflowError(f"step {step_id!r}: unknown keys for {op}: {sorted(unknown)}")
    for name, required in allowed.items():
        if required and name not in params:
            raise WorkflowError(f"step {step_id!r}: {op} requires {name!r}")

    if op == "lookup":
        if not isinstance(params["collection"], str) or not params["collection"]:
            raise WorkflowError(f"step {step_id!r}: collection must be a non-empty string")
        if "label" in params and not isinstance(params["label"], str):
            raise WorkflowError(f"step {step_id!r}: label must be a string")
    elif op == "traverse":
        depth = params.get("depth", 1)
        if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
            raise WorkflowError(f"step {step_id!r}: depth must be an integer >= 1")
        direction = params.get("direction", "both")
        if direction not in ("out", "in", "both"):
            raise WorkflowError(f"step {step_id!r}: direction must be out/in/both")
        _check_edge_kinds(step_id, params)
    elif op == "filter":
        comparator = params.get("comparator", "eq")
        if comparator not in COMPARATORS:
            raise WorkflowError(
                f"step {step_id!r}: comparator must be one of {COMPARATORS}"
            )
        if comparator != "exists" and "value" not in params:
            raise WorkflowError(f"step {step_id!r}: comparator {comparator!r} needs a value")
        if not isinstance(params["key"], str) or not params["key"]:
            raise WorkflowError(f"step {step_id!r}: key must be a non-empty string")
    elif op == "anti_join":
        if not isinstance(params["excluded_collection"], str) or not params["excluded_collection"]:
            raise WorkflowError(f"step {step_id!r}: excluded_collection must be a non-empty string")
        _check_edge_kinds(step_id, params)
    elif op == "limit":
        n = params["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise WorkflowError(f"step {step_id!r}: n must be an integer >= 0")


def _check_edge_kinds(step_id: str, params: dict[str, Any]) -> None:
    kinds = params.get("edge_kinds")
    if kinds is None:
        return
    if not isinstance(kinds, list) or not kinds or not all(
        isinstance(k, str) and k for k in kinds
    ):
        raise WorkflowError(f"step {step_id!r}: edge_kinds must be a non-empty list of kinds")


def parse_workflow(text: str) -> Workflow:
    """Parse and structurally validate a workflow document.

    Raises:
        WorkflowError: bad YAML, unknown op, duplicate/invalid step ids,
            wrong input arity, or op-specific parameter problems.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise WorkflowError(f"workflow is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise WorkflowError("workflow must be a mapping with a 'steps' list")
    unknown = set(data) - {"name", "steps"}
    if unknown:
        raise WorkflowError(f"unknown workflow keys: {sorted(unknown)}")
    name = data.get("name", "workflow")
    if not isinstance(name, str) or not name:
        raise WorkflowError("workflow name must be a non-empty string")
    raw_steps = data.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise WorkflowError("workflow needs a non-empty 'steps' list")

    steps: list[Step] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_steps):
        where = f"steps[{i}]"
        if not isinstance(raw, dict):
            raise WorkflowError(f"{where} must be a mapping")
        step_id = raw.get("id")
        if not isinstance(step_id, str) or not step_id or any(ch.isspace() for ch in step_id):
            raise WorkflowError(f"{where}: invalid step id {step_id!r}")
        if step_id in seen:
            raise WorkflowError(f"duplicate step id {step_id!r}")
        seen.add(step_id)
        op = raw.get("op")
        if op not in VALID_OPS:
            raise WorkflowError(
                f"step {step_id!r}: unknown op {op!r}; valid ops: {', '.join(VALID_OPS)}"
            )
        inputs = raw.get("inputs", [])
        if not isinstance(inputs, list) or not all(isinstance(r, str) for r in inputs):
            raise WorkflowError(f"step {step_id!r}: inputs must be a list of step ids")
        lo, hi = _OP_ARITY[op]
        if len(inputs) < lo or (hi is not None and len(inputs) > hi):
            expected = f"exactly {lo}" if lo == hi else f"at least {lo}"
            raise WorkflowError(
                f"step {step_id!r}: {op} takes {expected} input(s), got {len(inputs)}"
            )
        output = raw.get("output", False)
        if not isinstance(output, bool):
            raise WorkflowError(f"step {step_id!r}: output must be true/false")
        params = {k: v for k, v in raw.items() if k not in _STEP_BASE_KEYS}
        _check_step_params(step_id, op, params)
        steps.append(Step(id=step_id, op=op, inputs=inputs, params=params, output=output))

    workflow = Workflow(name=name, steps=steps)
    workflow.outputs  # validates sink marking early
    return workflow


def parse_workflow_file(path: str | Path) -> Workflow:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise WorkflowError(f"cannot read workflow {path}: {exc}") from exc
    try:
        return parse_workflow(text)
    except WorkflowError as exc:
        if isinstance(exc, CycleError):
            raise
        raise WorkflowError(f"{path}: {exc}") from exc


def validate_dag(workflow: Workflow) -> list[str]:
    """Topologically order the steps (Kahn; ties to ascending step id).

    Raises:
        WorkflowError: an input references a missing step.
        CycleError: the dependency graph has a cycle (ids listed).
    """
    by_id = workflow.by_id
    successors: dict[str, list[str]] = {step_id: [] for step_id in by_id}
    in_degree: dict[str, int] = {step_id: 0 for step_id in by_id}
    for step in workflow.steps:
        for ref in step.inputs:
            if ref not in by_id:
                raise WorkflowError(f"step {step.id!r} references unknown step {ref!r}")
            if ref == step.id:
                raise CycleError([step.id, step.id])
            successors[ref].append(step.id)
            in_degree[step.id] += 1

    ready = sorted(step_id for step_id, deg in in_degree.items() if deg == 0)
    order: list[str] = []
    while ready:
        current = ready.pop(0)
        order.append(current)
        changed = False
        for follower in successors[current]:
            in_degree[follower] -= 1
            if in_degree[follower] == 0:
                ready.append(follower)
                changed = True
        if changed:
            ready.sort()
    if len(order) < len(by_id):
        remaining = {step_id for step_id in by_id if step_id not in set(order)}
        raise CycleError(_find_cycle(successors, remaining))
    return order


def _find_cycle(successors: dict[str, list[str]], remaining: set[str]) -> list[str]:
    color: dict[str, int] = {step_id: 0 for step_id in remaining}
    stack: list[str] = []

    def dfs(u: str) -> list[str] | None:
        color[u] = 1
        stack.append(u)
        for v in sorted(successors[u]):
            if v not in color:
                continue
            if color[v] == 1:
                return stack[stack.index(v):] + [v]
            if color[v] == 0:
                found = dfs(v)
                if found is not None:
                    return found
        color[u] = 2
        stack.pop()
        return None

    for step_id in sorted(remaining):
        if color[step_id] == 0:
            found = dfs(step_id)
            if found is not None:
                return found
    # unreachable: remaining nodes all sit on or behind a cycle
    return sorted(remaining)


def _eval_step(graph: GraphStore, step: Step, inputs: list[tuple[str, ...]]) -> tuple[str, ...]:
    p = step.params
    if step.op == "lookup":
        nodes = graph.find_nodes(collection=p["collection"], label_or_synonym=p.get("label"))
        return tuple(sorted(node.id for node in nodes))

    if step.op == "traverse":
        seeds = set(inputs[0])
        kinds = p.get("edge_kinds")
        direction = p.get("direction", "both")
        visited = set(seeds)
        frontier = set(seeds)
        for _ in range(p.get("depth", 1)):
            next_frontier: set[str] = set()
            for node_id in frontier:
                for _edge, far in graph.neighbors(node_id, kinds=kinds, direction=direction):
                    if far.id not in visited:
                        next_frontier.add(far.id)
            visited |= next_frontier
            frontier = next_frontier
            if not frontier:
                break
        reached = visited - seeds
        target = p.get("target_collection")
        if target is not None:
            reached = {i for i in reached if graph.get_node(i).collection == target}
        return tuple(sorted(reached))

    if step.op == "filter":
        key = p["key"]
        comparator = p.get("comparator", "eq")
        value = p.get("value")
        kept: list[str] = []
        for node_id in inputs[0]:
            node = graph.get_node(node_id)
            if comparator == "exists":
                if key in node.properties:
                    kept.append(node_id)
                continue
            if key not in node.properties:
                continue
            stored = node.properties[key]
            items = stored if isinstance(stored, list) else [stored]
            if comparator == "eq":
                if any(item == value or str(item) == str(value) for item in items):
                    kept.append(node_id)
            else:  # contains
                needle = str(value).casefold()
                if any(needle in str(item).casefold() for item in items):
                    kept.append(node_id)
        return tuple(sorted(kept))

    if step.op == "intersect":
        result = set(inputs[0]).intersection(*map(set, inputs[1:]))
        return tuple(sorted(result))

    if step.op == "union":
        result: set[str] = set()
        for node_ids in inputs:
            result |= set(node_ids)
        return tuple(sorted(result))

    if step.op == "difference":
        result = set(inputs[0])
        for node_ids in inputs[1:]:
            result -= set(node_ids)
        return tuple(sorted(result))

    if step.op == "anti_join":
        excluded = p["excluded_collection"]
        kinds = p.get("edge_kinds")
        kept = [
            node_id
            for node_id in inputs[0]
            if not any(
                far.collection == excluded
                for _edge, far in graph.neighbors(node_id, kinds=kinds, direction="both")
            )
        ]
        return tuple(sorted(kept))

    if step.op == "limit":
        return tuple(sorted(inputs[0])[: p["n"]])

    raise WorkflowError(f"unhandled op {step.op!r}")  # pragma: no cover


def execute(
    workflow: Workflow, graph: GraphStore, parallel: bool = False
) -> tuple[dict[str, StepResult], ExecutionTrace]:
    """Run every step once; returns per-step results and an execution trace.

    ``parallel`` evaluates independent steps (same dependency depth)
    concurrently; results are identical to sequential execution because
    steps are pure reads of a frozen graph.

    Raises:
        GraphNotFrozenError: the graph is still writable.
    """
    if not graph.frozen:
        raise GraphNotFrozenError("freeze the graph before executing workflows")
    order = validate_dag(workflow)
    by_id = workflow.by_id
    started = time.perf_counter()
    results: dict[str, StepResult] = {}
    timings: dict[str, float] = {}

    def run_one(step_id: str) -> tuple[str, ...]:
        step = by_id[step_id]
        gathered = [results[ref].node_ids for ref in step.inputs]
        t0 = time.perf_counter()
        node_ids = _eval_step(graph, step, gathered)
        timings[step_id] = time.perf_counter() - t0
        return node_ids

    if not parallel:
        for step_id in order:
            results[step_id] = StepResult(step_id, run_one(step_id))
    else:
        depth: dict[str, int] = {}
        for step_id in order:
            step = by_id[step_id]
            depth[step_id] = 1 + max((depth[r] for r in step.inputs), default=-1)
        levels: dict[int, list[str]] = {}
        for step_id in order:
            levels.setdefault(depth[step_id], []).append(step_id)
        for level in sorted(levels):
            batch = levels[level]
            with ThreadPoolExecutor(max_workers=min(8, len(batch))) as pool:
                for step_id, node_ids in zip(batch, pool.map(run_one, batch)):
                    results[step_id] = StepResult(step_id, node_ids)

    total = time.perf_counter() - started
    trace = ExecutionTrace(
        entries=[
            TraceEntry(
                step_id=step_id,
                op=by_id[step_id].op,
                cardinality=results[step_id].cardinality,
                seconds=timings[step_id],
            )
            for step_id in order
        ],
        outputs=workflow.outputs,
        parallel=parallel,
        total_seconds=total,
    )
    logger.info(
        "workflow %s: %d steps in %.3fs (%s)",
        workflow.name,
        len(order),
        total,
        "parallel" if parallel else "sequential",
    )
    return results, trace
