"""Exception hierarchy shared across the package.

Everything raised deliberately derives from :class:`GraphweaveError` so the
CLI can map failures to exit codes in one place: domain errors exit 1, I/O
errors (plain ``OSError``) exit 2.
"""

from __future__ import annotations


class GraphweaveError(Exception):
    """Base class for all deliberate failures."""


class ValidationError(GraphweaveError):
    """Input violated a structural contract (ids, descriptors, workflows)."""


class MalformedNodeIdError(ValidationError):
    """Node id missing scheme segments or containing whitespace."""


class UnknownCollectionError(ValidationError):
    """Operation referenced a collection that was never registered."""


class DanglingEdgeError(ValidationError):
    """Edge endpoint does not exist in the store."""


class NodeNotFoundError(GraphweaveError):
    """Lookup of a node id that is not present."""


class FrozenGraphError(GraphweaveError):
    """Mutation attempted on a graph that has been frozen for reads."""


class GraphNotFrozenError(GraphweaveError):
    """Read-side machinery invoked while the graph is still writable."""


class UsageError(GraphweaveError):
    """API misuse, e.g. a query with no criteria at all."""


class SnapshotError(GraphweaveError):
    """Snapshot directory is missing, incomplete, or corrupt.

    Carries ``path`` and (when known) the 1-based ``line`` of the offending
    record so the message pinpoints the failure.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class InvalidConceptValueError(ValidationError):
    """Raw value could not be canonicalized for its concept kind."""

    def __init__(self, kind: str, raw: str, reason: str = ""):
        self.kind = kind
        self.raw = raw
        detail = f": {reason}" if reason else ""
        super().__init__(f"invalid {kind} value {raw!r}{detail}")


class DescriptorError(ValidationError):
    """Source descriptor failed validation."""


class RecordRejectedError(GraphweaveError):
    """A raw record cannot become an entity (e.g. missing identifier)."""


class DocumentParseError(GraphweaveError):
    """Document JSON is structurally invalid.

    ``element`` names the offending piece, e.g. ``elements[3]``.
    """

    def __init__(self, message: str, element: str | None = None):
        self.element = element
        where = f" at {element}" if element else ""
        super().__init__(message + where)


class WorkflowError(ValidationError):
    """Workflow file failed parsing or DAG validation."""


class CycleError(WorkflowError):
    """Workflow graph contains a cycle; ``cycle`` lists the step ids."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("workflow contains a cycle: " + " -> ".join(self.cycle))
