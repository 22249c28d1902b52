"""Canonicalizers for identifiers, concept values, surfaces, and keys.

Source databases write the same fact in frustratingly many shapes; enzyme
classification numbers alone show up as ``EC 2.4.1.245``, ``ec:2.4.1.245``,
``2.4.1.245;`` and friends. Everything that must compare equal across
sources funnels through this module so the rest of the package can rely on
string equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InvalidConceptValueError

# Fixed concept kinds. Descriptors may extend the space with "other:<name>",
# which canonicalizes like a plain surface.
CONCEPT_KINDS = ("ec_number", "compound_name", "taxon")

_EC_FIELD = r"(\d+|-)"
_EC_RE = re.compile(
    r"^(?:ec)?[\s:]*" + r"\.".join([_EC_FIELD] * 4) + r"$",
    re.IGNORECASE,
)

_KEY_JUNK_RE = re.compile(r"[^a-z0-9]+")


def normalize_ec(raw: str) -> str:
    """Canonicalize an enzyme classification number.

    Accepts an optional ``EC``/``ec`` prefix (with or without a following
    space or colon), surrounding whitespace, and trailing semicolons. The
    canonical form is exactly four dot-separated fields, each a positive
    integer (leading zeros dropped) or ``-`` for an unspecified level.

    Raises:
        InvalidConceptValueError: if the value has the wrong number of
            fields or a field is neither a positive integer nor ``-``.

    The function is idempotent: feeding a canonical form back returns it
    unchanged.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise InvalidConceptValueError("ec_number", raw, "empty value")
    candidate = raw.strip().rstrip("; \t")
    match = _EC_RE.match(candidate)
    if match is None:
        raise InvalidConceptValueError("ec_number", raw, "not a four-field classification number")
    fields: list[str] = []
    for part in match.groups():
        if part == "-":
            fields.append("-")
            continue
        value = int(part)
        if value <= 0:
            raise InvalidConceptValueError("ec_number", raw, "fields must be positive")
        fields.append(str(value))
    return ".".join(fields)


def normalize_surface(raw: str) -> str:
    """Casefold and collapse internal whitespace to single spaces.

    This is the shared normalization for gazetteer entries, scanned text,
    and compound-style concept values, so "  Alpha,alpha-Trehalose " and
    "alpha,alpha-trehalose" land on the same key. Idempotent.
    """
    return " ".join(raw.split()).casefold()


def normalize_key(raw: str) -> str:
    """Normalize a field name or table header to lowercase snake style.

    Non-alphanumeric runs become single underscores; leading and trailing
    underscores are stripped. Idempotent.
    """
    collapsed = _KEY_JUNK_RE.sub("_", raw.casefold())
    return collapsed.strip("_")


def normalize_taxon(raw: str) -> str:
    """Canonicalize a taxonomy identifier (digit string pass-through)."""
    candidate = raw.strip()
    if not candidate.isdigit():
        raise InvalidConceptValueError("taxon", raw, "expected a digit string")
    # Drop leading zeros so 0083332 and 83332 are one concept.
    return str(int(candidate))


@dataclass(frozen=True)
class ConceptKey:
    """A canonicalized concept: (kind, canonical value) pair."""

    kind: str
    canonical: str


def valid_concept_kind(kind: str) -> bool:
    """True for the fixed kinds and the ``other:<name>`` escape hatch."""
    if kind in CONCEPT_KINDS:
        return True
    if kind.startswith("other:"):
        suffix = kind[len("other:"):]
        return bool(suffix) and suffix == normalize_key(suffix)
    return False


def canonicalize_concept(kind: str, raw: str) -> ConceptKey:
    """Canonicalize ``raw`` according to its concept kind.

    Raises:
        InvalidConceptValueError: unknown kind, or the value fails its
            kind-specific grammar (e.g. a malformed classification number).
    """
    if not valid_concept_kind(kind):
        raise InvalidConceptValueError(kind, raw, "unknown concept kind")
    if kind == "ec_number":
        return ConceptKey(kind, normalize_ec(raw))
    if kind == "taxon":
        return ConceptKey(kind, normalize_taxon(raw))
    # compound_name and other:* share surface normalization
    canonical = normalize_surface(raw)
    if not canonical:
        raise InvalidConceptValueError(kind, raw, "empty value")
    return ConceptKey(kind, canonical)
