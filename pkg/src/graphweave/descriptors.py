"""Source descriptors: declarative mapping from raw records to the graph.

A descriptor is a small YAML document that tells the ingestion layer how to
read one source: which raw field is the identifier, which is the display
label, how raw keys map onto shared normalized keys, which fields yield
concepts (classification numbers, compound names, taxa), and which fields
declare relations to other collections.

Example::

    source_name: uniprot
    collection: uniprot
    id_field: accession
    label_field: protein_name
    synonym_fields: [gene_name, alt_names]
    field_map:
      accession: accession
      protein_name: protein_name
      ec: ec_number
      organism: organism
    concept_extractors:
      - key: ec_number
        kind: ec_number
    relations:
      - field: substrates
        kind: catalyzes
        target_collection: compounds

All descriptors loaded into one run share a :class:`KeyRegistry`, so a
normalized key means one thing across sources and table headers can be
mapped back onto the same vocabulary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import DescriptorError
from .normalize import normalize_key, valid_concept_kind

logger = logging.getLogger(__name__)

# Keys the pipeline itself writes onto nodes; registered up front so table
# headers hitting them map cleanly instead of falling back to raw:<header>.
WELL_KNOWN_KEYS = ("doc_facts", "doc_id", "kind", "segment_index", "text", "table")

_IDENT_KEYS = {"source_name", "collection", "id_field", "label_field"}
_TOP_KEYS = _IDENT_KEYS | {"synonym_fields", "field_map", "concept_extractors", "relations"}


class KeyRegistry:
    """Shared vocabulary of normalized property keys.

    Tracks which descriptor (or built-in) registered each key; the same key
    may be registered by several sources, that is the point of sharing.
    """

    def __init__(self) -> None:
        self._owners: dict[str, set[str]] = {}
        for key in WELL_KNOWN_KEYS:
            self._owners[key] = {"builtin"}

    def register(self, key: str, owner: str) -> None:
        if key != normalize_key(key) or not key:
            raise DescriptorError(f"key {key!r} is not in normalized form")
        self._owners.setdefault(key, set()).add(owner)

    def __contains__(self, key: str) -> bool:
        return key in self._owners

    def keys(self) -> list[str]:
        return sorted(self._owners)

    def owners(self, key: str) -> list[str]:
        return sorted(self._owners.get(key, ()))


@dataclass(frozen=True)
class ConceptExtractor:
    """Pull concept values of ``kind`` out of normalized field ``key``."""

    key: str
    kind: str


@dataclass(frozen=True)
class RelationRule:
    """Declare edges of ``kind`` from this entity to ``target_collection``.

    ``field`` is the normalized key holding the target reference(s): a full
    node id, an accession, or a label/synonym of the target.
    """

    field: str
    kind: str
    target_collection: str


@dataclass
class SourceDescriptor:
    source_name: str
    collection: str
    id_field: str
    label_field: str
    synonym_fields: list[str] = field(default_factory=list)
    field_map: dict[str, str] = field(default_factory=dict)
    concept_extractors: list[ConceptExtractor] = field(default_factory=list)
    relation_fields: list[RelationRule] = field(default_factory=list)


def load_descriptor(text: str, registry: KeyRegistry) -> SourceDescriptor:
    """Parse and validate a descriptor, registering its keys.

    Raises:
        DescriptorError: malformed YAML, missing/unknown top-level keys,
            duplicate normalized keys inside the mapping (listed in the
            message), unknown concept kinds, or extractor/relation fields
            that are not in the descriptor's normalized domain.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DescriptorError(f"descriptor is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise DescriptorError("descriptor must be a mapping")

    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise DescriptorError(f"unknown descriptor keys: {sorted(unknown)}")
    for required in _IDENT_KEYS:
        value = data.get(required)
        if not isinstance(value, str) or not value.strip():
            raise DescriptorError(f"descriptor field {required!r} must be a non-empty string")

    source_name = data["source_name"].strip()
    collection = data["collection"].strip()
    for name, value in (("source_name", source_name), ("collection", collection)):
        if any(ch.isspace() for ch in value) or ":" in value:
            raise DescriptorError(f"{name} must not contain whitespace or ':': {value!r}")

    raw_field_map = data.get("field_map", {})
    if not isinstance(raw_field_map, dict):
        raise DescriptorError("field_map must be a mapping of raw key -> normalized key")
    field_map: dict[str, str] = {}
    seen_targets: dict[str, str] = {}
    duplicates: list[str] = []
    for raw_key, normalized in raw_field_map.items():
        if not isinstance(raw_key, str) or not isinstance(normalized, str):
            raise DescriptorError("field_map entries must map strings to strings")
        target = normalized.strip()
        if target != normalize_key(target) or not target:
            raise DescriptorError(
                f"field_map target {target!r} for {raw_key!r} is not a normalized key"
            )
        if target in seen_targets:
            duplicates.append(f"{target!r} (from {seen_targets[target]!r} and {raw_key!r})")
        else:
            seen_targets[target] = raw_key
        field_map[raw_key] = target
    if duplicates:
        raise DescriptorError("duplicate normalized keys in field_map: " + ", ".join(duplicates))

    def resolve_field(raw: str, role: str) -> str:
        """id/label/synonym/extractor/relation fields name either a raw key
        in the map's domain or a normalized key directly."""
        if raw in field_map:
            return field_map[raw]
        if raw == normalize_key(raw) and raw:
            return raw
        raise DescriptorError(
            f"{role} {raw!r} is neither a field_map raw key nor a normalized key"
        )

    id_field = resolve_field(data["id_field"].strip(), "id_field")
    label_field = resolve_field(data["label_field"].strip(), "label_field")

    synonym_fields_raw = data.get("synonym_fields", [])
    if not isinstance(synonym_fields_raw, list) or not all(
        isinstance(s, str) for s in synonym_fields_raw
    ):
        raise DescriptorError("synonym_fields must be a list of field names")
    synonym_fields = [resolve_field(s, "synonym field") for s in synonym_fields_raw]

    extractors: list[ConceptExtractor] = []
    for i, entry in enumerate(data.get("concept_extractors", []) or []):
        if not isinstance(entry, dict) or set(entry) != {"key", "kind"}:
            raise DescriptorError(f"concept_extractors[{i}] must have exactly 'key' and 'kind'")
        kind = entry["kind"]
        if not isinstance(kind, str) or not valid_concept_kind(kind):
            raise DescriptorError(f"concept_extractors[{i}]: unknown concept kind {kind!r}")
        extractors.append(
            ConceptExtractor(key=resolve_field(entry["key"], f"concept_extractors[{i}].key"), kind=kind)
        )

    relations: list[RelationRule] = []
    for i, entry in enumerate(data.get("relations", []) or []):
        if not isinstance(entry, dict) or set(entry) != {"field", "kind", "target_collection"}:
            raise DescriptorError(
                f"relations[{i}] must have exactly 'field', 'kind', 'target_collection'"
            )
        kind = entry["kind"]
        target = entry["target_collection"]
        if not isinstance(kind, str) or not kind or any(ch.isspace() for ch in kind):
            raise DescriptorError(f"relations[{i}]: invalid edge kind {kind!r}")
        if not isinstance(target, str) or not target:
            raise DescriptorError(f"relations[{i}]: invalid target_collection {target!r}")
        relations.append(
            RelationRule(
                field=resolve_field(entry["field"], f"relations[{i}].field"),
                kind=kind,
                target_collection=target,
            )
        )

    descriptor = SourceDescriptor(
        source_name=source_name,
        collection=collection,
        id_field=id_field,
        label_field=label_field,
        synonym_fields=synonym_fields,
        field_map=field_map,
        concept_extractors=extractors,
        relation_fields=relations,
    )
    for normalized in sorted(set(field_map.values())):
        registry.register(normalized, source_name)
    logger.debug("loaded descriptor for source %s (collection %s)", source_name, collection)
    return descriptor


def load_descriptor_file(path: str | Path, registry: KeyRegistry) -> SourceDescriptor:
    """Read a descriptor from disk; wraps file errors with the path."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DescriptorError(f"cannot read descriptor {path}: {exc}") from exc
    try:
        return load_descriptor(text, registry)
    except DescriptorError as exc:
        raise DescriptorError(f"{path}: {exc}") from exc
