"""Dialect-specific naming conventions used during code generation.

The default mapping reproduces the reference SPARQL dialect exactly: labels
in predicate position are snake_cased, entity/concept names stay verbatim
inside quotes, numeric literals carry ``^^xsd:double``, and the seven
reserved predicates implement names, typing, value nodes and fact
reification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

# Reserved predicate spellings.  They structure every emitted query and may
# not collide with any normalized user label.
PRED_NAME = "name"
PRED_INSTANCE_OF = "instance_of"
PRED_VALUE = "value"
PRED_UNIT = "unit"
PRED_FACT_H = "fact_h"
PRED_FACT_R = "fact_r"
PRED_FACT_T = "fact_t"

RESERVED_PREDICATES = (
    PRED_NAME,
    PRED_INSTANCE_OF,
    PRED_VALUE,
    PRED_UNIT,
    PRED_FACT_H,
    PRED_FACT_R,
    PRED_FACT_T,
)

_DEFAULT_OPTIONS = {
    "sparql": {"predicate_prefix": ""},
    "cypher": {"concept_as_label": False},
}


@lru_cache(maxsize=4096)
def snake_case(label: str) -> str:
    """Lowercase and join words with underscores: "educated at" -> "educated_at"."""
    return "_".join(label.lower().split())


@dataclass(frozen=True)
class SchemaMapping:
    label_normalizer: str = "snake_case"
    reserved_predicates: tuple[str, ...] = RESERVED_PREDICATES
    numeric_datatype_suffix: str = "^^xsd:double"
    dialect_options: dict = field(default_factory=lambda: {k: dict(v) for k, v in _DEFAULT_OPTIONS.items()})

    def normalize_label(self, label: str) -> str:
        return snake_case(label)

    def is_reserved(self, normalized_label: str) -> bool:
        return normalized_label in self.reserved_predicates

    def option(self, dialect: str, key: str):
        defaults = _DEFAULT_OPTIONS.get(dialect, {})
        return self.dialect_options.get(dialect, {}).get(key, defaults.get(key))


DEFAULT_MAPPING = SchemaMapping()


def load_mapping(text: str) -> SchemaMapping:
    """Load a mapping from its JSON configuration text.

    Recognised keys: ``label_normalizer`` (only "snake_case"),
    ``numeric_datatype_suffix``, ``reserved_predicates`` (list of strings,
    extends rather than replaces the built-ins) and ``dialect_options``
    (per-dialect tables, e.g. ``{"cypher": {"concept_as_label": true}}``).
    """
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("mapping file must hold a JSON object")
    unknown = set(obj) - {"label_normalizer", "numeric_datatype_suffix", "reserved_predicates", "dialect_options"}
    if unknown:
        raise ValueError(f"unknown mapping keys: {', '.join(sorted(unknown))}")
    rule = obj.get("label_normalizer", "snake_case")
    if rule != "snake_case":
        raise ValueError(f"unsupported label_normalizer {rule!r}")
    reserved = RESERVED_PREDICATES
    if "reserved_predicates" in obj:
        extra = obj["reserved_predicates"]
        if not isinstance(extra, list) or not all(isinstance(x, str) for x in extra):
            raise ValueError("reserved_predicates must be a list of strings")
        reserved = tuple(dict.fromkeys(RESERVED_PREDICATES + tuple(extra)))
    options = {k: dict(v) for k, v in _DEFAULT_OPTIONS.items()}
    for dialect, table in obj.get("dialect_options", {}).items():
        if not isinstance(table, dict):
            raise ValueError(f"dialect_options[{dialect!r}] must be an object")
        options.setdefault(dialect, {}).update(table)
    return SchemaMapping(
        label_normalizer=rule,
        reserved_predicates=reserved,
        numeric_datatype_suffix=obj.get("numeric_datatype_suffix", "^^xsd:double"),
        dialect_options=options,
    )


def escape_quoted(text: str) -> str:
    """Escape a name for inclusion inside double quotes."""
    return text.replace("\\", "\\\\").replace('"', '\\"')
