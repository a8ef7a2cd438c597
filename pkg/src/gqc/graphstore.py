"""In-memory property graph: entities with concepts, typed attributes and
directed relations, where both attribute instances and relation edges carry
qualifiers.

Graphs load from a JSON document::

    {"entities": [
        {"id": "Q1", "name": "Uzbekistan",
         "concepts": ["country"],
         "attributes": [{"key": "population", "type": "number",
                         "value": "34", "unit": "million",
                         "qualifiers": [{"key": "point in time",
                                         "type": "year", "value": 2020}]}],
         "relations": [{"predicate": "capital", "target": "Q2",
                        "qualifiers": [...]}]}]}

Edges are stored once on their head entity; the incoming view is derived.
The graph is immutable after loading and safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diagnostics import (
    Diagnostic,
    E_BAD_VALUE,
    E_DANGLING_TARGET,
    E_DUP_ID,
    GraphError,
    ParseError,
    error,
)
from .values import Value, VType

Qualifiers = tuple[tuple[str, Value], ...]


@dataclass(frozen=True)
class AttributeValue:
    key: str
    value: Value
    qualifiers: Qualifiers = ()


@dataclass(frozen=True)
class RelationEdge:
    predicate: str
    target: str
    qualifiers: Qualifiers = ()


@dataclass(frozen=True)
class EntityRecord:
    id: str
    name: str
    concepts: tuple[str, ...] = ()
    attributes: tuple[AttributeValue, ...] = ()
    relations: tuple[RelationEdge, ...] = ()


@dataclass
class PropertyGraph:
    entities: dict[str, EntityRecord]
    name_index: dict[str, frozenset[str]] = field(default_factory=dict)
    concept_index: dict[str, frozenset[str]] = field(default_factory=dict)
    # incoming view: target id -> tuple of (head id, edge); derived, not stored
    incoming: dict[str, tuple[tuple[str, RelationEdge], ...]] = field(default_factory=dict)

    @classmethod
    def from_entities(cls, entities: dict[str, EntityRecord]) -> "PropertyGraph":
        g = cls(entities=dict(entities))
        g.reindex()
        return g

    def reindex(self) -> None:
        names: dict[str, set[str]] = {}
        concepts: dict[str, set[str]] = {}
        incoming: dict[str, list[tuple[str, RelationEdge]]] = {}
        for eid, rec in self.entities.items():
            names.setdefault(rec.name, set()).add(eid)
            for c in rec.concepts:
                concepts.setdefault(c, set()).add(eid)
            for edge in rec.relations:
                incoming.setdefault(edge.target, []).append((eid, edge))
        self.name_index = {k: frozenset(v) for k, v in names.items()}
        self.concept_index = {k: frozenset(v) for k, v in concepts.items()}
        self.incoming = {k: tuple(v) for k, v in incoming.items()}

    def by_name(self, name: str) -> frozenset[str]:
        return self.name_index.get(name, frozenset())

    def by_concept(self, concept: str) -> frozenset[str]:
        return self.concept_index.get(concept, frozenset())

    def in_edges(self, target: str) -> tuple[tuple[str, RelationEdge], ...]:
        return self.incoming.get(target, ())


def _parse_value(obj: dict, where: str, out: list[Diagnostic]) -> Value | None:
    try:
        vtype = VType(obj.get("type"))
    except ValueError:
        out.append(error(E_BAD_VALUE, f"{where}: unknown value type {obj.get('type')!r}"))
        return None
    raw = obj.get("value")
    if vtype is VType.NUMBER and "unit" in obj and obj["unit"] is not None:
        text = f"{raw} {obj['unit']}"
    else:
        text = str(raw)
    try:
        return Value.parse(vtype, text)
    except ValueError as exc:
        out.append(error(E_BAD_VALUE, f"{where}: {exc}"))
        return None


def _parse_qualifiers(items, where: str, out: list[Diagnostic]) -> Qualifiers:
    quals = []
    for i, q in enumerate(items or []):
        if not isinstance(q, dict) or not q.get("key"):
            out.append(error(E_BAD_VALUE, f"{where}: qualifier {i} needs a key"))
            continue
        v = _parse_value(q, f"{where} qualifier {q['key']!r}", out)
        if v is not None:
            quals.append((str(q["key"]), v))
    return tuple(quals)


def load_graph(document: str | dict) -> PropertyGraph:
    """Load and index a property graph from JSON text or a parsed object.

    Raises :class:`ParseError` for undecodable JSON and :class:`GraphError`
    (with every problem found) for duplicate ids, dangling edge targets and
    malformed values.
    """
    if isinstance(document, str):
        try:
            obj = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError([error(E_BAD_VALUE, f"graph document is not valid JSON: {exc}")]) from None
    else:
        obj = document
    out: list[Diagnostic] = []
    if not isinstance(obj, dict) or not isinstance(obj.get("entities"), list):
        raise GraphError([error(E_BAD_VALUE, "graph document must be an object with an 'entities' list")])

    entities: dict[str, EntityRecord] = {}
    for i, item in enumerate(obj["entities"]):
        where = f"entity {i}"
        if not isinstance(item, dict) or not item.get("id") or not item.get("name"):
            out.append(error(E_BAD_VALUE, f"{where}: needs non-empty 'id' and 'name'"))
            continue
        eid = str(item["id"])
        if eid in entities:
            out.append(error(E_DUP_ID, f"duplicate entity id {eid!r}"))
            continue
        attrs = []
        for a in item.get("attributes", []) or []:
            if not isinstance(a, dict) or not a.get("key"):
                out.append(error(E_BAD_VALUE, f"{where}: attribute needs a key"))
                continue
            v = _parse_value(a, f"{where} attribute {a['key']!r}", out)
            if v is None:
                continue
            quals = _parse_qualifiers(a.get("qualifiers"), f"{where} attribute {a['key']!r}", out)
            attrs.append(AttributeValue(str(a["key"]), v, quals))
        rels = []
        for r in item.get("relations", []) or []:
            if not isinstance(r, dict) or not r.get("predicate") or not r.get("target"):
                out.append(error(E_BAD_VALUE, f"{where}: relation needs 'predicate' and 'target'"))
                continue
            quals = _parse_qualifiers(r.get("qualifiers"), f"{where} relation {r['predicate']!r}", out)
            rels.append(RelationEdge(str(r["predicate"]), str(r["target"]), quals))
        concepts = tuple(str(c) for c in item.get("concepts", []) or [])
        entities[eid] = EntityRecord(eid, str(item["name"]), concepts, tuple(attrs), tuple(rels))

    for rec in entities.values():
        for edge in rec.relations:
            if edge.target not in entities:
                out.append(error(E_DANGLING_TARGET, f"entity {rec.id!r}: edge {edge.predicate!r} targets unknown id {edge.target!r}"))
    if out:
        raise GraphError(out)
    return PropertyGraph.from_entities(entities)


def validate_graph(g: PropertyGraph) -> list[Diagnostic]:
    """Check graph invariants; empty result means the graph is coherent.

    Verifies edge targets and that the name/concept indexes and the derived
    incoming view are exactly rebuildable from the entity records.
    """
    out: list[Diagnostic] = []
    for rec in g.entities.values():
        if not rec.name:
            out.append(error(E_BAD_VALUE, f"entity {rec.id!r} has an empty name"))
        if rec.id != rec.id.strip() or not rec.id:
            out.append(error(E_BAD_VALUE, f"bad entity id {rec.id!r}"))
        for edge in rec.relations:
            if edge.target not in g.entities:
                out.append(error(E_DANGLING_TARGET, f"entity {rec.id!r}: edge {edge.predicate!r} targets unknown id {edge.target!r}"))
    fresh = PropertyGraph.from_entities(g.entities)
    if fresh.name_index != g.name_index:
        out.append(error(E_BAD_VALUE, "name index is not derivable from the entities"))
    if fresh.concept_index != g.concept_index:
        out.append(error(E_BAD_VALUE, "concept index is not derivable from the entities"))
    if fresh.incoming != g.incoming:
        out.append(error(E_BAD_VALUE, "incoming-edge view is not derivable from the entities"))
    return out
