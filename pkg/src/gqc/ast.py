"""Typed AST for the graph query IR, plus validation and normalization.

Every node is a frozen dataclass: structural equality, hashing and safe
sharing across threads come for free.  The tree mirrors the IR grammar:

* a :class:`Query` is one of eight forms (entity, attribute, relation,
  qualifier, count, verify, value, superlative);
* an entity set is a tree of leaves (:class:`Entity`, :class:`Concept`) and
  combinators (:class:`Typed`, :class:`Combine`, :class:`Constrained`);
* constraints attach attribute comparisons, attribute superlatives and
  relation conditions (optionally counted and qualifier-filtered) to a set.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, fields
from decimal import Decimal

from .diagnostics import (
    Diagnostic,
    E_BAD_AGGREGATE,
    E_BAD_COUNT,
    E_EMPTY_NAME,
    E_TYPE_MISMATCH,
    error,
)
from .values import Cop, ORDER_COPS, Value, VType


class Lop(enum.Enum):
    """Set combinators: union, intersection and (binary) difference."""

    AND = "and"
    OR = "or"
    NOT = "not"


class Sop(enum.Enum):
    LARGEST = "largest"
    SMALLEST = "smallest"


class Vop(enum.Enum):
    SUM = "sum"
    AVERAGE = "average"
    MAXIMUM = "maximum"
    MINIMUM = "minimum"


class Dir(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


# Omitted direction defaults to BACKWARD: the constrained set is the subject
# (head) of the edge.  The naming runs against intuition but matches how the
# reference query dialect places the constrained entity.
DEFAULT_DIR = Dir.BACKWARD


class Node:
    """Marker base class for every AST node."""

    __slots__ = ()


class EntitySet(Node):
    __slots__ = ()


@dataclass(frozen=True)
class Entity(EntitySet):
    name: str


@dataclass(frozen=True)
class Concept(EntitySet):
    name: str


@dataclass(frozen=True)
class Typed(EntitySet):
    """Concept-typing of an inner set: members of ``inner`` that are
    instances of ``concept``."""

    concept: str
    inner: EntitySet


@dataclass(frozen=True)
class Combine(EntitySet):
    op: Lop
    left: EntitySet
    right: EntitySet


@dataclass(frozen=True)
class Constrained(EntitySet):
    inner: EntitySet
    constraint: "Constraint"


class Constraint(Node):
    __slots__ = ()


@dataclass(frozen=True)
class QualifierCond(Node):
    """Condition on a qualifier of the matched fact (attribute instance or
    relation edge)."""

    key: str
    cop: Cop
    value: Value


@dataclass(frozen=True)
class CountCmp(Node):
    """Cardinality condition on a related set, e.g. "at least 3"."""

    cop: Cop
    value: Value


@dataclass(frozen=True)
class AttrCmp(Constraint):
    attribute: str
    cop: Cop
    value: Value
    qualifier: QualifierCond | None = None


@dataclass(frozen=True)
class AttrSup(Constraint):
    """Keep only the entities whose attribute is extremal within the set."""

    sop: Sop
    attribute: str
    qualifier: QualifierCond | None = None


@dataclass(frozen=True)
class Rel(Constraint):
    relation: str
    direction: Dir | None
    target: EntitySet
    count: CountCmp | None = None
    qualifier: QualifierCond | None = None


@dataclass(frozen=True)
class RelSup(Constraint):
    """Grammar-reachable but semantically undefined; rejected by every
    backend and by the evaluator."""

    relation: str
    direction: Dir | None
    sop: Sop
    target: EntitySet


class ValueExpr(Node):
    __slots__ = ()


@dataclass(frozen=True)
class Lit(ValueExpr):
    value: Value


@dataclass(frozen=True)
class AttrOf(ValueExpr):
    attribute: str
    entity: str


@dataclass(frozen=True)
class Aggregate(ValueExpr):
    op: Vop
    inner: ValueExpr


@dataclass(frozen=True)
class CombineValues(ValueExpr):
    op: Lop
    left: ValueExpr
    right: ValueExpr


class Query(Node):
    __slots__ = ()


@dataclass(frozen=True)
class EntityQuery(Query):
    entityset: EntitySet


@dataclass(frozen=True)
class AttributeQuery(Query):
    attribute: str
    entityset: EntitySet


@dataclass(frozen=True)
class RelationQuery(Query):
    source: EntitySet
    target: EntitySet


@dataclass(frozen=True)
class QualifierQuery(Query):
    qualifier: str
    entityset: EntitySet
    constraint: Constraint


@dataclass(frozen=True)
class CountQuery(Query):
    entityset: EntitySet


@dataclass(frozen=True)
class VerifyQuery(Query):
    entityset: EntitySet
    constraint: Constraint


@dataclass(frozen=True)
class ValueQuery(Query):
    value: ValueExpr


@dataclass(frozen=True)
class SuperlativeQuery(Query):
    sop: Sop
    attribute: str
    entityset: EntitySet


# ---------------------------------------------------------------------------
# Validation


def validate(query: Query) -> list[Diagnostic]:
    """Semantic well-formedness check; empty result means valid.

    Flags ordering comparisons on strings (E_TYPE_MISMATCH), aggregates over
    statically non-numeric expressions (E_BAD_AGGREGATE), malformed relation
    counts (E_BAD_COUNT) and empty names (E_EMPTY_NAME).
    """
    out: list[Diagnostic] = []
    _validate_node(query, out)
    return out


def _name(out, text: str, what: str) -> None:
    if not text:
        out.append(error(E_EMPTY_NAME, f"empty {what} name"))


def _cmp(out, cop: Cop, value: Value, where: str) -> None:
    if cop in ORDER_COPS and value.vtype is VType.STRING:
        out.append(error(E_TYPE_MISMATCH, f"ordering comparison {cop.value!r} on a string value in {where}"))


def _qualifier(out, q: QualifierCond | None) -> None:
    if q is None:
        return
    _name(out, q.key, "qualifier")
    _cmp(out, q.cop, q.value, "qualifier condition")


def _validate_set(node: EntitySet, out) -> None:
    if isinstance(node, Entity):
        _name(out, node.name, "entity")
    elif isinstance(node, Concept):
        _name(out, node.name, "concept")
    elif isinstance(node, Typed):
        _name(out, node.concept, "concept")
        _validate_set(node.inner, out)
    elif isinstance(node, Combine):
        _validate_set(node.left, out)
        _validate_set(node.right, out)
    elif isinstance(node, Constrained):
        _validate_set(node.inner, out)
        _validate_constraint(node.constraint, out)
    else:  # pragma: no cover - defensive
        raise TypeError(f"not an entity set: {node!r}")


def _validate_constraint(c: Constraint, out) -> None:
    if isinstance(c, AttrCmp):
        _name(out, c.attribute, "attribute")
        _cmp(out, c.cop, c.value, "attribute comparison")
        _qualifier(out, c.qualifier)
    elif isinstance(c, AttrSup):
        _name(out, c.attribute, "attribute")
        _qualifier(out, c.qualifier)
    elif isinstance(c, Rel):
        _name(out, c.relation, "relation")
        if c.count is not None:
            v = c.count.value
            ok = (
                v.vtype is VType.NUMBER
                and v.unit is None
                and v.magnitude == v.magnitude.to_integral_value()
                and v.magnitude >= 0
            )
            if not ok:
                out.append(error(E_BAD_COUNT, f"relation count must be a unitless non-negative integer, got {v}"))
        _qualifier(out, c.qualifier)
        _validate_set(c.target, out)
    elif isinstance(c, RelSup):
        _name(out, c.relation, "relation")
        _validate_set(c.target, out)
    else:  # pragma: no cover - defensive
        raise TypeError(f"not a constraint: {c!r}")


def _static_vtype(expr: ValueExpr) -> VType | None:
    if isinstance(expr, Lit):
        return expr.value.vtype
    if isinstance(expr, Aggregate):
        return VType.NUMBER
    if isinstance(expr, CombineValues):
        lt = _static_vtype(expr.left)
        rt = _static_vtype(expr.right)
        return lt if lt == rt else None
    return None  # AttrOf: unknown until evaluation


def _validate_value_expr(expr: ValueExpr, out) -> None:
    if isinstance(expr, Lit):
        pass
    elif isinstance(expr, AttrOf):
        _name(out, expr.attribute, "attribute")
        _name(out, expr.entity, "entity")
    elif isinstance(expr, Aggregate):
        inner_t = _static_vtype(expr.inner)
        if expr.op in (Vop.SUM, Vop.AVERAGE):
            if inner_t is not None and inner_t is not VType.NUMBER:
                out.append(error(E_BAD_AGGREGATE, f"{expr.op.value} over non-numeric values"))
        else:  # maximum/minimum need an orderable kind
            if inner_t is VType.STRING:
                out.append(error(E_BAD_AGGREGATE, f"{expr.op.value} over string values"))
        _validate_value_expr(expr.inner, out)
    elif isinstance(expr, CombineValues):
        _validate_value_expr(expr.left, out)
        _validate_value_expr(expr.right, out)
    else:  # pragma: no cover - defensive
        raise TypeError(f"not a value expression: {expr!r}")


def _validate_node(query: Query, out) -> None:
    if isinstance(query, EntityQuery):
        _validate_set(query.entityset, out)
    elif isinstance(query, AttributeQuery):
        _name(out, query.attribute, "attribute")
        _validate_set(query.entityset, out)
    elif isinstance(query, RelationQuery):
        _validate_set(query.source, out)
        _validate_set(query.target, out)
    elif isinstance(query, QualifierQuery):
        _name(out, query.qualifier, "qualifier")
        _validate_set(query.entityset, out)
        _validate_constraint(query.constraint, out)
    elif isinstance(query, CountQuery):
        _validate_set(query.entityset, out)
    elif isinstance(query, VerifyQuery):
        _validate_set(query.entityset, out)
        _validate_constraint(query.constraint, out)
    elif isinstance(query, ValueQuery):
        _validate_value_expr(query.value, out)
    elif isinstance(query, SuperlativeQuery):
        _name(out, query.attribute, "attribute")
        _validate_set(query.entityset, out)
    else:  # pragma: no cover - defensive
        raise TypeError(f"not a query: {query!r}")


# ---------------------------------------------------------------------------
# Normalization


def normalize(query: Query) -> Query:
    """Return the canonical form of a query.  Idempotent.

    * omitted relation directions become explicit (``backward``);
    * an entity query whose root set ends in an unqualified attribute
      superlative becomes the dedicated superlative query form;
    * a value query reading one attribute of one entity becomes an attribute
      query.

    Constraint chains keep their order; concept typing is never folded into
    or out of anything else.
    """
    q = _norm_query(query)
    if isinstance(q, EntityQuery) and isinstance(q.entityset, Constrained):
        c = q.entityset.constraint
        if isinstance(c, AttrSup) and c.qualifier is None:
            return SuperlativeQuery(c.sop, c.attribute, q.entityset.inner)
    if isinstance(q, ValueQuery) and isinstance(q.value, AttrOf):
        return AttributeQuery(q.value.attribute, Entity(q.value.entity))
    return q


def _norm_query(query: Query) -> Query:
    if isinstance(query, EntityQuery):
        return EntityQuery(_norm_set(query.entityset))
    if isinstance(query, AttributeQuery):
        return AttributeQuery(query.attribute, _norm_set(query.entityset))
    if isinstance(query, RelationQuery):
        return RelationQuery(_norm_set(query.source), _norm_set(query.target))
    if isinstance(query, QualifierQuery):
        return QualifierQuery(query.qualifier, _norm_set(query.entityset), _norm_constraint(query.constraint))
    if isinstance(query, CountQuery):
        return CountQuery(_norm_set(query.entityset))
    if isinstance(query, VerifyQuery):
        return VerifyQuery(_norm_set(query.entityset), _norm_constraint(query.constraint))
    if isinstance(query, ValueQuery):
        return ValueQuery(query.value)
    if isinstance(query, SuperlativeQuery):
        return SuperlativeQuery(query.sop, query.attribute, _norm_set(query.entityset))
    raise TypeError(f"not a query: {query!r}")


def _norm_set(node: EntitySet) -> EntitySet:
    if isinstance(node, (Entity, Concept)):
        return node
    if isinstance(node, Typed):
        return Typed(node.concept, _norm_set(node.inner))
    if isinstance(node, Combine):
        return Combine(node.op, _norm_set(node.left), _norm_set(node.right))
    if isinstance(node, Constrained):
        return Constrained(_norm_set(node.inner), _norm_constraint(node.constraint))
    raise TypeError(f"not an entity set: {node!r}")


def _norm_constraint(c: Constraint) -> Constraint:
    if isinstance(c, AttrCmp):
        return c
    if isinstance(c, AttrSup):
        return c
    if isinstance(c, Rel):
        return Rel(c.relation, c.direction or DEFAULT_DIR, _norm_set(c.target), c.count, c.qualifier)
    if isinstance(c, RelSup):
        return RelSup(c.relation, c.direction or DEFAULT_DIR, c.sop, _norm_set(c.target))
    raise TypeError(f"not a constraint: {c!r}")


# ---------------------------------------------------------------------------
# Debug surfaces: an indented tree dump and a JSON form


def dump_tree(node: Node, indent: int = 0) -> str:
    """Human-oriented one-node-per-line dump for the CLI."""
    pad = "  " * indent
    name = type(node).__name__
    scalars = []
    lines = [f"{pad}{name}"]
    for f in fields(node):
        v = getattr(node, f.name)
        if isinstance(v, Node):
            lines.append(f"{pad}  {f.name}:")
            lines.append(dump_tree(v, indent + 2))
        elif v is None:
            continue
        elif isinstance(v, enum.Enum):
            scalars.append(f"{f.name}={v.value}")
        elif isinstance(v, Value):
            scalars.append(f"{f.name}={v}")
        else:
            scalars.append(f"{f.name}={v!r}")
    if scalars:
        lines[0] = f"{pad}{name} {' '.join(scalars)}"
    return "\n".join(lines)


def to_json(node: Node) -> dict:
    """Machine-readable form; inverse of :func:`from_json`."""
    out: dict = {"kind": type(node).__name__}
    for f in fields(node):
        v = getattr(node, f.name)
        if isinstance(v, Node):
            out[f.name] = to_json(v)
        elif isinstance(v, Value):
            out[f.name] = {"type": v.vtype.value, "text": v.raw}
        elif isinstance(v, enum.Enum):
            out[f.name] = v.value
        else:
            out[f.name] = v
    return out


_NODE_TYPES = {
    cls.__name__: cls
    for cls in (
        Entity, Concept, Typed, Combine, Constrained,
        QualifierCond, CountCmp, AttrCmp, AttrSup, Rel, RelSup,
        Lit, AttrOf, Aggregate, CombineValues,
        EntityQuery, AttributeQuery, RelationQuery, QualifierQuery,
        CountQuery, VerifyQuery, ValueQuery, SuperlativeQuery,
    )
}

_ENUM_FIELDS = {"op": None, "cop": Cop, "sop": Sop, "direction": Dir}


def from_json(obj: dict) -> Node:
    """Rebuild a node from :func:`to_json` output; raises ValueError on
    malformed input."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("expected an object with a 'kind' field")
    cls = _NODE_TYPES.get(obj["kind"])
    if cls is None:
        raise ValueError(f"unknown node kind {obj['kind']!r}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in obj or obj[f.name] is None:
            continue
        v = obj[f.name]
        if isinstance(v, dict) and "kind" in v:
            kwargs[f.name] = from_json(v)
        elif isinstance(v, dict) and "type" in v:
            kwargs[f.name] = Value.parse(VType(v["type"]), v["text"])
        elif f.name == "op":
            kwargs[f.name] = Lop(v) if cls in (Combine, CombineValues) else Vop(v)
        elif f.name in _ENUM_FIELDS and _ENUM_FIELDS[f.name] is not None:
            kwargs[f.name] = _ENUM_FIELDS[f.name](v)
        else:
            kwargs[f.name] = v
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(f"malformed {obj['kind']} node: {exc}") from None


def to_json_text(node: Node) -> str:
    return json.dumps(to_json(node), ensure_ascii=False)
