"""Lambda-DCS emitter in SEMPRE call syntax.

Only the entity/concept/attribute/relation fragment of the IR has a
counterpart in this dialect: entity sets compose ``@filter``/``@intersect``
calls, concept constraints use the canonical TypeNP form
``(call @getProperty (call @singleton (<concept>)) (string !type))``,
superlatives use ``@superlative`` and counts the ``@listValue``/``@size``
composition.  Qualifier, relation-name, verify and free-standing value
queries have no counterpart and are rejected.
"""

from __future__ import annotations

from .. import ast
from ..diagnostics import E_UNSUPPORTED, UnsupportedError, error
from ..mapping import SchemaMapping, snake_case
from ..values import Cop, Value, VType, format_decimal
from . import check_valid

DCS_OPS = {
    Cop.IS: "=",
    Cop.IS_NOT: "!=",
    Cop.GT: ">",
    Cop.LT: "<",
    Cop.GE: ">=",
    Cop.LE: "<=",
}

_LOP_CALLS = {ast.Lop.AND: "@intersect", ast.Lop.OR: "@concat", ast.Lop.NOT: "@difference"}


def _unsupported(what: str) -> UnsupportedError:
    return UnsupportedError([error(E_UNSUPPORTED, f"no lambda-DCS counterpart: {what}")])


def _value(v: Value) -> str:
    if v.vtype is VType.STRING:
        return f"(string {v.raw})"
    if v.vtype is VType.NUMBER:
        mag = format_decimal(v.magnitude)
        return f"(number {mag} {snake_case(v.unit)})" if v.unit else f"(number {mag})"
    if v.vtype is VType.YEAR:
        return f"(date {v.year} -1 -1)"
    if v.vtype is VType.DATE:
        return f"(date {v.date.year} {v.date.month} {v.date.day})"
    t = v.time
    if t.second:
        return f"(time {t.hour} {t.minute} {t.second})"
    return f"(time {t.hour} {t.minute})"


def _concept(name: str) -> str:
    return f"(call @getProperty (call @singleton ({snake_case(name)})) (string !type))"


def _superlative(sop: ast.Sop, attribute: str, inner: str) -> str:
    extreme = "min" if sop is ast.Sop.SMALLEST else "max"
    return f"(call @superlative {inner} (string {extreme}) (string {snake_case(attribute)}))"


def _entity_set(node: ast.EntitySet) -> str:
    if isinstance(node, ast.Entity):
        return f"(call @singleton (string {node.name}))"
    if isinstance(node, ast.Concept):
        return _concept(node.name)
    if isinstance(node, ast.Typed):
        return f"(call @intersect {_concept(node.concept)} {_entity_set(node.inner)})"
    if isinstance(node, ast.Combine):
        return f"(call {_LOP_CALLS[node.op]} {_entity_set(node.left)} {_entity_set(node.right)})"
    if isinstance(node, ast.Constrained):
        return _constrained(node.inner, node.constraint)
    raise TypeError(f"not an entity set: {node!r}")


def _constrained(inner: ast.EntitySet, c: ast.Constraint) -> str:
    base = _entity_set(inner)
    if isinstance(c, ast.AttrCmp):
        if c.qualifier is not None:
            raise _unsupported("qualifier conditions")
        op = DCS_OPS[c.cop]
        return f"(call @filter {base} (string {snake_case(c.attribute)}) (string {op}) {_value(c.value)})"
    if isinstance(c, ast.AttrSup):
        if c.qualifier is not None:
            raise _unsupported("qualifier conditions")
        return _superlative(c.sop, c.attribute, base)
    if isinstance(c, ast.Rel):
        if c.qualifier is not None:
            raise _unsupported("qualifier conditions")
        if c.count is not None:
            raise _unsupported("counted relation constraints")
        rel = f"(string {snake_case(c.relation)})"
        if c.direction is not ast.Dir.BACKWARD:
            rel = f"(call @reverse {rel})"
        return f"(call @filter {base} {rel} (string =) {_entity_set(c.target)})"
    if isinstance(c, ast.RelSup):
        raise _unsupported("relational superlative constraints")
    raise TypeError(f"not a constraint: {c!r}")


def emit_lambda_dcs(query: ast.Query, mapping: SchemaMapping | None = None) -> str:
    """Compile a validated query to lambda-DCS text.  Deterministic.

    The mapping argument is accepted for interface uniformity; labels follow
    the fixed snake_case rule in symbol position.
    """
    q = check_valid(query)
    if isinstance(q, ast.EntityQuery):
        return f"(call @listValue {_entity_set(q.entityset)})"
    if isinstance(q, ast.CountQuery):
        return f"(call @listValue (call @size {_entity_set(q.entityset)}))"
    if isinstance(q, ast.SuperlativeQuery):
        return f"(call @listValue {_superlative(q.sop, q.attribute, _entity_set(q.entityset))})"
    if isinstance(q, ast.AttributeQuery):
        prop = snake_case(q.attribute)
        return f"(call @listValue (call @getProperty {_entity_set(q.entityset)} (string {prop})))"
    if isinstance(q, (ast.QualifierQuery, ast.RelationQuery)):
        raise _unsupported("qualifier and relation-name queries")
    if isinstance(q, (ast.VerifyQuery, ast.ValueQuery)):
        raise _unsupported("boolean and free-standing value queries")
    raise TypeError(f"not a query: {q!r}")  # pragma: no cover
