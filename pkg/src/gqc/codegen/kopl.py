"""KoPL-style program emitter.

Queries compile to linear function programs over entity-set states, joined
by `` . ``, with binary combinations serialized as ``Branch1 | Branch2 |
Op``.  Attribute, relation and qualifier keys are snake_cased in arguments;
entity and concept names stay verbatim.

Relation constraints compile through ``Relate``: the target set is built
first, ``Relate(relation, direction)`` maps it to the connected entities,
and ``And`` intersects with the constrained set.  Counted relations use the
binary ``FilterRelCount(relation, direction, op, n)`` extension.  Boolean
queries over attribute comparisons use ``QueryAttr`` + ``Verify*``; every
other verify form reduces to ``Count() . VerifyNum(0, >)``.
"""

from __future__ import annotations

from .. import ast
from ..diagnostics import E_UNSUPPORTED, UnsupportedError, error
from ..kopl_text import Call, Program, chain, combine, extend
from ..mapping import SchemaMapping, snake_case
from ..values import COP_SYMBOLS, Cop, Value, VType, format_decimal
from . import check_valid

FILTER_BY_TYPE = {
    VType.STRING: "FilterStr",
    VType.NUMBER: "FilterNum",
    VType.YEAR: "FilterYear",
    VType.DATE: "FilterDate",
    VType.TIME: "FilterTime",
}
VERIFY_BY_TYPE = {
    VType.STRING: "VerifyStr",
    VType.NUMBER: "VerifyNum",
    VType.YEAR: "VerifyYear",
    VType.DATE: "VerifyDate",
    VType.TIME: "VerifyTime",
}

LOP_CALLS = {ast.Lop.AND: "And", ast.Lop.OR: "Or", ast.Lop.NOT: "Not"}


def _unsupported(what: str) -> UnsupportedError:
    return UnsupportedError([error(E_UNSUPPORTED, f"not expressible as a KoPL program: {what}")])


def typed_value_text(v: Value) -> str:
    """Self-describing value serialization used by QFilter arguments."""
    return f"{v.vtype.value} {v.raw}"


def _filter_call(c: ast.AttrCmp) -> Call:
    attr = snake_case(c.attribute)
    v = c.value
    op = COP_SYMBOLS[c.cop]
    if v.vtype is VType.STRING:
        if c.cop is Cop.IS:
            return Call("FilterStr", (attr, v.raw))
        return Call("FilterStr", (attr, v.raw, op))
    if v.vtype is VType.NUMBER:
        return Call("FilterNum", (attr, format_decimal(v.magnitude), v.unit or "", op))
    return Call(FILTER_BY_TYPE[v.vtype], (attr, v.raw, op))


def _qfilter_call(q: ast.QualifierCond) -> Call:
    return Call("QFilter", (snake_case(q.key), typed_value_text(q.value), COP_SYMBOLS[q.cop]))


def _attr_steps(c: ast.AttrCmp) -> list[Call]:
    steps = [_filter_call(c)]
    if c.qualifier is not None:
        steps.append(_qfilter_call(c.qualifier))
    return steps


def _set_program(node: ast.EntitySet) -> Program:
    if isinstance(node, ast.Entity):
        return chain(Call("Find", (node.name,)))
    if isinstance(node, ast.Concept):
        return chain(Call("FindAll"), Call("FilterConcept", (node.name,)))
    if isinstance(node, ast.Typed):
        return extend(_set_program(node.inner), Call("FilterConcept", (node.concept,)))
    if isinstance(node, ast.Combine):
        return combine(_set_program(node.left), _set_program(node.right), Call(LOP_CALLS[node.op]))
    if isinstance(node, ast.Constrained):
        return _constrained_program(node.inner, node.constraint)
    raise TypeError(f"not an entity set: {node!r}")


def _constrained_program(inner: ast.EntitySet, c: ast.Constraint) -> Program:
    base = _set_program(inner)
    if isinstance(c, ast.AttrCmp):
        return extend(base, *_attr_steps(c))
    if isinstance(c, ast.AttrSup):
        if c.qualifier is not None:
            raise _unsupported("qualifier condition on an attribute superlative")
        return extend(base, Call("SelectAmong", (snake_case(c.attribute), c.sop.value)))
    if isinstance(c, ast.Rel):
        rel = snake_case(c.relation)
        direction = (c.direction or ast.DEFAULT_DIR).value
        if c.count is not None:
            if c.qualifier is not None:
                raise _unsupported("qualifier condition combined with a relation count")
            n = str(int(c.count.value.magnitude))
            op = COP_SYMBOLS[c.count.cop]
            return combine(_set_program(c.target), base, Call("FilterRelCount", (rel, direction, op, n)))
        related = extend(_set_program(c.target), Call("Relate", (rel, direction)))
        if c.qualifier is not None:
            related = extend(related, _qfilter_call(c.qualifier))
        return combine(related, base, Call("And"))
    if isinstance(c, ast.RelSup):
        raise _unsupported("relational superlative constraint")
    raise TypeError(f"not a constraint: {c!r}")


def query_program(query: ast.Query) -> Program:
    """Build the program tree for a normalized, valid query."""
    q = query
    if isinstance(q, ast.EntityQuery):
        return extend(_set_program(q.entityset), Call("What"))
    if isinstance(q, ast.CountQuery):
        return extend(_set_program(q.entityset), Call("Count"))
    if isinstance(q, ast.SuperlativeQuery):
        step = Call("SelectAmong", (snake_case(q.attribute), q.sop.value))
        return extend(_set_program(q.entityset), step, Call("What"))
    if isinstance(q, ast.AttributeQuery):
        return extend(_set_program(q.entityset), Call("QueryAttr", (snake_case(q.attribute),)))
    if isinstance(q, ast.RelationQuery):
        return combine(_set_program(q.source), _set_program(q.target), Call("QueryRelation"))
    if isinstance(q, ast.QualifierQuery):
        key = snake_case(q.qualifier)
        c = q.constraint
        if isinstance(c, ast.AttrCmp):
            attr = snake_case(c.attribute)
            return extend(_set_program(q.entityset), *_attr_steps(c), Call("QueryAttrQualifier", (attr, key)))
        if isinstance(c, ast.AttrSup):
            if c.qualifier is not None:
                raise _unsupported("qualifier condition on an attribute superlative")
            attr = snake_case(c.attribute)
            return extend(
                _set_program(q.entityset),
                Call("SelectAmong", (attr, c.sop.value)),
                Call("QueryAttrQualifier", (attr, key)),
            )
        if isinstance(c, ast.Rel) and c.count is None and c.qualifier is None:
            rel = snake_case(c.relation)
            direction = (c.direction or ast.DEFAULT_DIR).value
            op = Call("QueryRelationQualifier", (rel, direction, key))
            return combine(_set_program(q.entityset), _set_program(c.target), op)
        raise _unsupported("qualifier query over this constraint form")
    if isinstance(q, ast.VerifyQuery):
        c = q.constraint
        if isinstance(c, ast.AttrCmp) and c.qualifier is None:
            verify = Call(VERIFY_BY_TYPE[c.value.vtype], (c.value.raw, COP_SYMBOLS[c.cop]))
            attr_q = Call("QueryAttr", (snake_case(c.attribute),))
            return extend(_set_program(q.entityset), attr_q, verify)
        constrained = _constrained_program(q.entityset, c)
        return extend(constrained, Call("Count"), Call("VerifyNum", ("0", ">")))
    if isinstance(q, ast.ValueQuery):
        raise _unsupported("free-standing value queries")
    raise TypeError(f"not a query: {q!r}")


def emit_kopl(query: ast.Query, mapping: SchemaMapping | None = None) -> str:
    """Compile a validated query to KoPL program text.  Deterministic;
    executable by the program runner and invertible by the reverse
    translator.  The mapping argument is accepted for interface uniformity;
    this backend always uses the fixed snake_case label rule."""
    q = check_valid(query)
    return query_program(q).render()
