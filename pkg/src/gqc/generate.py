"""Random and exhaustive query generation for property testing and the
``gen`` CLI command.

:func:`gen_ast` is deterministic in its seed, samples every grammar
production with non-zero probability, and only produces validate-clean
trees.  The shared vocabulary uses lowercase multi-word labels in predicate
positions (so snake_case round-trips exactly) and overlaps with
:func:`gen_graph`'s vocabulary so that random queries actually hit random
graphs.

Value-expression shapes are restricted to what the flat IR surface can
re-read unambiguously: combinations are left-nested and never contain
aggregates (an aggregate of a combination is fine).
"""

from __future__ import annotations

import datetime
import random
from decimal import Decimal

from . import ast
from .graphstore import AttributeValue, EntityRecord, PropertyGraph, RelationEdge
from .values import Cop, Value, VType

ENTITY_NAMES = (
    "Alpha", "Beta One", "Gamma", "Delta Prime", "Epsilon", "Zeta", "Kappa Station",
)
CONCEPTS = ("film", "newscast", "city", "human")
ATTRIBUTES = ("duration", "box office", "height", "start year")
RELATIONS = ("capital", "educated at", "genre", "spouse")
QUALIFIER_KEYS = ("start time", "end time", "point in time")
UNITS = (None, "minute", "metre")
STRING_VALUES = ("drama", "news", "blue")


def _value(rng: random.Random, vtype: VType | None = None) -> Value:
    t = vtype or rng.choice(list(VType))
    if t is VType.STRING:
        return Value.string(rng.choice(STRING_VALUES))
    if t is VType.NUMBER:
        mag = Decimal(rng.randrange(0, 500))
        if rng.random() < 0.3:
            mag += Decimal(rng.randrange(1, 10)) / 10
        return Value.number(mag, rng.choice(UNITS))
    if t is VType.YEAR:
        return Value.of_year(rng.randrange(1900, 2031))
    if t is VType.DATE:
        day = datetime.date(2000, 1, 1) + datetime.timedelta(days=rng.randrange(0, 8000))
        return Value.of_date(day)
    return Value.of_time(datetime.time(rng.randrange(24), rng.randrange(60)))


def _cop(rng: random.Random, value: Value) -> Cop:
    if value.vtype is VType.STRING:
        return rng.choice([Cop.IS, Cop.IS_NOT])
    return rng.choice(list(Cop))


def _qualifier_cond(rng: random.Random) -> ast.QualifierCond:
    value = _value(rng)
    return ast.QualifierCond(rng.choice(QUALIFIER_KEYS), _cop(rng, value), value)


def _count_cmp(rng: random.Random) -> ast.CountCmp:
    return ast.CountCmp(rng.choice(list(Cop)), Value.number(Decimal(rng.randrange(0, 4))))


def _direction(rng: random.Random) -> ast.Dir | None:
    return rng.choice([None, ast.Dir.BACKWARD, ast.Dir.FORWARD])


def _constraint(rng: random.Random, depth: int) -> ast.Constraint:
    roll = rng.random()
    if roll < 0.40:
        value = _value(rng)
        qualifier = _qualifier_cond(rng) if rng.random() < 0.25 else None
        return ast.AttrCmp(rng.choice(ATTRIBUTES), _cop(rng, value), value, qualifier)
    if roll < 0.52:
        qualifier = _qualifier_cond(rng) if rng.random() < 0.2 else None
        return ast.AttrSup(rng.choice(list(ast.Sop)), rng.choice(ATTRIBUTES), qualifier)
    if roll < 0.97:
        target = _entity_set(rng, depth - 1)
        count = _count_cmp(rng) if rng.random() < 0.2 else None
        qualifier = _qualifier_cond(rng) if count is None and rng.random() < 0.2 else None
        return ast.Rel(rng.choice(RELATIONS), _direction(rng), target, count, qualifier)
    return ast.RelSup(rng.choice(RELATIONS), _direction(rng), rng.choice(list(ast.Sop)), _entity_set(rng, depth - 1))


def _leaf(rng: random.Random) -> ast.EntitySet:
    if rng.random() < 0.6:
        return ast.Entity(rng.choice(ENTITY_NAMES))
    return ast.Concept(rng.choice(CONCEPTS))


def _entity_set(rng: random.Random, depth: int) -> ast.EntitySet:
    if depth <= 1:
        return _leaf(rng)
    roll = rng.random()
    if roll < 0.30:
        return _leaf(rng)
    if roll < 0.45:
        return ast.Typed(rng.choice(CONCEPTS), _entity_set(rng, depth - 1))
    if roll < 0.62:
        op = rng.choice(list(ast.Lop))
        return ast.Combine(op, _entity_set(rng, depth - 1), _entity_set(rng, depth - 1))
    return ast.Constrained(_entity_set(rng, depth - 1), _constraint(rng, depth))


def _value_primary(rng: random.Random) -> ast.ValueExpr:
    if rng.random() < 0.5:
        return ast.Lit(_value(rng))
    return ast.AttrOf(rng.choice(ATTRIBUTES), rng.choice(ENTITY_NAMES))


def _value_expr(rng: random.Random, depth: int) -> ast.ValueExpr:
    roll = rng.random()
    if roll < 0.4 or depth <= 1:
        return _value_primary(rng)
    if roll < 0.7:
        # left-nested combination chain of primaries
        expr = _value_primary(rng)
        for _ in range(rng.randrange(1, depth)):
            expr = ast.CombineValues(rng.choice(list(ast.Lop)), expr, _value_primary(rng))
        return expr
    # aggregate tower; sum/average need numeric-typed input
    op = rng.choice(list(ast.Vop))
    if op in (ast.Vop.SUM, ast.Vop.AVERAGE):
        inner: ast.ValueExpr = ast.AttrOf(rng.choice(ATTRIBUTES), rng.choice(ENTITY_NAMES))
    else:
        inner = _value_primary(rng) if rng.random() < 0.7 else ast.Lit(_value(rng, VType.NUMBER))
        if isinstance(inner, ast.Lit) and inner.value.vtype is VType.STRING:
            inner = ast.Lit(_value(rng, VType.NUMBER))
    return ast.Aggregate(op, inner)


def gen_ast(seed: int, max_depth: int) -> ast.Query:
    """Deterministically generate one random valid query."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rng = random.Random(seed)
    roll = rng.random()
    es = lambda: _entity_set(rng, max_depth)
    if roll < 0.22:
        return ast.EntityQuery(es())
    if roll < 0.34:
        return ast.CountQuery(es())
    if roll < 0.46:
        return ast.AttributeQuery(rng.choice(ATTRIBUTES), es())
    if roll < 0.56:
        return ast.RelationQuery(es(), es())
    if roll < 0.68:
        constraint = _query_constraint(rng, max_depth)
        return ast.QualifierQuery(rng.choice(QUALIFIER_KEYS), es(), constraint)
    if roll < 0.80:
        return ast.VerifyQuery(es(), _constraint(rng, max_depth))
    if roll < 0.92:
        return ast.SuperlativeQuery(rng.choice(list(ast.Sop)), rng.choice(ATTRIBUTES), es())
    return ast.ValueQuery(_value_expr(rng, max_depth))


def _query_constraint(rng: random.Random, depth: int) -> ast.Constraint:
    """Constraints usable under a qualifier query: attribute comparisons
    (with optional qualifier condition), plain relations, or attribute
    superlatives."""
    roll = rng.random()
    if roll < 0.5:
        value = _value(rng)
        qualifier = _qualifier_cond(rng) if rng.random() < 0.25 else None
        return ast.AttrCmp(rng.choice(ATTRIBUTES), _cop(rng, value), value, qualifier)
    if roll < 0.65:
        return ast.AttrSup(rng.choice(list(ast.Sop)), rng.choice(ATTRIBUTES))
    return ast.Rel(rng.choice(RELATIONS), _direction(rng), _entity_set(rng, depth - 1))


# ---------------------------------------------------------------------------
# Random graphs for differential testing


def gen_graph(seed: int, max_entities: int = 50) -> PropertyGraph:
    """Deterministic random property graph over the same vocabulary as the
    query generator."""
    rng = random.Random(seed)
    n = rng.randrange(2, max_entities + 1)
    ids = [f"n{i}" for i in range(n)]
    entities = {}
    for eid in ids:
        attrs = []
        for _ in range(rng.randrange(0, 4)):
            quals = tuple(
                (rng.choice(QUALIFIER_KEYS), _value(rng)) for _ in range(rng.randrange(0, 3))
            )
            attrs.append(AttributeValue(rng.choice(ATTRIBUTES), _value(rng), quals))
        rels = []
        for _ in range(rng.randrange(0, 5)):
            quals = tuple(
                (rng.choice(QUALIFIER_KEYS), _value(rng)) for _ in range(rng.randrange(0, 3))
            )
            rels.append(RelationEdge(rng.choice(RELATIONS), rng.choice(ids), quals))
        entities[eid] = EntityRecord(
            id=eid,
            name=rng.choice(ENTITY_NAMES),
            concepts=tuple(sorted(rng.sample(CONCEPTS, rng.randrange(0, 3)))),
            attributes=tuple(attrs),
            relations=tuple(rels),
        )
    return PropertyGraph.from_entities(entities)


# ---------------------------------------------------------------------------
# Exhaustive enumeration of small trees (fixed fillers, every operator)


def _fill_values() -> list[Value]:
    return [
        Value.string("drama"),
        Value.number(Decimal(2), "minute"),
        Value.number(Decimal(2)),
        Value.of_year(2000),
        Value.of_date(datetime.date(2000, 1, 2)),
        Value.of_time(datetime.time(12, 0)),
    ]


def enumerate_constraints(leaves: list[ast.EntitySet]) -> list[ast.Constraint]:
    out: list[ast.Constraint] = []
    qc = ast.QualifierCond("start time", Cop.IS, Value.of_year(2000))
    for value in _fill_values():
        cops = [Cop.IS, Cop.IS_NOT] if value.vtype is VType.STRING else list(Cop)
        for cop in cops:
            out.append(ast.AttrCmp("duration", cop, value))
    out.append(ast.AttrCmp("duration", Cop.IS, Value.number(Decimal(2), "minute"), qc))
    for sop in ast.Sop:
        out.append(ast.AttrSup(sop, "duration"))
    out.append(ast.AttrSup(ast.Sop.LARGEST, "duration", qc))
    for direction in (None, ast.Dir.FORWARD, ast.Dir.BACKWARD):
        for leaf in leaves:
            out.append(ast.Rel("genre", direction, leaf))
    out.append(ast.Rel("genre", None, leaves[0], ast.CountCmp(Cop.GE, Value.number(Decimal(2)))))
    out.append(ast.Rel("genre", ast.Dir.FORWARD, leaves[0], None, qc))
    for sop in ast.Sop:
        out.append(ast.RelSup("genre", None, sop, leaves[0]))
    return out


def enumerate_sets(max_depth: int) -> list[ast.EntitySet]:
    leaves: list[ast.EntitySet] = [ast.Entity("Alpha"), ast.Concept("film")]
    if max_depth <= 1:
        return leaves
    inner = enumerate_sets(max_depth - 1)
    out = list(inner)
    for node in inner:
        out.append(ast.Typed("film", node))
    for op in ast.Lop:
        for left in leaves:
            for right in leaves:
                out.append(ast.Combine(op, left, right))
    for node in leaves:
        for c in enumerate_constraints(leaves):
            out.append(ast.Constrained(node, c))
    return out


def enumerate_queries(max_depth: int = 2) -> list[ast.Query]:
    """Every query shape of bounded entity-set depth with one representative
    filler per leaf slot and all operator members."""
    sets = enumerate_sets(max_depth)
    leaves = enumerate_sets(1)
    constraints = enumerate_constraints(leaves)
    out: list[ast.Query] = []
    for es in sets:
        out.append(ast.EntityQuery(es))
        out.append(ast.CountQuery(es))
        out.append(ast.AttributeQuery("duration", es))
        for sop in ast.Sop:
            out.append(ast.SuperlativeQuery(sop, "duration", es))
    for left in leaves:
        for right in leaves:
            out.append(ast.RelationQuery(left, right))
    for es in leaves:
        for c in constraints:
            out.append(ast.VerifyQuery(es, c))
            if not isinstance(c, ast.RelSup):
                out.append(ast.QualifierQuery("start time", es, c))
    values = [ast.Lit(v) for v in _fill_values()] + [ast.AttrOf("duration", "Alpha")]
    out.extend(ast.ValueQuery(v) for v in values)
    for vop in ast.Vop:
        out.append(ast.ValueQuery(ast.Aggregate(vop, ast.AttrOf("duration", "Alpha"))))
    for lop in ast.Lop:
        out.append(ast.ValueQuery(ast.CombineValues(lop, values[1], values[2])))
    return out
