"""SPARQL emitter.

The dialect is triple-based with bare predicate names: ``?e name "x"`` binds
entities by label, ``?e instance_of ?c . ?c name "film"`` types them,
attribute values are reified through value nodes (``?e duration ?pv_1 .
?pv_1 unit "minute" . ?pv_1 value "110"^^xsd:double``) and qualifiers attach
to bracketed fact nodes (``[ fact_h ?e_1 ; fact_r capital ; fact_t ?e_2 ]
start_time ?qpv``).

Variable conventions: the answer entity of an entity-returning query is the
plain ``?e``; every other entity variable is ``?e_1``, ``?e_2``, ... in
allocation order.  Relation and qualifier queries allocate their two
endpoint variables before walking nested constraints, so a constraint
target inside the first endpoint numbers after both.  Value nodes use
``?pv_k`` (with the plain ``?pv``/``?v`` reserved for the projection spine),
concepts use ``?c`` then ``?c_1``, qualifier answers use ``?qpv``.

Constructs that the line-oriented dialect cannot express in a reversible way
(set union/difference, nested superlative constraints, concept typing over
composite sets, relation counts outside the root of an entity query) raise
:class:`UnsupportedError` rather than emitting out-of-dialect SPARQL.
"""

from __future__ import annotations

from .. import ast
from ..diagnostics import (
    E_PREDICATE_COLLISION,
    E_UNSUPPORTED,
    UnsupportedError,
    ValidationError,
    error,
)
from ..mapping import (
    DEFAULT_MAPPING,
    PRED_FACT_H,
    PRED_FACT_R,
    PRED_FACT_T,
    PRED_INSTANCE_OF,
    PRED_NAME,
    PRED_UNIT,
    PRED_VALUE,
    SchemaMapping,
    escape_quoted,
)
from ..values import COP_SYMBOLS as COP_OPS
from ..values import Cop, Value, VType, format_decimal
from . import check_valid

_TYPE_SUFFIX = {VType.YEAR: "^^xsd:year", VType.DATE: "^^xsd:date", VType.TIME: "^^xsd:time"}


def _unsupported(what: str) -> UnsupportedError:
    return UnsupportedError([error(E_UNSUPPORTED, f"not expressible in the SPARQL dialect: {what}")])


class _Emitter:
    def __init__(self, mapping: SchemaMapping):
        self.m = mapping
        self.prefix = mapping.option("sparql", "predicate_prefix") or ""
        self.items: list[str] = []
        self.counts = {"e": 0, "c": 0, "pv": 0, "qpv": 0}
        self.having: str | None = None

    # -- variables and predicates -------------------------------------------

    def fresh(self, family: str) -> str:
        self.counts[family] += 1
        return f"?{family}_{self.counts[family]}"

    def concept_var(self) -> str:
        n = self.counts["c"]
        self.counts["c"] += 1
        return "?c" if n == 0 else f"?c_{n}"

    def pred(self, reserved: str) -> str:
        return f"<{self.prefix}{reserved}>" if self.prefix else reserved

    def label(self, text: str) -> str:
        norm = self.m.normalize_label(text)
        if self.m.is_reserved(norm):
            raise ValidationError(
                [error(E_PREDICATE_COLLISION, f"label {text!r} normalizes to reserved predicate {norm!r}")]
            )
        return f"<{self.prefix}{norm}>" if self.prefix else norm

    # -- literal rendering ----------------------------------------------------

    def literal(self, v: Value) -> str:
        if v.vtype is VType.STRING:
            return f'"{escape_quoted(v.raw)}"'
        if v.vtype is VType.NUMBER:
            return f'"{format_decimal(v.magnitude)}"{self.m.numeric_datatype_suffix}'
        return f'"{v.raw}"{_TYPE_SUFFIX[v.vtype]}'

    # -- body assembly ---------------------------------------------------------

    def add(self, item: str) -> None:
        self.items.append(item)

    def body(self) -> str:
        return " . ".join(self.items)

    # -- entity sets -----------------------------------------------------------

    def entity_set(self, node: ast.EntitySet, var: str, at_root: bool = False) -> None:
        if isinstance(node, ast.Entity):
            self.add(f'{var} {self.pred(PRED_NAME)} "{escape_quoted(node.name)}"')
        elif isinstance(node, ast.Concept):
            cv = self.concept_var()
            self.add(f"{var} {self.pred(PRED_INSTANCE_OF)} {cv}")
            self.add(f'{cv} {self.pred(PRED_NAME)} "{escape_quoted(node.name)}"')
        elif isinstance(node, ast.Typed):
            if not isinstance(node.inner, (ast.Entity, ast.Concept, ast.Typed)):
                raise _unsupported("concept typing of a composite entity set")
            cv = self.concept_var()
            self.add(f"{var} {self.pred(PRED_INSTANCE_OF)} {cv}")
            self.add(f'{cv} {self.pred(PRED_NAME)} "{escape_quoted(node.concept)}"')
            self.entity_set(node.inner, var)
        elif isinstance(node, ast.Combine):
            raise _unsupported(f"set combination '{node.op.value}'")
        elif isinstance(node, ast.Constrained):
            self.entity_set(node.inner, var, at_root)
            self.constraint(node.constraint, var, at_root)
        else:  # pragma: no cover - defensive
            raise TypeError(f"not an entity set: {node!r}")

    # -- constraints -------------------------------------------------------------

    def constraint(self, c: ast.Constraint, var: str, at_root: bool = False) -> None:
        if isinstance(c, ast.AttrCmp):
            pv = self.attr_condition(c, var)
            if c.qualifier is not None:
                fact = self.fact(var, self.label(c.attribute), pv)
                self.qualifier_cond(fact, c.qualifier)
        elif isinstance(c, ast.Rel):
            self.relation(c, var, at_root)
        elif isinstance(c, ast.AttrSup):
            raise _unsupported("attribute superlative used as a nested constraint")
        elif isinstance(c, ast.RelSup):
            raise _unsupported("relational superlative constraint")
        else:  # pragma: no cover - defensive
            raise TypeError(f"not a constraint: {c!r}")

    def attr_condition(self, c: ast.AttrCmp, var: str) -> str:
        """Emit the value-node triples for one attribute comparison; returns
        the value-node variable."""
        pv = self.fresh("pv")
        k = self.counts["pv"]
        self.add(f"{var} {self.label(c.attribute)} {pv}")
        v = c.value
        if v.vtype is VType.NUMBER and v.unit is not None:
            self.add(f'{pv} {self.pred(PRED_UNIT)} "{escape_quoted(v.unit)}"')
        if c.cop is Cop.IS:
            self.add(f"{pv} {self.pred(PRED_VALUE)} {self.literal(v)}")
        else:
            self.add(f"{pv} {self.pred(PRED_VALUE)} ?v_{k}")
            self.add(f"FILTER ( ?v_{k} {COP_OPS[c.cop]} {self.literal(v)} )")
        return pv

    def relation(self, c: ast.Rel, var: str, at_root: bool) -> None:
        tv = self.fresh("e")
        rel = self.label(c.relation)
        head, tail = (var, tv) if c.direction is ast.Dir.BACKWARD else (tv, var)
        self.add(f"{head} {rel} {tail}")
        self.entity_set(c.target, tv)
        if c.qualifier is not None:
            self.qualifier_cond(self.fact(head, rel, tail), c.qualifier)
        if c.count is not None:
            if not at_root:
                raise _unsupported("relation count below the root of an entity query")
            if self.having is not None:
                raise _unsupported("more than one relation count")
            n = int(c.count.value.magnitude)
            self.having = f"COUNT(DISTINCT {tv}) {COP_OPS[c.count.cop]} {n}"

    def fact(self, head: str, relation: str, tail: str) -> str:
        return (
            f"[ {self.pred(PRED_FACT_H)} {head} ; {self.pred(PRED_FACT_R)} {relation} ; "
            f"{self.pred(PRED_FACT_T)} {tail} ]"
        )

    def qualifier_cond(self, fact: str, q: ast.QualifierCond) -> None:
        if q.value.vtype is VType.NUMBER and q.value.unit is not None:
            raise _unsupported("qualifier condition on a number with a unit")
        key = self.label(q.key)
        if q.cop is Cop.IS:
            self.add(f"{fact} {key} {self.literal(q.value)}")
        else:
            qv = self.fresh("qpv")
            self.add(f"{fact} {key} {qv}")
            self.add(f"FILTER ( {qv} {COP_OPS[q.cop]} {self.literal(q.value)} )")


def emit_sparql(query: ast.Query, mapping: SchemaMapping | None = None) -> str:
    """Compile a validated query to SPARQL text.  Deterministic.

    Raises :class:`UnsupportedError` for constructs outside the dialect and
    :class:`ValidationError` for ill-formed input or predicate collisions.
    """
    q = check_valid(query)
    e = _Emitter(mapping or DEFAULT_MAPPING)

    if isinstance(q, ast.EntityQuery):
        e.entity_set(q.entityset, "?e", at_root=True)
        tail = f" GROUP BY ?e HAVING ( {e.having} )" if e.having else ""
        return f"SELECT ?e WHERE {{ {e.body()} }}{tail}"

    if isinstance(q, ast.CountQuery):
        e.entity_set(q.entityset, "?e")
        return f"SELECT (COUNT(DISTINCT ?e) AS ?count) WHERE {{ {e.body()} }}"

    if isinstance(q, ast.VerifyQuery):
        e.entity_set(q.entityset, "?e")
        e.constraint(q.constraint, "?e")
        return f"ASK {{ {e.body()} }}"

    if isinstance(q, ast.SuperlativeQuery):
        e.entity_set(q.entityset, "?e")
        e.add(f"?e {e.label(q.attribute)} ?pv")
        e.add(f"?pv {e.pred(PRED_VALUE)} ?v")
        order = "?v" if q.sop is ast.Sop.SMALLEST else "DESC(?v)"
        return f"SELECT ?e WHERE {{ {e.body()} }} ORDER BY {order} LIMIT 1"

    if isinstance(q, ast.AttributeQuery):
        var = e.fresh("e")
        e.entity_set(q.entityset, var)
        e.add(f"{var} {e.label(q.attribute)} ?pv")
        return f"SELECT DISTINCT ?pv WHERE {{ {e.body()} }}"

    if isinstance(q, ast.RelationQuery):
        vs = e.fresh("e")
        vt = e.fresh("e")
        e.entity_set(q.source, vs)
        e.entity_set(q.target, vt)
        e.add(f"{vs} ?p {vt}")
        return f"SELECT DISTINCT ?p WHERE {{ {e.body()} }}"

    if isinstance(q, ast.QualifierQuery):
        c = q.constraint
        key = e.label(q.qualifier)
        if isinstance(c, ast.Rel) and c.count is None:
            ve = e.fresh("e")
            vt = e.fresh("e")
            e.entity_set(q.entityset, ve)
            e.entity_set(c.target, vt)
            rel = e.label(c.relation)
            head, tail = (ve, vt) if c.direction is ast.Dir.BACKWARD else (vt, ve)
            e.add(f"{head} {rel} {tail}")
            fact = e.fact(head, rel, tail)
            e.add(f"{fact} {key} ?qpv")
            if c.qualifier is not None:
                e.qualifier_cond(fact, c.qualifier)
            return f"SELECT DISTINCT ?qpv WHERE {{ {e.body()} }}"
        if isinstance(c, ast.AttrCmp):
            ve = e.fresh("e")
            e.entity_set(q.entityset, ve)
            pv = e.attr_condition(c, ve)
            fact = e.fact(ve, e.label(c.attribute), pv)
            e.add(f"{fact} {key} ?qpv")
            if c.qualifier is not None:
                e.qualifier_cond(fact, c.qualifier)
            return f"SELECT DISTINCT ?qpv WHERE {{ {e.body()} }}"
        raise _unsupported("qualifier query over this constraint form")

    if isinstance(q, ast.ValueQuery):
        raise _unsupported("value queries")

    raise TypeError(f"not a query: {q!r}")  # pragma: no cover
