"""Cypher emitter.

Entities are nodes matched by their ``name`` property, concept membership is
an ``instance_of`` edge to a ``Concept`` node (or a node label when the
``cypher.concept_as_label`` option is on), attributes are node properties
with a ``<attr>__unit`` companion for carried units, and qualifiers are
relationship properties.  Node variables are ``e1``, ``e2``, ... in
allocation order; relationship variables ``r1``, ``r2``, ...

Assembly: one MATCH clause per relationship pattern in discovery order, with
endpoint property maps inlined at first mention, then bare MATCH clauses for
nodes that appear in no pattern, then WHERE, an optional counting WITH, and
the RETURN clause.
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
from ..mapping import DEFAULT_MAPPING, SchemaMapping, escape_quoted
from ..values import Cop, Value, VType, format_decimal
from . import check_valid

CYPHER_OPS = {
    Cop.IS: "=",
    Cop.IS_NOT: "<>",
    Cop.GT: ">",
    Cop.LT: "<",
    Cop.GE: ">=",
    Cop.LE: "<=",
}


def _unsupported(what: str) -> UnsupportedError:
    return UnsupportedError([error(E_UNSUPPORTED, f"not expressible in the Cypher dialect: {what}")])


def _literal(v: Value) -> str:
    if v.vtype is VType.NUMBER:
        return format_decimal(v.magnitude)
    if v.vtype is VType.YEAR:
        return str(v.year)
    return f'"{escape_quoted(v.raw)}"'


class _Emitter:
    def __init__(self, mapping: SchemaMapping):
        self.m = mapping
        self.concept_as_label = bool(mapping.option("cypher", "concept_as_label"))
        self.node_count = 0
        self.rel_count = 0
        self.props: dict[str, list[tuple[str, str]]] = {}
        self.labels: dict[str, list[str]] = {}
        # pattern items: ("rel", head, tail, relvar|None, predicate|None)
        #              | ("concept", var, concept_name)
        self.patterns: list[tuple] = []
        self.where: list[str] = []
        self.count_filter: str | None = None

    def label(self, text: str) -> str:
        norm = self.m.normalize_label(text)
        if self.m.is_reserved(norm):
            raise ValidationError(
                [error(E_PREDICATE_COLLISION, f"label {text!r} normalizes to reserved predicate {norm!r}")]
            )
        return norm

    def node(self) -> str:
        self.node_count += 1
        return f"e{self.node_count}"

    def rel_var(self) -> str:
        self.rel_count += 1
        return f"r{self.rel_count}"

    # -- walking ---------------------------------------------------------------

    def entity_set(self, node: ast.EntitySet, var: str, at_root: bool = False) -> None:
        if isinstance(node, ast.Entity):
            self.props.setdefault(var, []).append(("name", f'"{escape_quoted(node.name)}"'))
        elif isinstance(node, ast.Concept):
            self.concept(var, node.name)
        elif isinstance(node, ast.Typed):
            self.concept(var, node.concept)
            self.entity_set(node.inner, var, at_root)
        elif isinstance(node, ast.Combine):
            raise _unsupported(f"set combination '{node.op.value}'")
        elif isinstance(node, ast.Constrained):
            self.entity_set(node.inner, var, at_root)
            self.constraint(node.constraint, var, at_root)
        else:  # pragma: no cover - defensive
            raise TypeError(f"not an entity set: {node!r}")

    def concept(self, var: str, name: str) -> None:
        if self.concept_as_label:
            self.labels.setdefault(var, []).append(self.label(name))
        else:
            self.patterns.append(("concept", var, name))

    def constraint(self, c: ast.Constraint, var: str, at_root: bool = False) -> None:
        if isinstance(c, ast.AttrCmp):
            if c.qualifier is not None:
                raise _unsupported("qualifier condition on an attribute (no attribute-fact reification)")
            self.attr_condition(c, var)
        elif isinstance(c, ast.Rel):
            self.relation(c, var, at_root)
        elif isinstance(c, ast.AttrSup):
            raise _unsupported("attribute superlative used as a nested constraint")
        elif isinstance(c, ast.RelSup):
            raise _unsupported("relational superlative constraint")
        else:  # pragma: no cover - defensive
            raise TypeError(f"not a constraint: {c!r}")

    def attr_condition(self, c: ast.AttrCmp, var: str) -> None:
        attr = self.label(c.attribute)
        self.where.append(f"{var}.{attr} {CYPHER_OPS[c.cop]} {_literal(c.value)}")
        if c.value.vtype is VType.NUMBER and c.value.unit is not None:
            self.where.append(f'{var}.{attr}__unit = "{escape_quoted(c.value.unit)}"')

    def relation(self, c: ast.Rel, var: str, at_root: bool) -> str:
        tv = self.node()
        rv = self.rel_var()
        rel = self.label(c.relation)
        head, tail = (var, tv) if c.direction is ast.Dir.BACKWARD else (tv, var)
        self.patterns.append(("rel", head, tail, rv, rel))
        self.entity_set(c.target, tv)
        if c.qualifier is not None:
            q = c.qualifier
            if q.value.vtype is VType.NUMBER and q.value.unit is not None:
                raise _unsupported("qualifier condition on a number with a unit")
            self.where.append(f"{rv}.{self.label(q.key)} {CYPHER_OPS[q.cop]} {_literal(q.value)}")
        if c.count is not None:
            if not at_root:
                raise _unsupported("relation count below the root of the query")
            if self.count_filter is not None:
                raise _unsupported("more than one relation count")
            n = int(c.count.value.magnitude)
            self.count_filter = f"WITH {var}, count(DISTINCT {tv}) AS n1 WHERE n1 {CYPHER_OPS[c.count.cop]} {n}"
        return rv

    # -- assembly ----------------------------------------------------------------

    def term(self, var: str, introduced: set[str]) -> str:
        if var in introduced:
            return f"({var})"
        introduced.add(var)
        parts = [var]
        for lbl in self.labels.get(var, []):
            parts.append(f":{lbl}")
        text = "".join(parts)
        props = self.props.get(var)
        if props:
            inner = ", ".join(f"{k}: {v}" for k, v in props)
            text += f" {{{inner}}}"
        return f"({text})"

    def clauses(self) -> str:
        introduced: set[str] = set()
        matches: list[str] = []
        for item in self.patterns:
            if item[0] == "rel":
                _, head, tail, rv, rel = item
                arrow = f"[{rv}:{rel}]" if rel is not None else f"[{rv}]"
                matches.append(f"MATCH {self.term(head, introduced)}-{arrow}->{self.term(tail, introduced)}")
            else:
                _, var, name = item
                target = f'(:Concept {{name: "{escape_quoted(name)}"}})'
                matches.append(f"MATCH {self.term(var, introduced)}-[:instance_of]->{target}")
        for i in range(1, self.node_count + 1):
            var = f"e{i}"
            if var not in introduced:
                matches.append(f"MATCH {self.term(var, introduced)}")
        out = " ".join(matches)
        if self.where:
            out += " WHERE " + " AND ".join(self.where)
        if self.count_filter:
            out += " " + self.count_filter
        return out


def emit_cypher(query: ast.Query, mapping: SchemaMapping | None = None) -> str:
    """Compile a validated query to Cypher text.  Deterministic."""
    q = check_valid(query)
    e = _Emitter(mapping or DEFAULT_MAPPING)

    if isinstance(q, ast.EntityQuery):
        root = e.node()
        e.entity_set(q.entityset, root, at_root=True)
        return f"{e.clauses()} RETURN {root}.name"

    if isinstance(q, ast.CountQuery):
        root = e.node()
        e.entity_set(q.entityset, root, at_root=True)
        return f"{e.clauses()} RETURN count(DISTINCT {root})"

    if isinstance(q, ast.VerifyQuery):
        root = e.node()
        e.entity_set(q.entityset, root)
        e.constraint(q.constraint, root, at_root=True)
        return f"{e.clauses()} RETURN count({root}) > 0 AS answer"

    if isinstance(q, ast.SuperlativeQuery):
        root = e.node()
        e.entity_set(q.entityset, root, at_root=True)
        attr = e.label(q.attribute)
        order = "ASC" if q.sop is ast.Sop.SMALLEST else "DESC"
        return f"{e.clauses()} RETURN {root}.name ORDER BY {root}.{attr} {order} LIMIT 1"

    if isinstance(q, ast.AttributeQuery):
        root = e.node()
        e.entity_set(q.entityset, root)
        return f"{e.clauses()} RETURN DISTINCT {root}.{e.label(q.attribute)}"

    if isinstance(q, ast.RelationQuery):
        vs = e.node()
        vt = e.node()
        e.entity_set(q.source, vs)
        e.entity_set(q.target, vt)
        e.patterns.append(("rel", vs, vt, "r", None))
        return f"{e.clauses()} RETURN type(r)"

    if isinstance(q, ast.QualifierQuery):
        c = q.constraint
        if not isinstance(c, ast.Rel) or c.count is not None:
            raise _unsupported("qualifier query over this constraint form")
        ve = e.node()
        vt = e.node()
        e.entity_set(q.entityset, ve)
        rel = e.label(c.relation)
        rv = e.rel_var()
        head, tail = (ve, vt) if c.direction is ast.Dir.BACKWARD else (vt, ve)
        e.patterns.append(("rel", head, tail, rv, rel))
        e.entity_set(c.target, vt)
        if c.qualifier is not None:
            q2 = c.qualifier
            if q2.value.vtype is VType.NUMBER and q2.value.unit is not None:
                raise _unsupported("qualifier condition on a number with a unit")
            e.where.append(f"{rv}.{e.label(q2.key)} {CYPHER_OPS[q2.cop]} {_literal(q2.value)}")
        return f"{e.clauses()} RETURN DISTINCT {rv}.{e.label(q.qualifier)}"

    if isinstance(q, ast.ValueQuery):
        raise _unsupported("value queries")

    raise TypeError(f"not a query: {q!r}")  # pragma: no cover
