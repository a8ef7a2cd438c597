"""Reference semantics over an in-memory property graph.

Two independent execution routes share this module:

* :func:`interpret` evaluates a query AST denotationally (entity-set trees
  become id sets, constraints filter them, query forms shape the answer);
* :func:`run_kopl` executes a KoPL-style program text step by step over
  entity-set states that carry their matched facts.

Both routes return :class:`Answer` values and are compared pairwise by the
differential test suite; any disagreement is a bug in one of them or in the
KoPL emitter between them.

Matching rules: entity and concept names compare verbatim (case-sensitive);
attribute, relation and qualifier keys compare through the snake_case label
rule, because compiled programs carry normalized keys.  Superlatives return
every tied entity.  Numeric comparisons are exact decimal arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from . import ast
from .diagnostics import (
    E_ARITY,
    E_EVAL_UNSUPPORTED,
    E_RUNTIME_TYPE,
    E_UNKNOWN_FUNCTION,
    ParseError,
    UnsupportedError,
    error,
)
from .graphstore import AttributeValue, PropertyGraph, Qualifiers, RelationEdge
from .kopl_text import Call, Program, parse_program
from .mapping import snake_case
from .values import SYMBOL_COPS, Cop, Value, VType, compare, order_key

# ---------------------------------------------------------------------------
# Answers


def _values_key(v: Value):
    return (v.vtype.value, v.unit or "", v.raw)


@dataclass(frozen=True)
class Answer:
    """Result of a query: exactly one payload field is set, matching the
    query form (entities, count, boolean, values or relation names)."""

    kind: str
    entities: frozenset[str] | None = None
    count: int | None = None
    boolean: bool | None = None
    values: tuple[Value, ...] | None = None
    relations: frozenset[str] | None = None

    @classmethod
    def of_entities(cls, names) -> "Answer":
        return cls("entities", entities=frozenset(names))

    @classmethod
    def of_count(cls, n: int) -> "Answer":
        return cls("count", count=n)

    @classmethod
    def of_boolean(cls, b: bool) -> "Answer":
        return cls("boolean", boolean=bool(b))

    @classmethod
    def of_values(cls, values) -> "Answer":
        return cls("values", values=tuple(sorted(values, key=_values_key)))

    @classmethod
    def of_relations(cls, names) -> "Answer":
        return cls("relations", relations=frozenset(names))

    def render(self) -> str:
        if self.kind == "entities":
            return "\n".join(sorted(self.entities)) if self.entities else "(no entities)"
        if self.kind == "count":
            return str(self.count)
        if self.kind == "boolean":
            return "yes" if self.boolean else "no"
        if self.kind == "values":
            return "\n".join(str(v) for v in self.values) if self.values else "(no values)"
        return "\n".join(sorted(self.relations)) if self.relations else "(no relations)"


def _distinct(values) -> list[Value]:
    seen = set()
    out = []
    for v in values:
        k = _values_key(v)
        if k not in seen:
            seen.add(k)
            out.append(v)
    return out


def _unsupported_eval(what: str) -> UnsupportedError:
    return UnsupportedError([error(E_EVAL_UNSUPPORTED, f"the evaluator does not define semantics for {what}")])


# ---------------------------------------------------------------------------
# Shared fact matching


def _key_eq(graph_key: str, query_key_norm: str) -> bool:
    return snake_case(graph_key) == query_key_norm


def _qualifiers_match(qualifiers, key_norm: str, cop: Cop, value: Value) -> bool:
    return any(_key_eq(k, key_norm) and compare(v, cop, value) for k, v in qualifiers)


def _qualifier_values(qualifiers, key_norm: str):
    return [v for k, v in qualifiers if _key_eq(k, key_norm)]


def _attr_instances(rec, attr_norm: str):
    return [a for a in rec.attributes if _key_eq(a.key, attr_norm)]


def _apply_qcond(facts, q: ast.QualifierCond):
    key = snake_case(q.key)
    return [f for f in facts if _qualifiers_match(f.qualifiers, key, q.cop, q.value)]


def _extreme_entities(per_entity_keys: dict[str, list], largest: bool) -> set[str]:
    """per_entity_keys maps entity id -> non-empty list of order keys; returns
    all entities achieving the extreme value."""
    if not per_entity_keys:
        return set()
    pick = max if largest else min
    best_per_entity = {e: pick(keys) for e, keys in per_entity_keys.items()}
    best = pick(best_per_entity.values())
    return {e for e, k in best_per_entity.items() if k == best}


# ---------------------------------------------------------------------------
# Denotational interpreter


class _Interpreter:
    def __init__(self, graph: PropertyGraph):
        self.g = graph

    # -- entity sets --------------------------------------------------------

    def entity_set(self, node: ast.EntitySet) -> frozenset[str]:
        if isinstance(node, ast.Entity):
            return self.g.by_name(node.name)
        if isinstance(node, ast.Concept):
            return self.g.by_concept(node.name)
        if isinstance(node, ast.Typed):
            return self.entity_set(node.inner) & self.g.by_concept(node.concept)
        if isinstance(node, ast.Combine):
            left, right = self.entity_set(node.left), self.entity_set(node.right)
            if node.op is ast.Lop.AND:
                return left & right
            if node.op is ast.Lop.OR:
                return left | right
            return left - right
        if isinstance(node, ast.Constrained):
            return self.constrain(self.entity_set(node.inner), node.constraint)
        raise TypeError(f"not an entity set: {node!r}")

    # -- constraints ---------------------------------------------------------

    def constrain(self, ids: frozenset[str], c: ast.Constraint) -> frozenset[str]:
        if isinstance(c, ast.AttrCmp):
            return frozenset(e for e in ids if self.matched_attr_facts(e, c))
        if isinstance(c, ast.AttrSup):
            return frozenset(self.superlative_ids(ids, c.attribute, c.sop, c.qualifier))
        if isinstance(c, ast.Rel):
            target = self.entity_set(c.target)
            return frozenset(e for e in ids if self.rel_satisfied(e, c, target))
        if isinstance(c, ast.RelSup):
            raise _unsupported_eval("relational superlative constraints")
        raise TypeError(f"not a constraint: {c!r}")

    def matched_attr_facts(self, eid: str, c: ast.AttrCmp) -> list[AttributeValue]:
        attr = snake_case(c.attribute)
        facts = [a for a in _attr_instances(self.g.entities[eid], attr) if compare(a.value, c.cop, c.value)]
        if c.qualifier is not None:
            facts = _apply_qcond(facts, c.qualifier)
        return facts

    def matched_edges(self, eid: str, c: ast.Rel, target: frozenset[str]) -> list[RelationEdge | tuple]:
        """Edges witnessing the constraint for one entity, after the
        qualifier condition but before the count condition."""
        rel = snake_case(c.relation)
        if c.direction is ast.Dir.FORWARD:
            # target is the head: incoming edges of eid from target entities
            edges = [(h, e) for h, e in self.g.in_edges(eid) if _key_eq(e.predicate, rel) and h in target]
            if c.qualifier is not None:
                key = snake_case(c.qualifier.key)
                edges = [
                    (h, e)
                    for h, e in edges
                    if _qualifiers_match(e.qualifiers, key, c.qualifier.cop, c.qualifier.value)
                ]
            return edges
        edges = [e for e in self.g.entities[eid].relations if _key_eq(e.predicate, rel) and e.target in target]
        if c.qualifier is not None:
            key = snake_case(c.qualifier.key)
            edges = [e for e in edges if _qualifiers_match(e.qualifiers, key, c.qualifier.cop, c.qualifier.value)]
        return edges

    def rel_satisfied(self, eid: str, c: ast.Rel, target: frozenset[str]) -> bool:
        edges = self.matched_edges(eid, c, target)
        if c.count is None:
            return bool(edges)
        if c.direction is ast.Dir.FORWARD:
            others = {h for h, _ in edges}
        else:
            others = {e.target for e in edges}
        n = Value.number(Decimal(len(others)))
        return compare(n, c.count.cop, c.count.value)

    def superlative_ids(self, ids, attribute: str, sop: ast.Sop, qualifier: ast.QualifierCond | None) -> set[str]:
        attr = snake_case(attribute)
        per_entity: dict[str, list] = {}
        for e in ids:
            facts = _attr_instances(self.g.entities[e], attr)
            if qualifier is not None:
                facts = _apply_qcond(facts, qualifier)
            keys = [k for k in (order_key(f.value) for f in facts) if k is not None]
            if keys:
                per_entity[e] = keys
        return _extreme_entities(per_entity, largest=sop is ast.Sop.LARGEST)

    def superlative_facts(self, ids, attribute: str, sop: ast.Sop) -> list[AttributeValue]:
        """The extreme-valued attribute instances themselves (for qualifier
        queries over an attribute superlative)."""
        attr = snake_case(attribute)
        keyed: list[tuple] = []
        for e in ids:
            for f in _attr_instances(self.g.entities[e], attr):
                k = order_key(f.value)
                if k is not None:
                    keyed.append((k, f))
        if not keyed:
            return []
        pick = max if sop is ast.Sop.LARGEST else min
        best = pick(k for k, _ in keyed)
        return [f for k, f in keyed if k == best]

    # -- value expressions ------------------------------------------------------

    def value_expr(self, expr: ast.ValueExpr) -> list[Value]:
        if isinstance(expr, ast.Lit):
            return [expr.value]
        if isinstance(expr, ast.AttrOf):
            attr = snake_case(expr.attribute)
            out = []
            for e in sorted(self.g.by_name(expr.entity)):
                out.extend(a.value for a in _attr_instances(self.g.entities[e], attr))
            return out
        if isinstance(expr, ast.Aggregate):
            return _aggregate(expr.op, self.value_expr(expr.inner))
        if isinstance(expr, ast.CombineValues):
            left = {_values_key(v): v for v in self.value_expr(expr.left)}
            right = {_values_key(v): v for v in self.value_expr(expr.right)}
            if expr.op is ast.Lop.AND:
                keys = [k for k in left if k in right]
            elif expr.op is ast.Lop.OR:
                keys = list(left) + [k for k in right if k not in left]
            else:
                keys = [k for k in left if k not in right]
            table = {**right, **left}
            return [table[k] for k in keys]
        raise TypeError(f"not a value expression: {expr!r}")


def _aggregate(op: ast.Vop, values: list[Value]) -> list[Value]:
    numbers = [v for v in values if v.vtype is VType.NUMBER]
    if op in (ast.Vop.SUM, ast.Vop.AVERAGE):
        if not numbers or len({v.unit for v in numbers}) != 1:
            return []
        total = sum(v.magnitude for v in numbers)
        unit = numbers[0].unit
        if op is ast.Vop.AVERAGE:
            return [Value.number(total / len(numbers), unit)]
        return [Value.number(total, unit)]
    keyed = [(order_key(v), v) for v in values if order_key(v) is not None]
    if not keyed:
        return []
    pick = max if op is ast.Vop.MAXIMUM else min
    best = pick(k for k, _ in keyed)
    return [next(v for k, v in keyed if k == best)]


def interpret(query: ast.Query, graph: PropertyGraph) -> Answer:
    """Evaluate a validated query directly on the graph."""
    q = ast.normalize(query)
    it = _Interpreter(graph)

    def names(ids) -> Answer:
        return Answer.of_entities(graph.entities[e].name for e in ids)

    if isinstance(q, ast.EntityQuery):
        return names(it.entity_set(q.entityset))
    if isinstance(q, ast.CountQuery):
        return Answer.of_count(len(it.entity_set(q.entityset)))
    if isinstance(q, ast.SuperlativeQuery):
        ids = it.entity_set(q.entityset)
        return names(it.superlative_ids(ids, q.attribute, q.sop, None))
    if isinstance(q, ast.AttributeQuery):
        attr = snake_case(q.attribute)
        out = []
        for e in sorted(it.entity_set(q.entityset)):
            out.extend(a.value for a in _attr_instances(graph.entities[e], attr))
        return Answer.of_values(out)
    if isinstance(q, ast.RelationQuery):
        source = it.entity_set(q.source)
        target = it.entity_set(q.target)
        preds = set()
        for e in source:
            for edge in graph.entities[e].relations:
                if edge.target in target:
                    preds.add(edge.predicate)
        return Answer.of_relations(preds)
    if isinstance(q, ast.VerifyQuery):
        ids = it.entity_set(q.entityset)
        return Answer.of_boolean(bool(it.constrain(ids, q.constraint)))
    if isinstance(q, ast.QualifierQuery):
        return _qualifier_answer(it, q)
    if isinstance(q, ast.ValueQuery):
        return Answer.of_values(it.value_expr(q.value))
    raise TypeError(f"not a query: {q!r}")


def _qualifier_answer(it: _Interpreter, q: ast.QualifierQuery) -> Answer:
    key = snake_case(q.qualifier)
    ids = it.entity_set(q.entityset)
    c = q.constraint
    out: list[Value] = []
    if isinstance(c, ast.AttrCmp):
        for e in sorted(ids):
            for fact in it.matched_attr_facts(e, c):
                out.extend(_qualifier_values(fact.qualifiers, key))
    elif isinstance(c, ast.AttrSup):
        if c.qualifier is not None:
            raise _unsupported_eval("qualifier conditions on attribute superlatives in qualifier queries")
        for fact in it.superlative_facts(ids, c.attribute, c.sop):
            out.extend(_qualifier_values(fact.qualifiers, key))
    elif isinstance(c, ast.Rel):
        target = it.entity_set(c.target)
        keep = ids
        if c.count is not None:
            keep = frozenset(e for e in ids if it.rel_satisfied(e, c, target))
        for e in sorted(keep):
            for edge in it.matched_edges(e, c, target):
                quals = edge[1].qualifiers if isinstance(edge, tuple) else edge.qualifiers
                out.extend(_qualifier_values(quals, key))
    else:
        raise _unsupported_eval("relational superlative constraints")
    return Answer.of_values(_distinct(out))


# ---------------------------------------------------------------------------
# KoPL program runner


@dataclass(frozen=True)
class _Fact:
    """A fact carried alongside an entity-set state: either an attribute
    instance or a relation edge, anchored at its current pipeline entity."""

    entity: str
    qualifiers: Qualifiers = ()
    attr_key: str | None = None

    @property
    def is_attr(self) -> bool:
        return self.attr_key is not None


@dataclass
class _EntityState:
    ids: frozenset[str]
    facts: tuple[_Fact, ...] | None = None


@dataclass
class _ValueState:
    values: list[Value]
    distinct: bool = False


@dataclass
class _CountState:
    n: int


@dataclass
class _BoolState:
    value: bool


@dataclass
class _RelState:
    predicates: frozenset[str]


def _rt_error(message: str, code: str = E_RUNTIME_TYPE) -> ParseError:
    return ParseError([error(code, message)])


def _need_args(call: Call, *counts: int) -> None:
    if len(call.args) not in counts:
        want = " or ".join(str(c) for c in counts)
        raise ParseError([error(E_ARITY, f"{call.name} takes {want} arguments, got {len(call.args)}")])


def _parse_typed_text(text: str) -> Value:
    parts = text.split(" ", 1)
    try:
        vtype = VType(parts[0])
    except ValueError:
        raise _rt_error(f"bad typed value {text!r}") from None
    if len(parts) < 2:
        raise _rt_error(f"typed value {text!r} has no payload")
    try:
        return Value.parse(vtype, parts[1])
    except ValueError as exc:
        raise _rt_error(str(exc)) from None


def _parse_op(token: str) -> Cop:
    cop = SYMBOL_COPS.get(token)
    if cop is None:
        raise _rt_error(f"unknown comparison operator {token!r}")
    return cop


def _parse_dir(token: str) -> ast.Dir:
    try:
        return ast.Dir(token)
    except ValueError:
        raise _rt_error(f"unknown direction {token!r}") from None


class _Runner:
    def __init__(self, graph: PropertyGraph):
        self.g = graph

    def run(self, prog: Program):
        state = None
        steps = list(prog.steps)
        if prog.branches is not None:
            left = self.run(prog.branches[0])
            right = self.run(prog.branches[1])
            if not steps or not isinstance(steps[0], Call):
                raise _rt_error("binary composition must continue with a function call")
            state = self.binary(steps[0], left, right)
            steps = steps[1:]
        for step in steps:
            if isinstance(step, Program):
                if state is not None:
                    raise _rt_error("a parenthesized program can only start a chain")
                state = self.run(step)
            else:
                state = self.step(step, state)
        if state is None:
            raise _rt_error("empty program")
        return state

    # -- binary ops -----------------------------------------------------------

    def binary(self, call: Call, left, right):
        name = call.name
        if name in ("And", "Or", "Not"):
            _need_args(call, 0)
            if not isinstance(left, _EntityState) or not isinstance(right, _EntityState):
                raise _rt_error(f"{name} needs two entity sets")
            if name == "And":
                ids = left.ids & right.ids
            elif name == "Or":
                ids = left.ids | right.ids
            else:
                ids = left.ids - right.ids
            return _EntityState(ids)
        if name == "FilterRelCount":
            _need_args(call, 4)
            if not isinstance(left, _EntityState) or not isinstance(right, _EntityState):
                raise _rt_error("FilterRelCount needs two entity sets")
            rel, direction, op, n_text = call.args
            cop = _parse_op(op)
            d = _parse_dir(direction)
            try:
                bound = Value.parse(VType.NUMBER, n_text)
            except ValueError as exc:
                raise _rt_error(str(exc)) from None
            keep = set()
            for e in right.ids:
                others = self._related(e, rel, d, left.ids)
                if compare(Value.number(Decimal(len(others))), cop, bound):
                    keep.add(e)
            return _EntityState(frozenset(keep))
        if name == "QueryRelation":
            _need_args(call, 0)
            if not isinstance(left, _EntityState) or not isinstance(right, _EntityState):
                raise _rt_error("QueryRelation needs two entity sets")
            preds = set()
            for e in left.ids:
                for edge in self.g.entities[e].relations:
                    if edge.target in right.ids:
                        preds.add(edge.predicate)
            return _RelState(frozenset(preds))
        if name == "QueryRelationQualifier":
            _need_args(call, 3)
            if not isinstance(left, _EntityState) or not isinstance(right, _EntityState):
                raise _rt_error("QueryRelationQualifier needs two entity sets")
            rel, direction, key = call.args
            d = _parse_dir(direction)
            key_n = snake_case(key)
            out: list[Value] = []
            heads, tails = (left.ids, right.ids) if d is ast.Dir.BACKWARD else (right.ids, left.ids)
            for h in sorted(heads):
                for edge in self.g.entities[h].relations:
                    if _key_eq(edge.predicate, snake_case(rel)) and edge.target in tails:
                        out.extend(_qualifier_values(edge.qualifiers, key_n))
            return _ValueState(_distinct(out), distinct=True)
        raise ParseError([error(E_UNKNOWN_FUNCTION, f"unknown binary function {call.name!r}")])

    def _related(self, eid: str, rel: str, direction: ast.Dir, pool: frozenset[str]) -> set[str]:
        rel_n = snake_case(rel)
        if direction is ast.Dir.BACKWARD:
            return {e.target for e in self.g.entities[eid].relations if _key_eq(e.predicate, rel_n) and e.target in pool}
        return {h for h, e in self.g.in_edges(eid) if _key_eq(e.predicate, rel_n) and h in pool}

    # -- chain steps ------------------------------------------------------------

    def step(self, call: Call, state):
        name = call.name
        if state is None:
            if name == "FindAll":
                _need_args(call, 0)
                return _EntityState(frozenset(self.g.entities))
            if name == "Find":
                _need_args(call, 1)
                return _EntityState(self.g.by_name(call.args[0]))
            raise ParseError([error(E_UNKNOWN_FUNCTION, f"{name!r} cannot start a program")])

        handler = getattr(self, f"_step_{name}", None)
        if handler is None:
            raise ParseError([error(E_UNKNOWN_FUNCTION, f"unknown function {call.name!r}")])
        return handler(call, state)

    def _entity(self, call: Call, state) -> _EntityState:
        if not isinstance(state, _EntityState):
            raise _rt_error(f"{call.name} needs an entity-set state")
        return state

    def _step_FilterConcept(self, call: Call, state):
        _need_args(call, 1)
        s = self._entity(call, state)
        return _EntityState(s.ids & self.g.by_concept(call.args[0]))

    def _filter_attr(self, state, attr: str, cop: Cop, value: Value) -> _EntityState:
        attr_n = snake_case(attr)
        keep = set()
        facts = []
        for e in state.ids:
            for a in _attr_instances(self.g.entities[e], attr_n):
                if compare(a.value, cop, value):
                    keep.add(e)
                    facts.append(_Fact(e, a.qualifiers, attr_key=attr_n))
        return _EntityState(frozenset(keep), tuple(facts))

    def _step_FilterStr(self, call: Call, state):
        _need_args(call, 2, 3)
        s = self._entity(call, state)
        cop = _parse_op(call.args[2]) if len(call.args) == 3 else Cop.IS
        return self._filter_attr(s, call.args[0], cop, Value.string(call.args[1]))

    def _step_FilterNum(self, call: Call, state):
        _need_args(call, 4)
        s = self._entity(call, state)
        attr, mag, unit, op = call.args
        try:
            value = Value.number(Decimal(mag), unit or None)
        except Exception:
            raise _rt_error(f"bad number {mag!r}") from None
        return self._filter_attr(s, attr, _parse_op(op), value)

    def _typed_filter(self, call: Call, state, vtype: VType):
        _need_args(call, 3)
        s = self._entity(call, state)
        attr, text, op = call.args
        try:
            value = Value.parse(vtype, text)
        except ValueError as exc:
            raise _rt_error(str(exc)) from None
        return self._filter_attr(s, attr, _parse_op(op), value)

    def _step_FilterYear(self, call: Call, state):
        return self._typed_filter(call, state, VType.YEAR)

    def _step_FilterDate(self, call: Call, state):
        return self._typed_filter(call, state, VType.DATE)

    def _step_FilterTime(self, call: Call, state):
        return self._typed_filter(call, state, VType.TIME)

    def _step_QFilter(self, call: Call, state):
        _need_args(call, 3)
        s = self._entity(call, state)
        if s.facts is None:
            raise _rt_error("QFilter needs the facts of a preceding filter or Relate step")
        key, value_text, op = call.args
        cop = _parse_op(op)
        value = _parse_typed_text(value_text)
        key_n = snake_case(key)
        facts = tuple(f for f in s.facts if _qualifiers_match(f.qualifiers, key_n, cop, value))
        return _EntityState(frozenset(f.entity for f in facts), facts)

    def _step_Relate(self, call: Call, state):
        _need_args(call, 2)
        s = self._entity(call, state)
        rel, direction = call.args
        d = _parse_dir(direction)
        rel_n = snake_case(rel)
        facts = []
        for e in sorted(s.ids):
            if d is ast.Dir.BACKWARD:
                # result entities are the heads of edges pointing into the set
                for h, edge in self.g.in_edges(e):
                    if _key_eq(edge.predicate, rel_n):
                        facts.append(_Fact(h, edge.qualifiers))
            else:
                for edge in self.g.entities[e].relations:
                    if _key_eq(edge.predicate, rel_n):
                        facts.append(_Fact(edge.target, edge.qualifiers))
        return _EntityState(frozenset(f.entity for f in facts), tuple(facts))

    def _step_SelectAmong(self, call: Call, state):
        _need_args(call, 2)
        s = self._entity(call, state)
        attr, sop_text = call.args
        try:
            sop = ast.Sop(sop_text)
        except ValueError:
            raise _rt_error(f"unknown superlative {sop_text!r}") from None
        attr_n = snake_case(attr)
        keyed = []
        for e in s.ids:
            for a in _attr_instances(self.g.entities[e], attr_n):
                k = order_key(a.value)
                if k is not None:
                    keyed.append((k, e, a))
        if not keyed:
            return _EntityState(frozenset(), ())
        pick = max if sop is ast.Sop.LARGEST else min
        best = pick(k for k, _, _ in keyed)
        winners = [(e, a) for k, e, a in keyed if k == best]
        facts = tuple(_Fact(e, a.qualifiers, attr_key=attr_n) for e, a in winners)
        return _EntityState(frozenset(e for e, _ in winners), facts)

    def _step_Count(self, call: Call, state):
        _need_args(call, 0)
        s = self._entity(call, state)
        return _CountState(len(s.ids))

    def _step_QueryAttr(self, call: Call, state):
        _need_args(call, 1)
        s = self._entity(call, state)
        attr_n = snake_case(call.args[0])
        out = []
        for e in sorted(s.ids):
            out.extend(a.value for a in _attr_instances(self.g.entities[e], attr_n))
        return _ValueState(out)

    def _step_QueryAttrQualifier(self, call: Call, state):
        _need_args(call, 2)
        s = self._entity(call, state)
        if s.facts is None:
            raise _rt_error("QueryAttrQualifier needs the facts of a preceding step")
        attr_n = snake_case(call.args[0])
        key_n = snake_case(call.args[1])
        out = []
        for f in s.facts:
            if f.is_attr and f.attr_key == attr_n:
                out.extend(_qualifier_values(f.qualifiers, key_n))
        return _ValueState(_distinct(out), distinct=True)

    def _verify(self, call: Call, state, vtype: VType):
        _need_args(call, 2)
        value_text, op = call.args
        cop = _parse_op(op)
        try:
            value = Value.parse(vtype, value_text)
        except ValueError as exc:
            raise _rt_error(str(exc)) from None
        if isinstance(state, _CountState):
            return _BoolState(compare(Value.number(Decimal(state.n)), cop, value))
        if isinstance(state, _ValueState):
            return _BoolState(any(compare(v, cop, value) for v in state.values))
        raise _rt_error(f"{call.name} needs a value or count state")

    def _step_VerifyStr(self, call: Call, state):
        return self._verify(call, state, VType.STRING)

    def _step_VerifyNum(self, call: Call, state):
        return self._verify(call, state, VType.NUMBER)

    def _step_VerifyYear(self, call: Call, state):
        return self._verify(call, state, VType.YEAR)

    def _step_VerifyDate(self, call: Call, state):
        return self._verify(call, state, VType.DATE)

    def _step_VerifyTime(self, call: Call, state):
        return self._verify(call, state, VType.TIME)

    def _step_What(self, call: Call, state):
        _need_args(call, 0)
        s = self._entity(call, state)
        return Answer.of_entities(self.g.entities[e].name for e in s.ids)


def run_kopl(program: str, graph: PropertyGraph) -> Answer:
    """Parse and execute a KoPL-style program; returns its answer.

    Raises :class:`ParseError` for malformed programs, unknown functions,
    arity errors and steps applied to the wrong state kind.
    """
    prog = parse_program(program)
    final = _Runner(graph).run(prog)
    if isinstance(final, Answer):
        return final
    if isinstance(final, _CountState):
        return Answer.of_count(final.n)
    if isinstance(final, _BoolState):
        return Answer.of_boolean(final.value)
    if isinstance(final, _ValueState):
        return Answer.of_values(final.values)
    if isinstance(final, _RelState):
        return Answer.of_relations(final.predicates)
    raise _rt_error("program does not end in an answer-producing step")
