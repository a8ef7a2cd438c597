"""KoPL-style program text back into a query AST.

Inverts the KoPL emitter pattern for pattern: chains rebuild entity sets,
``Branch1 | Branch2 | Op`` compositions rebuild combinations and relation
constraints, and the terminal step selects the query form.  Labels in
arguments were snake_cased on the way out, so underscores are read back as
spaces; names and values are verbatim.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

from .. import ast
from ..diagnostics import (
    E_ARITY,
    E_BAD_BRANCH,
    E_UNKNOWN_FUNCTION,
    ParseError,
    error,
)
from ..kopl_text import Call, Program, parse_program
from ..values import SYMBOL_COPS, Cop, Value, VType

_FILTER_TYPES = {
    "FilterStr": VType.STRING,
    "FilterNum": VType.NUMBER,
    "FilterYear": VType.YEAR,
    "FilterDate": VType.DATE,
    "FilterTime": VType.TIME,
}
_VERIFY_TYPES = {
    "VerifyStr": VType.STRING,
    "VerifyNum": VType.NUMBER,
    "VerifyYear": VType.YEAR,
    "VerifyDate": VType.DATE,
    "VerifyTime": VType.TIME,
}
_KNOWN = (
    set(_FILTER_TYPES)
    | set(_VERIFY_TYPES)
    | {
        "FindAll", "Find", "FilterConcept", "Relate", "And", "Or", "Not",
        "QFilter", "Count", "QueryAttr", "QueryRelation", "QueryAttrQualifier",
        "QueryRelationQualifier", "SelectAmong", "What", "FilterRelCount",
    }
)


def _fail(message: str, code: str = E_BAD_BRANCH):
    raise ParseError([error(code, message)])


def _denorm(label: str) -> str:
    return label.replace("_", " ")


def _arity(call: Call, *counts: int) -> Call:
    if call.name not in _KNOWN:
        _fail(f"unknown function {call.name!r}", E_UNKNOWN_FUNCTION)
    if len(call.args) not in counts:
        want = " or ".join(str(c) for c in counts)
        raise ParseError([error(E_ARITY, f"{call.name} takes {want} arguments, got {len(call.args)}")])
    return call


def _cop(token: str) -> Cop:
    cop = SYMBOL_COPS.get(token)
    if cop is None:
        _fail(f"unknown comparison operator {token!r}")
    return cop


def _dir(token: str) -> ast.Dir:
    try:
        return ast.Dir(token)
    except ValueError:
        _fail(f"unknown direction {token!r}")


def _sop(token: str) -> ast.Sop:
    try:
        return ast.Sop(token)
    except ValueError:
        _fail(f"unknown superlative {token!r}")


def _typed_value(text: str) -> Value:
    parts = text.split(" ", 1)
    try:
        vtype = VType(parts[0])
    except ValueError:
        _fail(f"bad typed value {text!r}")
    if len(parts) < 2:
        _fail(f"typed value {text!r} has no payload")
    try:
        return Value.parse(vtype, parts[1])
    except ValueError as exc:
        _fail(str(exc))


def _attr_cmp(call: Call, qualifier: ast.QualifierCond | None) -> ast.AttrCmp:
    vtype = _FILTER_TYPES[call.name]
    if call.name == "FilterStr":
        _arity(call, 2, 3)
        cop = _cop(call.args[2]) if len(call.args) == 3 else Cop.IS
        return ast.AttrCmp(_denorm(call.args[0]), cop, Value.string(call.args[1]), qualifier)
    if call.name == "FilterNum":
        _arity(call, 4)
        attr, mag, unit, op = call.args
        try:
            value = Value.number(Decimal(mag), unit or None)
        except (InvalidOperation, ValueError):
            _fail(f"bad number {mag!r} in {call.name}")
        return ast.AttrCmp(_denorm(attr), _cop(op), value, qualifier)
    _arity(call, 3)
    attr, text, op = call.args
    try:
        value = Value.parse(vtype, text)
    except ValueError as exc:
        _fail(str(exc))
    return ast.AttrCmp(_denorm(attr), _cop(op), value, qualifier)


def _qcond(call: Call) -> ast.QualifierCond:
    _arity(call, 3)
    key, value_text, op = call.args
    return ast.QualifierCond(_denorm(key), _cop(op), _typed_value(value_text))


def _is_call(step, *names: str) -> bool:
    return isinstance(step, Call) and step.name in names


def _strip_tail(prog: Program, k: int) -> Program:
    return Program(branches=prog.branches, steps=prog.steps[:-k])


def _entity_set(prog: Program) -> ast.EntitySet:
    steps = list(prog.steps)
    cur: ast.EntitySet | None = None
    universal = False

    if prog.branches is not None:
        if not steps or not isinstance(steps[0], Call):
            _fail("binary composition must continue with a function call")
        cur = _binary_set(prog.branches[0], prog.branches[1], steps[0])
        steps = steps[1:]

    i = 0
    while i < len(steps):
        step = steps[i]
        if isinstance(step, Program):
            if cur is not None or universal:
                _fail("a parenthesized program can only start a chain")
            cur = _entity_set(step)
            i += 1
            continue
        name = step.name
        if cur is None and not universal:
            if name == "FindAll":
                _arity(step, 0)
                universal = True
            elif name == "Find":
                _arity(step, 1)
                cur = ast.Entity(step.args[0])
            else:
                _arity(step, len(step.args))  # reports unknown names
                _fail(f"{name} cannot start an entity set")
            i += 1
            continue
        if name == "FilterConcept":
            _arity(step, 1)
            if universal:
                cur = ast.Concept(step.args[0])
                universal = False
            else:
                cur = ast.Typed(step.args[0], cur)
            i += 1
            continue
        if universal:
            _fail("FindAll must be followed by FilterConcept")
        if name in _FILTER_TYPES:
            qualifier = None
            if i + 1 < len(steps) and _is_call(steps[i + 1], "QFilter"):
                qualifier = _qcond(steps[i + 1])
                i += 1
            cur = ast.Constrained(cur, _attr_cmp(step, qualifier))
            i += 1
            continue
        if name == "SelectAmong":
            _arity(step, 2)
            cur = ast.Constrained(cur, ast.AttrSup(_sop(step.args[1]), _denorm(step.args[0])))
            i += 1
            continue
        _arity(step, len(step.args))  # reports unknown names
        _fail(f"{name} is not an entity-set step")
    if universal or cur is None:
        _fail("program fragment does not produce an entity set")
    return cur


def _relate_tail(prog: Program) -> tuple[Call, ast.QualifierCond | None, Program] | None:
    """Match a program ending in Relate (optionally + QFilter); returns
    (relate, qualifier, target program).  Set programs never end in Relate,
    so this tail uniquely marks a relation-constraint branch."""
    steps = prog.steps
    if steps and _is_call(steps[-1], "Relate"):
        relate, qualifier, k = steps[-1], None, 1
    elif len(steps) >= 2 and _is_call(steps[-1], "QFilter") and _is_call(steps[-2], "Relate"):
        relate, qualifier, k = steps[-2], _qcond(steps[-1]), 2
    else:
        return None
    if prog.branches is not None and len(steps) <= k:
        return None  # stripping would orphan the binary op
    return relate, qualifier, Program(branches=prog.branches, steps=steps[:-k])


def _binary_set(left: Program, right: Program, op: Call) -> ast.EntitySet:
    if op.name in ("And", "Or", "Not"):
        _arity(op, 0)
        if op.name == "And":
            match = _relate_tail(left)
            if match is not None:
                relate, qualifier, target_prog = match
                _arity(relate, 2)
                rel = _denorm(relate.args[0])
                direction = _dir(relate.args[1])
                target = _entity_set(target_prog)
                return ast.Constrained(_entity_set(right), ast.Rel(rel, direction, target, None, qualifier))
        lop = {"And": ast.Lop.AND, "Or": ast.Lop.OR, "Not": ast.Lop.NOT}[op.name]
        return ast.Combine(lop, _entity_set(left), _entity_set(right))
    if op.name == "FilterRelCount":
        _arity(op, 4)
        rel, direction, op_sym, n_text = op.args
        try:
            bound = Value.parse(VType.NUMBER, n_text)
        except ValueError as exc:
            _fail(str(exc))
        count = ast.CountCmp(_cop(op_sym), bound)
        return ast.Constrained(_entity_set(right), ast.Rel(_denorm(rel), _dir(direction), _entity_set(left), count))
    _arity(op, len(op.args))  # reports unknown names
    _fail(f"{op.name} cannot combine two entity sets")


def parse_kopl(program: str) -> ast.Query:
    """Translate a KoPL-style program back into a query AST.

    Raises :class:`ParseError` (codes E_UNKNOWN_FUNCTION, E_ARITY,
    E_BAD_BRANCH) when the program is outside the emitter's image.
    """
    prog = parse_program(program)
    steps = prog.steps
    if not steps or not all(isinstance(s, (Call, Program)) for s in steps):
        _fail("empty program")
    last = steps[-1]
    if not isinstance(last, Call):
        _fail("program must end in a function step")

    if last.name == "QueryRelation":
        _arity(last, 0)
        if prog.branches is None or len(steps) != 1:
            _fail("QueryRelation needs exactly two branches")
        return ast.RelationQuery(_entity_set(prog.branches[0]), _entity_set(prog.branches[1]))

    if last.name == "QueryRelationQualifier":
        _arity(last, 3)
        if prog.branches is None or len(steps) != 1:
            _fail("QueryRelationQualifier needs exactly two branches")
        rel, direction, key = last.args
        constraint = ast.Rel(_denorm(rel), _dir(direction), _entity_set(prog.branches[1]))
        return ast.QualifierQuery(_denorm(key), _entity_set(prog.branches[0]), constraint)

    if last.name == "What":
        _arity(last, 0)
        if len(steps) >= 2 and _is_call(steps[-2], "SelectAmong"):
            among = steps[-2]
            _arity(among, 2)
            inner = _strip_tail(prog, 2)
            return ast.SuperlativeQuery(_sop(among.args[1]), _denorm(among.args[0]), _entity_set(inner))
        return ast.EntityQuery(_entity_set(_strip_tail(prog, 1)))

    if last.name in _VERIFY_TYPES:
        _arity(last, 2)
        prev = steps[-2] if len(steps) >= 2 else None
        if _is_call(prev, "QueryAttr"):
            _arity(prev, 1)
            try:
                value = Value.parse(_VERIFY_TYPES[last.name], last.args[0])
            except ValueError as exc:
                _fail(str(exc))
            constraint = ast.AttrCmp(_denorm(prev.args[0]), _cop(last.args[1]), value)
            return ast.VerifyQuery(_entity_set(_strip_tail(prog, 2)), constraint)
        if _is_call(prev, "Count") and last.name == "VerifyNum" and last.args == ("0", ">"):
            inner = _entity_set(_strip_tail(prog, 2))
            if not isinstance(inner, ast.Constrained):
                _fail("verification needs a constrained entity set")
            return ast.VerifyQuery(inner.inner, inner.constraint)
        _fail(f"{last.name} must follow QueryAttr or Count")

    if last.name == "Count":
        _arity(last, 0)
        return ast.CountQuery(_entity_set(_strip_tail(prog, 1)))

    if last.name == "QueryAttr":
        _arity(last, 1)
        return ast.AttributeQuery(_denorm(last.args[0]), _entity_set(_strip_tail(prog, 1)))

    if last.name == "QueryAttrQualifier":
        _arity(last, 2)
        attr, key = (_denorm(a) for a in last.args)
        prev = steps[-2] if len(steps) >= 2 else None
        if _is_call(prev, "SelectAmong"):
            _arity(prev, 2)
            if _denorm(prev.args[0]) != attr:
                _fail("QueryAttrQualifier attribute does not match the preceding SelectAmong")
            constraint = ast.AttrSup(_sop(prev.args[1]), attr)
            return ast.QualifierQuery(key, _entity_set(_strip_tail(prog, 2)), constraint)
        strip = 2
        qualifier = None
        if _is_call(prev, "QFilter"):
            qualifier = _qcond(prev)
            prev = steps[-3] if len(steps) >= 3 else None
            strip = 3
        if not isinstance(prev, Call) or prev.name not in _FILTER_TYPES:
            _fail("QueryAttrQualifier must follow an attribute filter")
        constraint = _attr_cmp(prev, qualifier)
        if constraint.attribute != attr:
            _fail("QueryAttrQualifier attribute does not match the preceding filter")
        return ast.QualifierQuery(key, _entity_set(_strip_tail(prog, strip)), constraint)

    _arity(last, len(last.args))  # reports unknown names
    _fail(f"{last.name} is not an answer-producing step")
