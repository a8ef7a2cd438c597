"""Parser and printer: spec examples, one parse per grammar production,
error codes, and the print/parse round trip."""

from __future__ import annotations

import datetime
from decimal import Decimal

import pytest

from gqc import ast, gen_ast, normalize
from gqc.ast import (
    Aggregate,
    AttrCmp,
    AttrOf,
    AttrSup,
    AttributeQuery,
    Combine,
    CombineValues,
    Concept,
    Constrained,
    CountCmp,
    CountQuery,
    Dir,
    Entity,
    EntityQuery,
    Lit,
    Lop,
    QualifierCond,
    QualifierQuery,
    Rel,
    RelSup,
    RelationQuery,
    Sop,
    SuperlativeQuery,
    Typed,
    ValueQuery,
    VerifyQuery,
    Vop,
)
from gqc.diagnostics import (
    E_EMPTY_PAYLOAD,
    E_TRAILING_INPUT,
    E_UNBALANCED_MARKER,
    E_UNEXPECTED_TOKEN,
    ParseError,
)
from gqc.syntax import parse_text, print_ir, tokenize
from gqc.values import Cop, Value

from conftest import ROW1_IR, ROW3_IR


def num(mag, unit=None):
    return Value.number(Decimal(mag), unit)


def test_row3_qualifier_query():
    q = parse_text(ROW3_IR)
    assert q == QualifierQuery(
        "start time",
        Entity("Uzbekistan"),
        Rel("capital", None, Entity("Tashkent")),
    )


def test_smallest_entity_query():
    assert parse_text("what is <E> x </E>") == EntityQuery(Entity("x"))


def test_row1_superlative_query():
    q = parse_text(ROW1_IR)
    assert q == SuperlativeQuery(
        Sop.SMALLEST,
        "duration",
        Constrained(Concept("newscast"), AttrCmp("duration", Cop.IS, num(110, "minute"))),
    )


def test_appositive_desugars_to_constraint():
    q = parse_text(
        "what is <ES> <E> A </E> (<ES> ones that <R> genre </R> backward to <E> B </E> </ES>) </ES>"
    )
    assert q == EntityQuery(
        Constrained(Entity("A"), Rel("genre", Dir.BACKWARD, Entity("B")))
    )


def test_payload_may_contain_keyword_words():
    q = parse_text("what is <E> to be or not to be </E>")
    assert q == EntityQuery(Entity("to be or not to be"))


PRODUCTION_CASES = [
    ("what is <E> x </E>", EntityQuery(Entity("x"))),
    ("what is <C> film </C>", EntityQuery(Concept("film"))),
    (
        "what is the attribute <A> duration </A> of <E> x </E>",
        AttributeQuery("duration", Entity("x")),
    ),
    (
        "what is the relation from <E> a </E> to <E> b </E>",
        RelationQuery(Entity("a"), Entity("b")),
    ),
    (
        "what is the qualifier <Q> k </Q> of <E> a </E> whose <A> d </A> is string <V> v </V>",
        QualifierQuery("k", Entity("a"), AttrCmp("d", Cop.IS, Value.string("v"))),
    ),
    ("how many <C> film </C>", CountQuery(Concept("film"))),
    (
        "whether <E> a </E> whose <A> d </A> at least number <V> 3 </V>",
        VerifyQuery(Entity("a"), AttrCmp("d", Cop.GE, num(3))),
    ),
    ("what is number <V> 5 </V>", ValueQuery(Lit(num(5)))),
    (
        "which one has the largest <A> d </A> among <C> film </C>",
        SuperlativeQuery(Sop.LARGEST, "d", Concept("film")),
    ),
    # entity-set productions
    (
        "what is <ES> <E> a </E> and <E> b </E> </ES>",
        EntityQuery(Combine(Lop.AND, Entity("a"), Entity("b"))),
    ),
    (
        "what is <ES> <E> a </E> or <E> b </E> </ES>",
        EntityQuery(Combine(Lop.OR, Entity("a"), Entity("b"))),
    ),
    (
        "what is <ES> <E> a </E> not <E> b </E> </ES>",
        EntityQuery(Combine(Lop.NOT, Entity("a"), Entity("b"))),
    ),
    (
        "what is <ES> <C> film </C> <E> a </E> </ES>",
        EntityQuery(Typed("film", Entity("a"))),
    ),
    # constraint productions
    (
        "what is <ES> <E> a </E> whose <A> d </A> smaller than year <V> 2000 </V> </ES>",
        EntityQuery(Constrained(Entity("a"), AttrCmp("d", Cop.LT, Value.of_year(2000)))),
    ),
    (
        "what is <ES> <E> a </E> that have smallest <A> d </A> </ES>",
        EntityQuery(Constrained(Entity("a"), AttrSup(Sop.SMALLEST, "d"))),
    ),
    (
        "what is <ES> <E> a </E> that <R> r </R> forward to <E> b </E> </ES>",
        EntityQuery(Constrained(Entity("a"), Rel("r", Dir.FORWARD, Entity("b")))),
    ),
    (
        "what is <ES> <E> a </E> that <R> r </R> to <E> b </E> </ES>",
        EntityQuery(Constrained(Entity("a"), Rel("r", None, Entity("b")))),
    ),
    (
        "what is <ES> <E> a </E> that <R> r </R> backward to at least number <V> 2 </V> <E> b </E> </ES>",
        EntityQuery(
            Constrained(Entity("a"), Rel("r", Dir.BACKWARD, Entity("b"), CountCmp(Cop.GE, num(2))))
        ),
    ),
    (
        "what is <ES> <E> a </E> that <R> r </R> backward to largest <E> b </E> </ES>",
        EntityQuery(Constrained(Entity("a"), RelSup("r", Dir.BACKWARD, Sop.LARGEST, Entity("b")))),
    ),
    (
        "what is <ES> <E> a </E> whose <A> d </A> is number <V> 1 </V> <Q> k </Q> at most year <V> 2000 </V> </ES>",
        EntityQuery(
            Constrained(
                Entity("a"),
                AttrCmp("d", Cop.IS, num(1), QualifierCond("k", Cop.LE, Value.of_year(2000))),
            )
        ),
    ),
    # value productions
    (
        "what is <A> d </A> of <E> a </E>",
        ValueQuery(AttrOf("d", "a")),
    ),
    (
        "what is sum of <A> d </A> of <E> a </E>",
        ValueQuery(Aggregate(Vop.SUM, AttrOf("d", "a"))),
    ),
    (
        "what is number <V> 1 </V> and number <V> 2 </V>",
        ValueQuery(CombineValues(Lop.AND, Lit(num(1)), Lit(num(2)))),
    ),
    (
        "what is date <V> 2001-05-03 </V>",
        ValueQuery(Lit(Value.of_date(datetime.date(2001, 5, 3)))),
    ),
    (
        "what is time <V> 12:30 </V>",
        ValueQuery(Lit(Value.of_time(datetime.time(12, 30)))),
    ),
]


@pytest.mark.parametrize("ir,expected", PRODUCTION_CASES, ids=range(len(PRODUCTION_CASES)))
def test_one_parse_per_production(ir, expected):
    assert parse_text(ir) == expected


def test_every_operator_member_reachable_from_parser():
    reached = {Lop: set(), Cop: set(), Sop: set(), Vop: set(), Dir: set()}
    texts = [ir for ir, _ in PRODUCTION_CASES] + [
        "what is <ES> <E> a </E> whose <A> d </A> %s number <V> 1 </V> </ES>" % cop.value
        for cop in Cop
    ] + [
        "what is %s of number <V> 1 </V>" % vop.value for vop in Vop
    ] + [
        "what is number <V> 1 </V> %s number <V> 2 </V>" % lop.value for lop in Lop
    ]

    def walk(node):
        from dataclasses import fields, is_dataclass

        if not is_dataclass(node):
            return
        for f in fields(node):
            v = getattr(node, f.name)
            for enum_type, seen in reached.items():
                if isinstance(v, enum_type):
                    seen.add(v)
            if is_dataclass(v):
                walk(v)

    for text in texts:
        walk(parse_text(text))
    for enum_type, seen in reached.items():
        missing = set(enum_type) - seen - {Dir.FORWARD}  # FORWARD asserted below
        assert not missing, f"{enum_type.__name__} members never parsed: {missing}"
    assert parse_text(PRODUCTION_CASES[15][0]).entityset.constraint.direction is Dir.FORWARD


# -- rejection ---------------------------------------------------------------


def err_code(text):
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    return exc.value.diagnostics[0].code


def test_unbalanced_marker():
    assert err_code("what is <E> x") == E_UNBALANCED_MARKER
    assert err_code("what is <E> x </C>") == E_UNBALANCED_MARKER
    assert err_code("what is <ES> <E> x </E>") == E_UNBALANCED_MARKER


def test_empty_payload():
    assert err_code("what is <E> </E>") == E_EMPTY_PAYLOAD


def test_trailing_input():
    assert err_code("what is <E> x </E> blah") == E_TRAILING_INPUT


def test_unexpected_token():
    assert err_code("what was <E> x </E>") == E_UNEXPECTED_TOKEN
    assert err_code("how many") == E_UNEXPECTED_TOKEN
    assert err_code("what is <ES> <E> a </E> and <E> b </E> or <E> c </E> </ES>") == E_UNBALANCED_MARKER
    assert err_code("what is number <V> nan </V>") == E_UNEXPECTED_TOKEN


def test_diagnostic_span_inside_input():
    text = "what is <E> x"
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    d = exc.value.diagnostics[0]
    assert 0 <= d.start <= d.end <= len(text)


def test_relsup_with_qualifier_cond_rejected():
    # the relational superlative carries no qualifier slot
    bad = "what is <ES> <E> a </E> that <R> r </R> backward to largest <E> b </E> <Q> k </Q> is year <V> 2000 </V> </ES>"
    assert err_code(bad) == E_UNBALANCED_MARKER


def test_constraint_value_must_be_literal():
    bad = "what is <ES> <E> a </E> whose <A> d </A> is sum of number <V> 1 </V> </ES>"
    assert err_code(bad) == E_UNEXPECTED_TOKEN


# -- printing ----------------------------------------------------------------


def test_print_trivial_forms():
    assert print_ir(EntityQuery(Entity("x"))) == "what is <E> x </E>"
    assert print_ir(CountQuery(Concept("film"))) == "how many <C> film </C>"


def test_print_makes_direction_explicit():
    q = parse_text(ROW3_IR)
    out = print_ir(q)
    assert "<R> capital </R> backward to" in out
    assert parse_text(out) == normalize(q)


def test_print_parse_round_trip_random_sample():
    for seed in range(300):
        q = gen_ast(seed, 4)
        assert parse_text(print_ir(q)) == normalize(q)


def test_marker_balance_and_nesting_depth():
    def es_depth(node):
        if isinstance(node, (Entity, Concept)):
            return 0
        if isinstance(node, Typed):
            return 1 + es_depth(node.inner)
        if isinstance(node, Combine):
            return 1 + max(es_depth(node.left), es_depth(node.right))
        if isinstance(node, Constrained):
            inner = es_depth(node.inner)
            target = 0
            if isinstance(node.constraint, (Rel, RelSup)):
                target = es_depth(node.constraint.target)
            return 1 + max(inner, target)
        raise TypeError(node)

    for seed in range(200):
        q = gen_ast(seed, 4)
        out = print_ir(q)
        tokens = out.split()
        for tag in ("ES", "E", "C", "A", "R", "Q", "V"):
            assert tokens.count(f"<{tag}>") == tokens.count(f"</{tag}>")
        # <ES> nesting never exceeds the entity-set tree depth
        depth = 0
        max_depth = 0
        for tok in tokens:
            if tok == "<ES>":
                depth += 1
                max_depth = max(max_depth, depth)
            elif tok == "</ES>":
                depth -= 1
        n = normalize(q)
        tree_depth = 0
        for f in ("entityset", "source", "target"):
            if hasattr(n, f):
                tree_depth = max(tree_depth, es_depth(getattr(n, f)))
        if hasattr(n, "constraint") and isinstance(n.constraint, (Rel, RelSup)):
            tree_depth = max(tree_depth, 1 + es_depth(n.constraint.target))
        assert max_depth <= tree_depth + 1


def test_identical_input_identical_ast():
    text = ROW1_IR
    assert tokenize(text) == tokenize(text)
    assert parse_text(text) == parse_text(text)
