"""Validation, normalization and the JSON/tree debug surfaces."""

from __future__ import annotations

from decimal import Decimal

import pytest

from gqc import ast, gen_ast, normalize, validate
from gqc.ast import (
    Aggregate,
    AttrCmp,
    AttrOf,
    AttrSup,
    AttributeQuery,
    Concept,
    Constrained,
    CountCmp,
    Dir,
    Entity,
    EntityQuery,
    Lit,
    QualifierCond,
    Rel,
    Sop,
    SuperlativeQuery,
    ValueQuery,
    VerifyQuery,
    Vop,
    dump_tree,
    from_json,
    to_json,
)
from gqc.diagnostics import E_BAD_AGGREGATE, E_BAD_COUNT, E_EMPTY_NAME, E_TYPE_MISMATCH
from gqc.syntax import parse_text
from gqc.values import Cop, Value

from conftest import GOLDEN_PAIRS


def num(mag, unit=None):
    return Value.number(Decimal(str(mag)), unit)


def codes(query):
    return sorted({d.code for d in validate(query)})


class TestValidate:
    @pytest.mark.parametrize("ir", [ir for ir, _ in GOLDEN_PAIRS])
    def test_reference_queries_validate_cleanly(self, ir):
        assert validate(parse_text(ir)) == []

    def test_order_comparison_on_string(self):
        q = EntityQuery(Constrained(Entity("x"), AttrCmp("duration", Cop.GT, Value.string("x"))))
        assert codes(q) == [E_TYPE_MISMATCH]

    def test_order_comparison_on_string_in_qualifier_cond(self):
        qc = QualifierCond("k", Cop.LE, Value.string("v"))
        q = EntityQuery(Constrained(Entity("x"), AttrCmp("d", Cop.IS, num(1), qc)))
        assert codes(q) == [E_TYPE_MISMATCH]

    def test_sum_over_string(self):
        q = ValueQuery(Aggregate(Vop.SUM, Lit(Value.string("a"))))
        assert codes(q) == [E_BAD_AGGREGATE]

    def test_average_over_year(self):
        q = ValueQuery(Aggregate(Vop.AVERAGE, Lit(Value.of_year(2000))))
        assert codes(q) == [E_BAD_AGGREGATE]

    def test_maximum_over_year_is_fine(self):
        q = ValueQuery(Aggregate(Vop.MAXIMUM, Lit(Value.of_year(2000))))
        assert validate(q) == []

    def test_maximum_over_string_rejected(self):
        q = ValueQuery(Aggregate(Vop.MAXIMUM, Lit(Value.string("a"))))
        assert codes(q) == [E_BAD_AGGREGATE]

    @pytest.mark.parametrize(
        "value",
        [num("2.5"), num(-1), num(3, "minute"), Value.string("3")],
    )
    def test_bad_relation_counts(self, value):
        q = EntityQuery(Constrained(Entity("x"), Rel("r", None, Entity("y"), CountCmp(Cop.GE, value))))
        assert E_BAD_COUNT in codes(q) or E_TYPE_MISMATCH in codes(q)

    def test_good_relation_count(self):
        q = EntityQuery(Constrained(Entity("x"), Rel("r", None, Entity("y"), CountCmp(Cop.GE, num(2)))))
        assert validate(q) == []

    def test_empty_names(self):
        assert codes(EntityQuery(Entity(""))) == [E_EMPTY_NAME]
        assert codes(EntityQuery(Concept(""))) == [E_EMPTY_NAME]
        assert codes(AttributeQuery("", Entity("x"))) == [E_EMPTY_NAME]

    def test_generator_output_always_validates(self):
        for seed in range(500):
            assert validate(gen_ast(seed, 4)) == []


class TestNormalize:
    def test_direction_default_backward(self):
        q = EntityQuery(Constrained(Entity("x"), Rel("r", None, Entity("y"))))
        n = normalize(q)
        assert n.entityset.constraint.direction is Dir.BACKWARD

    def test_superlative_fold(self):
        q = EntityQuery(Constrained(Concept("film"), AttrSup(Sop.LARGEST, "duration")))
        assert normalize(q) == SuperlativeQuery(Sop.LARGEST, "duration", Concept("film"))

    def test_superlative_fold_skipped_with_qualifier(self):
        qc = QualifierCond("k", Cop.IS, num(1))
        q = EntityQuery(Constrained(Concept("film"), AttrSup(Sop.LARGEST, "duration", qc)))
        assert normalize(q) == q

    def test_attribute_of_entity_fold(self):
        q = ValueQuery(AttrOf("duration", "x"))
        assert normalize(q) == AttributeQuery("duration", Entity("x"))

    def test_redundant_wrapper_collapses_at_parse(self):
        assert parse_text("what is <ES> <E> x </E> </ES>") == EntityQuery(Entity("x"))

    def test_already_canonical_fixed_point(self):
        q = parse_text("how many <C> film </C>")
        assert normalize(q) == q

    def test_idempotent_on_random_queries(self):
        for seed in range(400):
            q = gen_ast(seed, 4)
            n = normalize(q)
            assert normalize(n) == n


class TestJsonForm:
    def test_round_trip_random(self):
        for seed in range(300):
            q = gen_ast(seed, 4)
            assert from_json(to_json(q)) == q

    def test_rejects_malformed(self):
        with pytest.raises(ValueError):
            from_json({"kind": "NoSuchNode"})
        with pytest.raises(ValueError):
            from_json({"no": "kind"})
        with pytest.raises(ValueError):
            from_json({"kind": "EntityQuery"})  # missing child

    def test_dump_tree_mentions_values_and_kinds(self):
        q = parse_text("whether <E> a </E> whose <A> d </A> is number <V> 3 minute </V>")
        text = dump_tree(q)
        assert "VerifyQuery" in text
        assert "AttrCmp" in text
        assert "number 3 minute" in text
