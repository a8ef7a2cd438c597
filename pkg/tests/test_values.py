import datetime
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gqc.values import Cop, VType, Value, compare, format_decimal, order_key


def num(mag, unit=None):
    return Value.number(Decimal(str(mag)), unit)


class TestConstruction:
    def test_number_canonical_raw(self):
        assert num("110.0", "minute").raw == "110 minute"
        assert num("0.500").raw == "0.5"
        assert num("-3").raw == "-3"

    def test_equal_numbers_compare_equal(self):
        assert num("110.0", "minute") == num(110, "minute")

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            num("NaN")
        with pytest.raises(ValueError):
            Value.parse(VType.NUMBER, "Infinity minute")

    def test_parse_number_with_multiword_unit(self):
        v = Value.parse(VType.NUMBER, "3 light year")
        assert v.magnitude == 3 and v.unit == "light year"

    def test_parse_time_canonicalises(self):
        assert Value.parse(VType.TIME, "12:00").raw == "12:00"
        assert Value.parse(VType.TIME, "12:00:00").raw == "12:00"
        assert Value.parse(VType.TIME, "12:00:30").raw == "12:00:30"

    @pytest.mark.parametrize(
        "vtype,text",
        [
            (VType.NUMBER, "abc"),
            (VType.YEAR, "20x0"),
            (VType.DATE, "2000-13-01"),
            (VType.TIME, "25:00"),
            (VType.STRING, ""),
        ],
    )
    def test_parse_rejects_malformed(self, vtype, text):
        with pytest.raises(ValueError):
            Value.parse(vtype, text)


class TestCompare:
    def test_numeric_operators(self):
        a, b = num(110, "minute"), num(120, "minute")
        assert compare(a, Cop.IS, a)
        assert compare(a, Cop.IS_NOT, b)
        assert compare(a, Cop.LT, b)
        assert compare(b, Cop.GT, a)
        assert compare(a, Cop.GE, a)
        assert compare(a, Cop.LE, b)

    def test_unit_mismatch_is_false_for_every_operator(self):
        a, b = num(110, "minute"), num(110, "hour")
        for cop in Cop:
            assert not compare(a, cop, b)

    def test_unit_mismatch_includes_missing_unit(self):
        for cop in Cop:
            assert not compare(num(1), cop, num(1, "minute"))

    def test_cross_type_is_false_for_every_operator(self):
        pairs = [
            (Value.string("110"), num(110)),
            (num(2000), Value.of_year(2000)),
            (Value.of_time(datetime.time(12, 0)), Value.of_date(datetime.date(2000, 1, 1))),
        ]
        for left, right in pairs:
            for cop in Cop:
                assert not compare(left, cop, right)
                assert not compare(right, cop, left)

    def test_year_against_date_compares_years(self):
        d = Value.of_date(datetime.date(2000, 5, 1))
        y = Value.of_year(2000)
        assert compare(y, Cop.IS, d)
        assert compare(d, Cop.IS, y)
        assert compare(Value.of_year(1999), Cop.LT, d)
        assert compare(d, Cop.GT, Value.of_year(1999))

    def test_calendar_order(self):
        early = Value.of_date(datetime.date(1999, 12, 31))
        late = Value.of_date(datetime.date(2000, 1, 1))
        assert compare(early, Cop.LT, late)
        noon = Value.of_time(datetime.time(12, 0))
        one = Value.of_time(datetime.time(13, 0))
        assert compare(noon, Cop.LT, one)

    def test_string_equality(self):
        assert compare(Value.string("a"), Cop.IS, Value.string("a"))
        assert compare(Value.string("a"), Cop.IS_NOT, Value.string("b"))
        assert not compare(Value.string("A"), Cop.IS, Value.string("a"))  # case-sensitive


class TestOrderKey:
    def test_strings_not_orderable(self):
        assert order_key(Value.string("x")) is None

    def test_numbers_group_by_unit(self):
        ks = sorted(order_key(v) for v in [num(5, "minute"), num(1, "minute"), num(9, "hour")])
        # "hour" < "minute" lexicographically, then magnitudes within the unit
        assert ks == [order_key(num(9, "hour")), order_key(num(1, "minute")), order_key(num(5, "minute"))]

    def test_year_and_date_share_calendar_group(self):
        y = order_key(Value.of_year(2000))
        d = order_key(Value.of_date(datetime.date(2000, 5, 1)))
        assert y < d  # same year: the bare year sorts first
        assert order_key(Value.of_year(2001)) > d


@given(st.decimals(allow_nan=False, allow_infinity=False, places=4))
def test_format_decimal_round_trips(d):
    assert Decimal(format_decimal(d)) == d.normalize()
