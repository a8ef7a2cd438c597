"""Typed literal values and their comparison semantics.

A :class:`Value` is one of five kinds: string, number (decimal magnitude with
an optional opaque unit), year, calendar date or time of day.  Construction
always goes through the classmethods, which canonicalise the surface form
(``raw``) so that equal values compare and hash equal.

Comparison rules, shared by the evaluator and the KoPL runner:

* numbers compare only when their unit strings match exactly; a unit mismatch
  makes every operator false, including ``is not`` (units are opaque, there is
  no conversion);
* years, dates and times follow calendar order; a year compared against a
  date is compared against the date's year;
* values of incompatible kinds (string vs. number, time vs. date, ...) make
  every operator false.
"""

from __future__ import annotations

import datetime
import enum
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation


class VType(enum.Enum):
    STRING = "string"
    NUMBER = "number"
    YEAR = "year"
    DATE = "date"
    TIME = "time"


class Cop(enum.Enum):
    """Comparison operators; values are the IR surface words."""

    IS = "is"
    IS_NOT = "is not"
    GT = "larger than"
    LT = "smaller than"
    GE = "at least"
    LE = "at most"


ORDER_COPS = frozenset({Cop.GT, Cop.LT, Cop.GE, Cop.LE})

# Symbol spellings shared by the SPARQL and KoPL surfaces.
COP_SYMBOLS = {
    Cop.IS: "=",
    Cop.IS_NOT: "!=",
    Cop.GT: ">",
    Cop.LT: "<",
    Cop.GE: ">=",
    Cop.LE: "<=",
}
SYMBOL_COPS = {v: k for k, v in COP_SYMBOLS.items()}


def format_decimal(d: Decimal) -> str:
    """Render a decimal without exponent and without trailing zeros."""
    s = format(d.normalize(), "f")
    return "0" if s in ("-0", "0") else s


def _canonical_time_text(t: datetime.time) -> str:
    if t.second == 0 and t.microsecond == 0:
        return t.strftime("%H:%M")
    return t.strftime("%H:%M:%S")


@dataclass(frozen=True)
class Value:
    """A typed literal.  Exactly the field matching ``vtype`` is populated;
    ``raw`` is the canonical surface text used when printing IR."""

    vtype: VType
    raw: str
    magnitude: Decimal | None = None
    unit: str | None = None
    year: int | None = None
    date: datetime.date | None = None
    time: datetime.time | None = None

    @classmethod
    def string(cls, text: str) -> "Value":
        return cls(VType.STRING, raw=text)

    @classmethod
    def number(cls, magnitude, unit: str | None = None) -> "Value":
        mag = magnitude if isinstance(magnitude, Decimal) else Decimal(str(magnitude))
        if not mag.is_finite():
            raise ValueError(f"magnitude must be finite, got {mag}")
        mag = mag.normalize()
        raw = format_decimal(mag)
        if unit is not None:
            if not unit:
                raise ValueError("unit must be a non-empty string or None")
            raw = f"{raw} {unit}"
        return cls(VType.NUMBER, raw=raw, magnitude=mag, unit=unit)

    @classmethod
    def of_year(cls, year: int) -> "Value":
        return cls(VType.YEAR, raw=str(int(year)), year=int(year))

    @classmethod
    def of_date(cls, date: datetime.date) -> "Value":
        return cls(VType.DATE, raw=date.isoformat(), date=date)

    @classmethod
    def of_time(cls, time: datetime.time) -> "Value":
        return cls(VType.TIME, raw=_canonical_time_text(time), time=time)

    @classmethod
    def parse(cls, vtype: VType, text: str) -> "Value":
        """Parse the payload text of a ``<V> ... </V>`` marker.

        Raises ValueError when the text does not fit the declared type.
        """
        text = " ".join(text.split())
        if vtype is VType.STRING:
            if not text:
                raise ValueError("empty string value")
            return cls.string(text)
        if vtype is VType.NUMBER:
            parts = text.split(" ")
            try:
                mag = Decimal(parts[0])
            except InvalidOperation:
                raise ValueError(f"not a number: {parts[0]!r}") from None
            unit = " ".join(parts[1:]) or None
            return cls.number(mag, unit)
        if vtype is VType.YEAR:
            if not _is_int(text):
                raise ValueError(f"not a year: {text!r}")
            return cls.of_year(int(text))
        if vtype is VType.DATE:
            try:
                return cls.of_date(datetime.date.fromisoformat(text))
            except ValueError:
                raise ValueError(f"not an ISO date: {text!r}") from None
        if vtype is VType.TIME:
            try:
                return cls.of_time(datetime.time.fromisoformat(text))
            except ValueError:
                raise ValueError(f"not a time of day: {text!r}") from None
        raise ValueError(f"unknown value type {vtype!r}")

    def __str__(self) -> str:
        return f"{self.vtype.value} {self.raw}"


def _is_int(text: str) -> bool:
    t = text[1:] if text[:1] == "-" else text
    return t.isdigit()


_COMPARE = {
    Cop.IS: lambda c: c == 0,
    Cop.IS_NOT: lambda c: c != 0,
    Cop.GT: lambda c: c > 0,
    Cop.LT: lambda c: c < 0,
    Cop.GE: lambda c: c >= 0,
    Cop.LE: lambda c: c <= 0,
}

_TEMPORAL = (VType.YEAR, VType.DATE)


def _compare_key(left: Value, right: Value):
    """Return (l, r) orderable keys, or None when the pair is incomparable."""
    lt, rt = left.vtype, right.vtype
    if lt is VType.NUMBER and rt is VType.NUMBER:
        if left.unit != right.unit:
            return None
        return left.magnitude, right.magnitude
    if lt is VType.STRING and rt is VType.STRING:
        return left.raw, right.raw
    if lt is VType.TIME and rt is VType.TIME:
        return left.time, right.time
    if lt in _TEMPORAL and rt in _TEMPORAL:
        if lt is VType.YEAR or rt is VType.YEAR:
            ly = left.year if lt is VType.YEAR else left.date.year
            ry = right.year if rt is VType.YEAR else right.date.year
            return ly, ry
        return left.date, right.date
    return None


def compare(left: Value, cop: Cop, right: Value) -> bool:
    """Apply ``cop`` between two values under the guard rules above."""
    keys = _compare_key(left, right)
    if keys is None:
        return False
    l, r = keys
    c = 0 if l == r else (1 if l > r else -1)
    return _COMPARE[cop](c)


def order_key(value: Value):
    """Total-order sort key for superlatives; None for unorderable strings.

    Values group by (kind, unit); groups order lexicographically so that a
    mixed population still sorts deterministically.  Years and dates share a
    calendar group and compare as (year, month, day) prefixes.
    """
    v = value
    if v.vtype is VType.NUMBER:
        return (0, v.unit or "", (v.magnitude,))
    if v.vtype is VType.YEAR:
        return (1, "", (v.year,))
    if v.vtype is VType.DATE:
        return (1, "", (v.date.year, v.date.month, v.date.day))
    if v.vtype is VType.TIME:
        return (2, "", (v.time.hour, v.time.minute, v.time.second))
    return None
