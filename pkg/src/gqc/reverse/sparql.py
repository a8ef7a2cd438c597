"""The emitter's SPARQL subset back into a query AST.

Recognition is pattern-directed, not a full SPARQL grammar: the header and
tail select the query form, and the WHERE items are matched as an unordered
set.  Variables carry meaning through their family (``?e``/``?e_k`` entity,
``?c`` concept, ``?pv_k`` value node, ``?v_k`` filter scalar, ``?qpv``
qualifier).  Constraint order within one entity rebuilds from the first
textual use of each constraint's anchor variable, which reproduces the
emitter's chain order and is invariant under triple permutation.

Labels were snake_cased on the way out, so underscores read back as spaces.
Anything outside the subset (UNION, OPTIONAL, property paths, subqueries,
unknown datatypes, unanchored predicates) is rejected with a diagnostic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .. import ast
from ..diagnostics import (
    E_OUT_OF_DIALECT,
    E_UNKNOWN_PREDICATE,
    ParseError,
    error,
)
from ..mapping import DEFAULT_MAPPING, RESERVED_PREDICATES, SchemaMapping
from ..values import SYMBOL_COPS, Cop, Value, VType

_OFF_DIALECT_WORDS = {"UNION", "OPTIONAL", "MINUS", "SERVICE", "VALUES", "GRAPH", "EXISTS", "BIND"}
_VAR_RE = re.compile(r"\?(e|c|pv|v|qpv)(?:_(\d+))?$")


def _fail(message: str, code: str = E_OUT_OF_DIALECT, pos: int = 0):
    raise ParseError([error(code, message, pos, pos)])


def _denorm(label: str) -> str:
    return label.replace("_", " ")


# ---------------------------------------------------------------------------
# Lexing

_PUNCT = "{}[]();"


def _lex(text: str) -> list[tuple]:
    """Tokens: ("var", name, pos) | ("word", text, pos) | ("str", text, suffix, pos) | ("punct", ch, pos)."""
    out: list[tuple] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _PUNCT:
            out.append(("punct", ch, i))
            i += 1
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                buf.append(text[j])
                j += 1
            if j >= n:
                _fail("unterminated string literal", pos=i)
            j += 1
            suffix = ""
            if text[j : j + 2] == "^^":
                k = j + 2
                while k < n and not text[k].isspace() and text[k] not in _PUNCT:
                    k += 1
                suffix = text[j + 2 : k]
                j = k
            out.append(("str", "".join(buf), suffix, i))
            i = j
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in _PUNCT and text[j] != '"':
            j += 1
        word = text[i:j]
        if word.startswith("?") or word.startswith("$"):
            out.append(("var", word, i))
        else:
            out.append(("word", word, i))
        i = j
    return out


# ---------------------------------------------------------------------------
# Structural parsing into body items


@dataclass
class _Triple:
    subject: str
    predicate: str | tuple  # normalized label, or ("var", name) for ?p
    object: tuple  # ("var", name) | ("lit", text, suffix)
    idx: int


@dataclass
class _FactLine:
    head: str
    relation: str
    tail: str
    key: str
    object: tuple  # ("var", name) | ("lit", text, suffix)
    idx: int


@dataclass
class _Filter:
    var: str
    cop: Cop
    literal: tuple  # ("lit", text, suffix)
    idx: int


@dataclass
class _Structure:
    header: tuple  # ("entity",) | ("count",) | ("ask",) | ("distinct", var)
    triples: list[_Triple] = field(default_factory=list)
    facts: list[_FactLine] = field(default_factory=list)
    filters: list[_Filter] = field(default_factory=list)
    order: str | None = None  # "asc" | "desc"
    having: tuple | None = None  # (target var, Cop, int)


class _StructParser:
    def __init__(self, tokens: list[tuple], mapping: SchemaMapping):
        self.toks = tokens
        self.pos = 0
        self.m = mapping
        self.prefix = mapping.option("sparql", "predicate_prefix") or ""
        self.idx = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is None:
            _fail("unexpected end of query")
        self.pos += 1
        return t

    def expect_word(self, *words: str):
        t = self.next()
        if t[0] != "word" or t[1] not in words:
            _fail(f"expected {' or '.join(words)}, got {t[1]!r}", pos=t[-1])
        return t

    def expect_punct(self, ch: str):
        t = self.next()
        if t[0] != "punct" or t[1] != ch:
            _fail(f"expected {ch!r}, got {t[1]!r}", pos=t[-1])
        return t

    def expect_var(self, name: str | None = None) -> str:
        t = self.next()
        if t[0] != "var" or (name is not None and t[1] != name):
            want = name or "a variable"
            _fail(f"expected {want}, got {t[1]!r}", pos=t[-1])
        return t[1]

    # -- predicates ---------------------------------------------------------

    def predicate(self, word: str, pos: int) -> str:
        if word in _OFF_DIALECT_WORDS:
            _fail(f"{word} is outside the supported subset", pos=pos)
        if word.startswith("<") and word.endswith(">"):
            word = word[1:-1]
            if self.prefix and word.startswith(self.prefix):
                word = word[len(self.prefix) :]
        if any(ch in word for ch in "/|^*+"):
            _fail("property paths are outside the supported subset", pos=pos)
        return word

    # -- top level -----------------------------------------------------------

    def parse(self) -> _Structure:
        t = self.next()
        if t[0] == "word" and t[1] == "ASK":
            st = _Structure(("ask",))
            self.body(st)
        elif t[0] == "word" and t[1] == "SELECT":
            st = _Structure(self.header())
            self.expect_word("WHERE")
            self.body(st)
            self.tail(st)
        else:
            _fail(f"query must start with SELECT or ASK, got {t[1]!r}", pos=t[-1])
        if self.peek() is not None:
            _fail(f"trailing tokens after the query: {self.peek()[1]!r}", pos=self.peek()[-1])
        return st

    def header(self) -> tuple:
        t = self.next()
        if t[0] == "var" and t[1] == "?e":
            return ("entity",)
        if t[0] == "word" and t[1] == "DISTINCT":
            var = self.expect_var()
            if var not in ("?p", "?qpv", "?pv"):
                _fail(f"unsupported projection {var!r}", pos=t[-1])
            return ("distinct", var)
        if t[0] == "punct" and t[1] == "(":
            self.expect_word("COUNT")
            self.expect_punct("(")
            self.expect_word("DISTINCT")
            self.expect_var("?e")
            self.expect_punct(")")
            self.expect_word("AS")
            self.expect_var("?count")
            self.expect_punct(")")
            return ("count",)
        _fail(f"unsupported SELECT projection {t[1]!r}", pos=t[-1])

    # -- WHERE body --------------------------------------------------------------

    def body(self, st: _Structure) -> None:
        self.expect_punct("{")
        while True:
            t = self.peek()
            if t is None:
                _fail("unterminated WHERE block")
            if t[0] == "punct" and t[1] == "}":
                self.next()
                return
            self.item(st)
            t = self.peek()
            if t is not None and t[0] == "word" and t[1] == ".":
                self.next()

    def item(self, st: _Structure) -> None:
        t = self.peek()
        self.idx += 1
        if t[0] == "punct" and t[1] == "{":
            _fail("subqueries are outside the supported subset", pos=t[-1])
        if t[0] == "punct" and t[1] == "[":
            self.fact_line(st)
            return
        if t[0] == "word" and t[1] == "FILTER":
            self.filter_item(st)
            return
        if t[0] == "word" and t[1] in _OFF_DIALECT_WORDS:
            _fail(f"{t[1]} is outside the supported subset", pos=t[-1])
        self.triple(st)

    def term(self) -> tuple:
        t = self.next()
        if t[0] == "var":
            return ("var", t[1])
        if t[0] == "str":
            return ("lit", t[1], t[2])
        _fail(f"expected a variable or literal, got {t[1]!r}", pos=t[-1])

    def triple(self, st: _Structure) -> None:
        s = self.next()
        if s[0] != "var":
            _fail(f"triple subject must be a variable, got {s[1]!r}", pos=s[-1])
        p = self.next()
        if p[0] == "var":
            pred: str | tuple = ("var", p[1])
        elif p[0] == "word":
            pred = self.predicate(p[1], p[-1])
        else:
            _fail(f"bad predicate {p[1]!r}", pos=p[-1])
        obj = self.term()
        st.triples.append(_Triple(s[1], pred, obj, self.idx))

    def fact_line(self, st: _Structure) -> None:
        self.expect_punct("[")
        w = self.next()
        if w[0] != "word" or self.predicate(w[1], w[-1]) != "fact_h":
            _fail("fact node must start with fact_h", pos=w[-1])
        head = self.expect_var()
        self.expect_punct(";")
        w = self.next()
        if w[0] != "word" or self.predicate(w[1], w[-1]) != "fact_r":
            _fail("fact node needs fact_r", pos=w[-1])
        rel = self.next()
        if rel[0] != "word":
            _fail(f"fact relation must be a predicate, got {rel[1]!r}", pos=rel[-1])
        relation = self.predicate(rel[1], rel[-1])
        self.expect_punct(";")
        w = self.next()
        if w[0] != "word" or self.predicate(w[1], w[-1]) != "fact_t":
            _fail("fact node needs fact_t", pos=w[-1])
        tail = self.expect_var()
        self.expect_punct("]")
        key = self.next()
        if key[0] != "word":
            _fail(f"fact qualifier key must be a predicate, got {key[1]!r}", pos=key[-1])
        obj = self.term()
        st.facts.append(_FactLine(head, relation, tail, self.predicate(key[1], key[-1]), obj, self.idx))

    def filter_item(self, st: _Structure) -> None:
        self.expect_word("FILTER")
        self.expect_punct("(")
        var = self.expect_var()
        op = self.next()
        if op[0] != "word" or op[1] not in SYMBOL_COPS:
            _fail(f"unsupported FILTER operator {op[1]!r}", pos=op[-1])
        lit = self.next()
        if lit[0] != "str":
            _fail("FILTER compares against a literal", pos=lit[-1])
        self.expect_punct(")")
        st.filters.append(_Filter(var, SYMBOL_COPS[op[1]], ("lit", lit[1], lit[2]), self.idx))

    # -- tails ----------------------------------------------------------------------

    def tail(self, st: _Structure) -> None:
        t = self.peek()
        if t is None:
            return
        if t[0] == "word" and t[1] == "ORDER":
            self.next()
            self.expect_word("BY")
            t = self.next()
            if t[0] == "word" and t[1] == "DESC":
                self.expect_punct("(")
                self.expect_var("?v")
                self.expect_punct(")")
                st.order = "desc"
            elif t[0] == "var" and t[1] == "?v":
                st.order = "asc"
            else:
                _fail(f"unsupported ORDER BY target {t[1]!r}", pos=t[-1])
            self.expect_word("LIMIT")
            self.expect_word("1")
            return
        if t[0] == "word" and t[1] == "GROUP":
            self.next()
            self.expect_word("BY")
            self.expect_var("?e")
            self.expect_word("HAVING")
            self.expect_punct("(")
            self.expect_word("COUNT")
            self.expect_punct("(")
            self.expect_word("DISTINCT")
            target = self.expect_var()
            self.expect_punct(")")
            op = self.next()
            if op[0] != "word" or op[1] not in SYMBOL_COPS:
                _fail(f"unsupported HAVING operator {op[1]!r}", pos=op[-1])
            n = self.next()
            if n[0] != "word" or not n[1].isdigit():
                _fail(f"HAVING compares against an integer, got {n[1]!r}", pos=n[-1])
            self.expect_punct(")")
            st.having = (target, SYMBOL_COPS[op[1]], int(n[1]))
            return
        _fail(f"unsupported query tail {t[1]!r}", pos=t[-1])


# ---------------------------------------------------------------------------
# Semantic reconstruction


def _family(var: str) -> tuple[str, int] | None:
    m = _VAR_RE.match(var)
    if m is None:
        return None
    return m.group(1), int(m.group(2)) if m.group(2) else 0


def _var_order(var: str) -> int:
    fam = _family(var)
    return fam[1] if fam else -1


class _Rebuilder:
    def __init__(self, st: _Structure, mapping: SchemaMapping):
        self.st = st
        self.m = mapping
        # per entity var
        self.names: dict[str, list[tuple[str, int]]] = {}
        self.concepts: dict[str, list[tuple[int, str, int]]] = {}  # (cvar order, name, idx)
        self.attrs: dict[str, list[tuple[str, str, int]]] = {}  # (pred, pv var, idx)
        self.edges: dict[str, list[tuple[str, str, str, int]]] = {}  # owner -> (pred, head, tail, idx)
        self.rel_link: tuple[str, str] | None = None
        # per value-node var
        self.pv_exact: dict[str, tuple] = {}
        self.pv_scalar: dict[str, str] = {}
        self.pv_unit: dict[str, str] = {}
        # concept vars
        self.concept_names: dict[str, str] = {}
        self.concept_links: list[tuple[str, str, int]] = []
        self.filters: dict[str, tuple[Cop, tuple]] = {}
        self.facts: dict[tuple[str, str, str], list[_FactLine]] = {}
        self.visited: set[str] = set()
        self.spine_pv_owner: str | None = None

    # -- table building -----------------------------------------------------

    def index(self) -> None:
        for f in self.st.filters:
            if f.var in self.filters:
                _fail(f"two FILTER items on {f.var}")
            self.filters[f.var] = (f.cop, f.literal)
        for fl in self.st.facts:
            self.facts.setdefault((fl.head, fl.relation, fl.tail), []).append(fl)
        for t in self.st.triples:
            self.triple_entry(t)
        for evar, cvar, idx in self.concept_links:
            name = self.concept_names.get(cvar)
            if name is None:
                _fail(f"concept variable {cvar} has no name triple")
            self.concepts.setdefault(evar, []).append((_var_order(cvar), name, idx))

    def triple_entry(self, t: _Triple) -> None:
        sfam = _family(t.subject)
        if isinstance(t.predicate, tuple):  # variable predicate: the relation-query link
            if self.rel_link is not None or t.predicate[1] != "?p":
                _fail("only one variable-predicate triple (?p) is supported")
            if t.object[0] != "var":
                _fail("the ?p link joins two entity variables")
            self.rel_link = (t.subject, t.object[1])
            return
        pred = t.predicate
        if pred == "name":
            if t.object[0] != "lit" or t.object[2]:
                _fail("name objects are plain string literals")
            if sfam and sfam[0] == "e":
                self.names.setdefault(t.subject, []).append((t.object[1], t.idx))
                return
            if sfam and sfam[0] == "c":
                if t.subject in self.concept_names:
                    _fail(f"two names for concept variable {t.subject}")
                self.concept_names[t.subject] = t.object[1]
                return
            _fail(f"name triple on unsupported variable {t.subject}")
        if pred == "instance_of":
            if t.object[0] != "var" or not (_family(t.object[1]) and _family(t.object[1])[0] == "c"):
                _fail("instance_of must point at a concept variable")
            self.concept_links.append((t.subject, t.object[1], t.idx))
            return
        if pred == "unit":
            if t.object[0] != "lit" or t.object[2]:
                _fail("unit objects are plain string literals")
            self.pv_unit[t.subject] = t.object[1]
            return
        if pred == "value":
            if t.object[0] == "lit":
                self.pv_exact[t.subject] = t.object
            else:
                vfam = _family(t.object[1])
                if not vfam or vfam[0] != "v":
                    _fail(f"value triples bind ?v variables, got {t.object[1]!r}")
                self.pv_scalar[t.subject] = t.object[1]
            return
        if pred in RESERVED_PREDICATES:
            _fail(f"reserved predicate {pred!r} used outside its structural position")
        # user predicate: attribute link or relation edge
        if not sfam or sfam[0] != "e":
            _fail(f"predicate {pred!r} on unsupported subject {t.subject}", E_UNKNOWN_PREDICATE)
        if t.object[0] == "var":
            ofam = _family(t.object[1])
            if ofam and ofam[0] == "pv":
                self.attrs.setdefault(t.subject, []).append((pred, t.object[1], t.idx))
                return
            if ofam and ofam[0] == "e":
                owner = t.subject if _var_order(t.subject) <= _var_order(t.object[1]) else t.object[1]
                self.edges.setdefault(owner, []).append((pred, t.subject, t.object[1], t.idx))
                return
        _fail(f"predicate {pred!r} is not anchored to a value node or entity", E_UNKNOWN_PREDICATE)

    # -- literals --------------------------------------------------------------

    def value_from(self, lit: tuple, unit: str | None) -> Value:
        _, text, suffix = lit
        try:
            if suffix == "":
                return Value.string(text)
            if suffix == self.m.numeric_datatype_suffix.lstrip("^"):
                return Value.number(Decimal(text), unit)
            if suffix == "xsd:year":
                return Value.parse(VType.YEAR, text)
            if suffix == "xsd:date":
                return Value.parse(VType.DATE, text)
            if suffix == "xsd:time":
                return Value.parse(VType.TIME, text)
        except (ValueError, InvalidOperation) as exc:
            _fail(f"bad literal {text!r}: {exc}")
        _fail(f"unsupported literal datatype ^^{suffix}")

    def attr_value(self, pv: str) -> tuple[Cop, Value]:
        unit = self.pv_unit.pop(pv, None)
        if pv in self.pv_exact:
            lit = self.pv_exact.pop(pv)
            return Cop.IS, self.value_from(lit, unit)
        if pv in self.pv_scalar:
            scalar = self.pv_scalar.pop(pv)
            if scalar not in self.filters:
                _fail(f"value variable {scalar} has no FILTER")
            cop, lit = self.filters.pop(scalar)
            return cop, self.value_from(lit, unit)
        _fail(f"value node {pv} has no value triple")

    def qualifier_from(self, lines: list[_FactLine]) -> ast.QualifierCond | None:
        """Build the qualifier condition from a fact's non-answer lines."""
        conds = [l for l in lines if not (l.object[0] == "var" and l.object[1] == "?qpv")]
        if not conds:
            return None
        if len(conds) > 1:
            _fail("at most one qualifier condition per fact is supported")
        line = conds[0]
        key = _denorm(line.key)
        if line.object[0] == "lit":
            return ast.QualifierCond(key, Cop.IS, self.value_from(line.object, None))
        qfam = _family(line.object[1])
        if not qfam or qfam[0] != "qpv":
            _fail(f"qualifier objects bind ?qpv variables, got {line.object[1]!r}")
        if line.object[1] not in self.filters:
            _fail(f"qualifier variable {line.object[1]} has no FILTER")
        cop, lit = self.filters.pop(line.object[1])
        return ast.QualifierCond(key, cop, self.value_from(lit, None))

    # -- entity sets --------------------------------------------------------------

    def entity_set(self, var: str, skip_attr_pv: str | None = None, skip_edge_idx: int | None = None) -> ast.EntitySet:
        if var in self.visited:
            _fail(f"entity variable {var} is shared between positions")
        self.visited.add(var)

        names = self.names.pop(var, [])
        if len(names) > 1:
            _fail(f"{var} carries more than one name")
        concepts = sorted(self.concepts.pop(var, []))
        base: ast.EntitySet
        if names:
            base = ast.Entity(names[0][0])
        elif concepts:
            base = ast.Concept(concepts[-1][1])
            concepts = concepts[:-1]
        else:
            _fail(f"{var} has neither a name nor a concept", E_UNKNOWN_PREDICATE)
        for _, cname, _ in reversed(concepts):
            base = ast.Typed(cname, base)

        anchored: list[tuple[int, object]] = []
        for pred, pv, idx in self.attrs.pop(var, []):
            if skip_attr_pv is not None and pv == skip_attr_pv:
                continue
            anchored.append((idx, ("attr", pred, pv)))
        for pred, head, tail, idx in self.edges.pop(var, []):
            if skip_edge_idx is not None and idx == skip_edge_idx:
                continue
            anchored.append((idx, ("edge", pred, head, tail)))
        anchored.sort(key=lambda pair: pair[0])

        node = base
        for _, item in anchored:
            if item[0] == "attr":
                _, pred, pv = item
                cop, value = self.attr_value(pv)
                qualifier = self.take_fact_qualifier(var, pred, pv)
                node = ast.Constrained(node, ast.AttrCmp(_denorm(pred), cop, value, qualifier))
            else:
                _, pred, head, tail = item
                if head == var:
                    direction, tvar = ast.Dir.BACKWARD, tail
                else:
                    direction, tvar = ast.Dir.FORWARD, head
                qualifier = self.take_fact_qualifier(head, pred, tail)
                target = self.entity_set(tvar)
                count = None
                if self.st.having is not None and self.st.having[0] == tvar:
                    _, cop, n = self.st.having
                    count = ast.CountCmp(cop, Value.number(Decimal(n)))
                    self.st.having = None
                node = ast.Constrained(node, ast.Rel(_denorm(pred), direction, target, count, qualifier))
        return node

    def take_fact_qualifier(self, head: str, rel: str, tail: str) -> ast.QualifierCond | None:
        lines = self.facts.pop((head, rel, tail), None)
        if lines is None:
            return None
        return self.qualifier_from(lines)

    # -- completion check ----------------------------------------------------------

    def finish(self) -> None:
        leftovers = []
        if self.names:
            leftovers.append("name triples")
        if self.attrs:
            leftovers.append("attribute triples")
        if self.edges:
            leftovers.append("relation triples")
        if self.concepts:
            leftovers.append("concept triples")
        if self.pv_exact or self.pv_scalar or self.pv_unit:
            leftovers.append("value-node triples")
        if self.filters:
            leftovers.append("FILTER items")
        if self.facts:
            leftovers.append("fact nodes")
        if self.rel_link is not None:
            leftovers.append("a ?p link")
        if self.st.having is not None:
            leftovers.append("a HAVING clause")
        if leftovers:
            _fail("query parts not reachable from the recognized shape: " + ", ".join(leftovers))


def parse_sparql(text: str, mapping: SchemaMapping | None = None) -> ast.Query:
    """Translate dialect SPARQL back into a query AST.

    Raises :class:`ParseError` with E_OUT_OF_DIALECT for recognizable but
    unsupported SPARQL and E_UNKNOWN_PREDICATE for triples that cannot be
    anchored to the dialect's shapes.
    """
    m = mapping or DEFAULT_MAPPING
    st = _StructParser(_lex(text), m).parse()
    rb = _Rebuilder(st, m)
    rb.index()

    if st.header == ("ask",):
        node = rb.entity_set("?e")
        rb.finish()
        if not isinstance(node, ast.Constrained):
            _fail("a boolean query needs at least one constraint")
        return ast.VerifyQuery(node.inner, node.constraint)

    if st.header == ("count",):
        node = rb.entity_set("?e")
        rb.finish()
        return ast.CountQuery(node)

    if st.header == ("entity",):
        if st.order is not None:
            spine = [(pred, pv, idx) for pred, pv, idx in rb.attrs.get("?e", []) if pv == "?pv"]
            if len(spine) != 1:
                _fail("an ordered query needs exactly one ?e <attr> ?pv spine")
            pred, pv, _ = spine[0]
            if rb.pv_scalar.pop(pv, None) != "?v":
                _fail("the ordering spine needs ?pv value ?v")
            if "?v" in rb.filters or pv in rb.pv_unit or pv in rb.pv_exact:
                _fail("the ordering spine carries no conditions")
            rb.attrs["?e"] = [a for a in rb.attrs["?e"] if a[1] != "?pv"]
            if not rb.attrs["?e"]:
                del rb.attrs["?e"]
            sop = ast.Sop.LARGEST if st.order == "desc" else ast.Sop.SMALLEST
            node = rb.entity_set("?e")
            rb.finish()
            return ast.SuperlativeQuery(sop, _denorm(pred), node)
        node = rb.entity_set("?e")
        rb.finish()
        return ast.EntityQuery(node)

    kind, var = st.header
    if var == "?p":
        if rb.rel_link is None:
            _fail("a relation query needs the ?e_1 ?p ?e_2 link")
        s, t = rb.rel_link
        rb.rel_link = None
        source = rb.entity_set(s)
        target = rb.entity_set(t)
        rb.finish()
        return ast.RelationQuery(source, target)

    if var == "?pv":
        owners = [(evar, pred) for evar, links in rb.attrs.items() for pred, pv, _ in links if pv == "?pv"]
        if len(owners) != 1:
            _fail("an attribute query needs exactly one <attr> ?pv spine")
        evar, pred = owners[0]
        if "?pv" in rb.pv_exact or "?pv" in rb.pv_scalar or "?pv" in rb.pv_unit:
            _fail("the projection spine carries no conditions")
        node = rb.entity_set(evar, skip_attr_pv="?pv")
        rb.finish()
        return ast.AttributeQuery(_denorm(pred), node)

    # var == "?qpv": qualifier query
    answer_lines = [
        (fact, line)
        for fact, lines in rb.facts.items()
        for line in lines
        if line.object == ("var", "?qpv")
    ]
    if len(answer_lines) != 1:
        _fail("a qualifier query needs exactly one fact line binding ?qpv")
    (head, rel, tail), line = answer_lines[0]
    key = _denorm(line.key)
    rb.facts[(head, rel, tail)] = [l for l in rb.facts[(head, rel, tail)] if l is not line]
    if not rb.facts[(head, rel, tail)]:
        del rb.facts[(head, rel, tail)]

    tail_fam = _family(tail)
    if tail_fam and tail_fam[0] == "pv":
        # attribute-fact qualifier: the anchored attribute is the constraint
        links = [(pred, pv, idx) for pred, pv, idx in rb.attrs.get(head, []) if pv == tail]
        if len(links) != 1 or links[0][0] != rel:
            _fail("the qualifier fact does not match an attribute triple")
        pred = links[0][0]
        cop, value = rb.attr_value(tail)
        qualifier = rb.take_fact_qualifier(head, rel, tail)
        rb.attrs[head] = [a for a in rb.attrs[head] if a[1] != tail]
        if not rb.attrs[head]:
            del rb.attrs[head]
        constraint = ast.AttrCmp(_denorm(pred), cop, value, qualifier)
        node = rb.entity_set(head)
        rb.finish()
        return ast.QualifierQuery(key, node, constraint)

    # relation-fact qualifier
    root = "?e_1"
    if head == root:
        direction, tvar = ast.Dir.BACKWARD, tail
    elif tail == root:
        direction, tvar = ast.Dir.FORWARD, head
    else:
        _fail("the qualifier fact must touch the root entity ?e_1")
    edges = rb.edges.get(root, [])
    matching = [e for e in edges if e[0] == rel and e[1] == head and e[2] == tail]
    if len(matching) != 1:
        _fail("the qualifier fact does not match a relation triple")
    qualifier = rb.take_fact_qualifier(head, rel, tail)
    node = rb.entity_set(root, skip_edge_idx=matching[0][3])
    target = rb.entity_set(tvar)
    rb.finish()
    constraint = ast.Rel(_denorm(rel), direction, target, None, qualifier)
    return ast.QualifierQuery(key, node, constraint)
