"""Surface syntax of the graph query IR: tokenizer, parser and printer.

The IR is a whitespace-separated token stream.  Fourteen marker tokens
(``<ES>``/``</ES>`` and open/close pairs for E, C, A, R, Q, V) type the
terminal payloads and recover nesting; everything else is a keyword or a
plain word.  ``(`` and ``)`` are self-delimiting and split even when glued
to a neighbouring token, since generated queries write ``(<ES>``.

Tokenization is total.  Inside an open payload marker, scanning for the
matching close marker takes precedence over keyword classification, so
entities may be named ``and`` or ``is not``.  Multi-word operators are fused
into single keyword tokens outside payloads.

Parsing is leftmost-derivation recursive descent with bounded lookahead.
``parse_ir`` raises :class:`~gqc.diagnostics.ParseError` on any stream that
is not derivable; it never returns a partial tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import ast
from .diagnostics import (
    E_EMPTY_PAYLOAD,
    E_TRAILING_INPUT,
    E_UNBALANCED_MARKER,
    E_UNEXPECTED_TOKEN,
    ParseError,
    error,
)
from .values import Cop, Value, VType


class TokenKind(Enum):
    MARKER_OPEN = "marker_open"
    MARKER_CLOSE = "marker_close"
    KEYWORD = "keyword"
    WORD = "word"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    start: int
    end: int
    tag: str | None = None  # marker tag, only for marker tokens


MARKER_TAGS = ("ES", "E", "C", "A", "R", "Q", "V")
PAYLOAD_TAGS = frozenset(MARKER_TAGS) - {"ES"}

_OPEN = {f"<{t}>": t for t in MARKER_TAGS}
_CLOSE = {f"</{t}>": t for t in MARKER_TAGS}

# Two-word operators fused during tokenization; checked before single words.
_FUSED = {
    ("is", "not"): "is not",
    ("larger", "than"): "larger than",
    ("smaller", "than"): "smaller than",
    ("at", "least"): "at least",
    ("at", "most"): "at most",
}

KEYWORDS = frozenset(
    {
        "what", "is", "the", "how", "many", "whose", "that", "whether",
        "of", "from", "to", "and", "or", "not", "forward", "backward",
        "largest", "smallest", "sum", "average", "maximum", "minimum",
        "string", "number", "year", "date", "time",
        "relation", "attribute", "qualifier",
        "which", "one", "has", "among", "have", "ones", "(", ")",
    }
    | set(_FUSED.values())
)


def _lexemes(text: str):
    """Split into (lexeme, start, end) on whitespace, with parens standalone."""
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()":
            out.append((ch, i, i + 1))
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "()":
            j += 1
        out.append((text[i:j], i, j))
        i = j
    return out


def tokenize(text: str) -> list[Token]:
    """Tokenize IR source text.  Total: unknown input becomes Word tokens."""
    lexemes = _lexemes(text)
    tokens: list[Token] = []
    payload: str | None = None  # tag of the open payload marker, if any
    i = 0
    while i < len(lexemes):
        lex, start, end = lexemes[i]
        if lex in _OPEN:
            tag = _OPEN[lex]
            tokens.append(Token(TokenKind.MARKER_OPEN, lex, start, end, tag))
            payload = tag if tag in PAYLOAD_TAGS else None
            i += 1
            continue
        if lex in _CLOSE:
            tokens.append(Token(TokenKind.MARKER_CLOSE, lex, start, end, _CLOSE[lex]))
            payload = None
            i += 1
            continue
        if payload is None:
            if i + 1 < len(lexemes):
                fused = _FUSED.get((lex, lexemes[i + 1][0]))
                if fused is not None:
                    tokens.append(Token(TokenKind.KEYWORD, fused, start, lexemes[i + 1][2]))
                    i += 2
                    continue
            if lex in KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, lex, start, end))
                i += 1
                continue
        tokens.append(Token(TokenKind.WORD, lex, start, end))
        i += 1
    return tokens


# ---------------------------------------------------------------------------
# Parser

_VTYPE_WORDS = {t.value: t for t in VType}
_COP_WORDS = {c.value: c for c in Cop}
_LOP_WORDS = {o.value: o for o in ast.Lop}
_SOP_WORDS = {s.value: s for s in ast.Sop}
_VOP_WORDS = {v.value: v for v in ast.Vop}
_DIR_WORDS = {d.value: d for d in ast.Dir}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token access ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token | None:
        t = self.peek()
        if t is not None:
            self.pos += 1
        return t

    def at_keyword(self, *words: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t is not None and t.kind is TokenKind.KEYWORD and t.text in words

    def at_open(self, *tags: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t is not None and t.kind is TokenKind.MARKER_OPEN and t.tag in tags

    def fail(self, code: str, message: str, token: Token | None = None):
        t = token if token is not None else self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            start = end = last.end if last else 0
        else:
            start, end = t.start, t.end
        raise ParseError([error(code, message, start, end)])

    def expect_keyword(self, word: str) -> Token:
        t = self.peek()
        if t is None or t.kind is not TokenKind.KEYWORD or t.text != word:
            got = t.text if t else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected {word!r}, got {got!r}")
        return self.next()

    # -- payloads ----------------------------------------------------------

    def payload(self, tag: str) -> str:
        """Parse ``<tag> words </tag>`` and return the joined payload."""
        open_tok = self.peek()
        if not self.at_open(tag):
            got = open_tok.text if open_tok else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected <{tag}>, got {got!r}")
        self.next()
        words = []
        while True:
            t = self.peek()
            if t is None:
                self.fail(E_UNBALANCED_MARKER, f"<{tag}> is never closed", open_tok)
            if t.kind is TokenKind.WORD:
                words.append(t.text)
                self.next()
                continue
            if t.kind is TokenKind.MARKER_CLOSE and t.tag == tag:
                if not words:
                    self.fail(E_EMPTY_PAYLOAD, f"<{tag}> encloses no words", t)
                self.next()
                return " ".join(words)
            self.fail(E_UNBALANCED_MARKER, f"<{tag}> closed by {t.text!r}", t)

    # -- grammar -----------------------------------------------------------

    def query(self) -> ast.Query:
        if self.at_keyword("what"):
            self.next()
            self.expect_keyword("is")
            if self.at_keyword("the"):
                self.next()
                if self.at_keyword("attribute"):
                    self.next()
                    attr = self.payload("A")
                    self.expect_keyword("of")
                    return ast.AttributeQuery(attr, self.entityset())
                if self.at_keyword("relation"):
                    self.next()
                    self.expect_keyword("from")
                    source = self.entityset()
                    self.expect_keyword("to")
                    return ast.RelationQuery(source, self.entityset())
                if self.at_keyword("qualifier"):
                    self.next()
                    key = self.payload("Q")
                    self.expect_keyword("of")
                    es = self.entityset()
                    return ast.QualifierQuery(key, es, self.constraint())
                self.fail(E_UNEXPECTED_TOKEN, "expected 'attribute', 'relation' or 'qualifier' after 'the'")
            if self.at_open("ES", "E", "C"):
                return ast.EntityQuery(self.entityset())
            return ast.ValueQuery(self.value_expr())
        if self.at_keyword("how"):
            self.next()
            self.expect_keyword("many")
            return ast.CountQuery(self.entityset())
        if self.at_keyword("whether"):
            self.next()
            es = self.entityset()
            return ast.VerifyQuery(es, self.constraint())
        if self.at_keyword("which"):
            self.next()
            self.expect_keyword("one")
            self.expect_keyword("has")
            self.expect_keyword("the")
            sop = self.sop()
            attr = self.payload("A")
            self.expect_keyword("among")
            return ast.SuperlativeQuery(sop, attr, self.entityset())
        t = self.peek()
        got = t.text if t else "end of input"
        self.fail(E_UNEXPECTED_TOKEN, f"a query cannot start with {got!r}")

    def entityset(self) -> ast.EntitySet:
        if self.at_open("E"):
            return ast.Entity(self.payload("E"))
        if self.at_open("C"):
            return ast.Concept(self.payload("C"))
        if not self.at_open("ES"):
            t = self.peek()
            got = t.text if t else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected an entity set, got {got!r}")
        open_tok = self.next()
        first = self.entityset()
        node: ast.EntitySet
        t = self.peek()
        if t is None:
            self.fail(E_UNBALANCED_MARKER, "<ES> is never closed", open_tok)
        if t.kind is TokenKind.KEYWORD and t.text in _LOP_WORDS:
            self.next()
            node = ast.Combine(_LOP_WORDS[t.text], first, self.entityset())
        elif t.kind is TokenKind.KEYWORD and t.text == "(":
            node = ast.Constrained(first, self.appositive())
        elif t.kind is TokenKind.KEYWORD and t.text in ("whose", "that"):
            node = ast.Constrained(first, self.constraint())
        elif isinstance(first, ast.Concept) and self.at_open("ES", "E", "C"):
            node = ast.Typed(first.name, self.entityset())
        else:
            node = first  # redundant single-child wrapper collapses here
        self.close_marker("ES", open_tok)
        return node

    def appositive(self) -> ast.Constraint:
        # "( <ES> ones Constraint </ES> )": intersection with the constrained
        # universal set, i.e. plain constraint application to the outer set.
        self.expect_keyword("(")
        open_tok = self.peek()
        if not self.at_open("ES"):
            got = open_tok.text if open_tok else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected <ES> after '(', got {got!r}")
        self.next()
        self.expect_keyword("ones")
        constraint = self.constraint()
        self.close_marker("ES", open_tok)
        self.expect_keyword(")")
        return constraint

    def close_marker(self, tag: str, open_tok: Token | None) -> None:
        t = self.peek()
        if t is not None and t.kind is TokenKind.MARKER_CLOSE and t.tag == tag:
            self.next()
            return
        if t is None:
            self.fail(E_UNBALANCED_MARKER, f"<{tag}> is never closed", open_tok)
        self.fail(E_UNBALANCED_MARKER, f"expected </{tag}>, got {t.text!r}", t)

    def constraint(self) -> ast.Constraint:
        if self.at_keyword("whose"):
            self.next()
            attr = self.payload("A")
            cop = self.cop()
            value = self.value_literal()
            return ast.AttrCmp(attr, cop, value, self.opt_qualifier_cond())
        if self.at_keyword("that"):
            self.next()
            if self.at_keyword("have"):
                self.next()
                sop = self.sop()
                attr = self.payload("A")
                return ast.AttrSup(sop, attr, self.opt_qualifier_cond())
            relation = self.payload("R")
            direction = None
            t = self.peek()
            if t is not None and t.kind is TokenKind.KEYWORD and t.text in _DIR_WORDS:
                direction = _DIR_WORDS[t.text]
                self.next()
            self.expect_keyword("to")
            t = self.peek()
            if t is not None and t.kind is TokenKind.KEYWORD and t.text in _COP_WORDS:
                cop = self.cop()
                count = ast.CountCmp(cop, self.value_literal())
                target = self.entityset()
                return ast.Rel(relation, direction, target, count, self.opt_qualifier_cond())
            if t is not None and t.kind is TokenKind.KEYWORD and t.text in _SOP_WORDS:
                sop = self.sop()
                return ast.RelSup(relation, direction, sop, self.entityset())
            target = self.entityset()
            return ast.Rel(relation, direction, target, None, self.opt_qualifier_cond())
        t = self.peek()
        got = t.text if t else "end of input"
        self.fail(E_UNEXPECTED_TOKEN, f"expected a constraint ('whose' or 'that'), got {got!r}")

    def opt_qualifier_cond(self) -> ast.QualifierCond | None:
        if not self.at_open("Q"):
            return None
        key = self.payload("Q")
        cop = self.cop()
        return ast.QualifierCond(key, cop, self.value_literal())

    def cop(self) -> Cop:
        t = self.peek()
        if t is None or t.kind is not TokenKind.KEYWORD or t.text not in _COP_WORDS:
            got = t.text if t else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected a comparison operator, got {got!r}")
        self.next()
        return _COP_WORDS[t.text]

    def sop(self) -> ast.Sop:
        t = self.peek()
        if t is None or t.kind is not TokenKind.KEYWORD or t.text not in _SOP_WORDS:
            got = t.text if t else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected 'largest' or 'smallest', got {got!r}")
        self.next()
        return _SOP_WORDS[t.text]

    def value_literal(self) -> Value:
        """``VTYPE <V> payload </V>``; the only value form in constraints."""
        t = self.peek()
        if t is None or t.kind is not TokenKind.KEYWORD or t.text not in _VTYPE_WORDS:
            got = t.text if t else "end of input"
            self.fail(E_UNEXPECTED_TOKEN, f"expected a value type, got {got!r}")
        self.next()
        vtype = _VTYPE_WORDS[t.text]
        start = self.peek()
        payload = self.payload("V")
        try:
            return Value.parse(vtype, payload)
        except ValueError as exc:
            self.fail(E_UNEXPECTED_TOKEN, str(exc), start)

    def value_expr(self) -> ast.ValueExpr:
        expr = self.value_primary()
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.KEYWORD or t.text not in _LOP_WORDS:
                return expr
            self.next()
            expr = ast.CombineValues(_LOP_WORDS[t.text], expr, self.value_primary())

    def value_primary(self) -> ast.ValueExpr:
        t = self.peek()
        if t is not None and t.kind is TokenKind.KEYWORD and t.text in _VTYPE_WORDS:
            return ast.Lit(self.value_literal())
        if t is not None and t.kind is TokenKind.KEYWORD and t.text in _VOP_WORDS:
            self.next()
            self.expect_keyword("of")
            return ast.Aggregate(_VOP_WORDS[t.text], self.value_expr())
        if self.at_open("A"):
            attr = self.payload("A")
            self.expect_keyword("of")
            return ast.AttrOf(attr, self.payload("E"))
        got = t.text if t else "end of input"
        self.fail(E_UNEXPECTED_TOKEN, f"expected a value expression, got {got!r}")


def parse_ir(tokens: list[Token]) -> ast.Query:
    """Parse a token stream into a query AST.

    Raises :class:`ParseError` with at least one diagnostic when the stream
    is not derivable from the grammar.
    """
    p = _Parser(tokens)
    query = p.query()
    t = p.peek()
    if t is not None:
        raise ParseError([error(E_TRAILING_INPUT, f"input continues after a complete query: {t.text!r}", t.start, t.end)])
    return query


def parse_text(text: str) -> ast.Query:
    """Convenience: tokenize and parse in one step."""
    return parse_ir(tokenize(text))


# ---------------------------------------------------------------------------
# Printer


def print_ir(query: ast.Query) -> str:
    """Render a query as canonical IR text.

    The output is normalized: single spaces, explicit directions, constraint
    clauses in tree order.  ``parse_text(print_ir(q))`` equals
    ``normalize(q)`` for every valid query.
    """
    return _print_query(ast.normalize(query))


def _print_query(q: ast.Query) -> str:
    if isinstance(q, ast.EntityQuery):
        return f"what is {_print_set(q.entityset)}"
    if isinstance(q, ast.AttributeQuery):
        return f"what is the attribute <A> {q.attribute} </A> of {_print_set(q.entityset)}"
    if isinstance(q, ast.RelationQuery):
        return f"what is the relation from {_print_set(q.source)} to {_print_set(q.target)}"
    if isinstance(q, ast.QualifierQuery):
        return (
            f"what is the qualifier <Q> {q.qualifier} </Q> of "
            f"{_print_set(q.entityset)} {_print_constraint(q.constraint)}"
        )
    if isinstance(q, ast.CountQuery):
        return f"how many {_print_set(q.entityset)}"
    if isinstance(q, ast.VerifyQuery):
        return f"whether {_print_set(q.entityset)} {_print_constraint(q.constraint)}"
    if isinstance(q, ast.ValueQuery):
        return f"what is {_print_value_expr(q.value)}"
    if isinstance(q, ast.SuperlativeQuery):
        return f"which one has the {q.sop.value} <A> {q.attribute} </A> among {_print_set(q.entityset)}"
    raise TypeError(f"not a query: {q!r}")


def _print_set(node: ast.EntitySet) -> str:
    if isinstance(node, ast.Entity):
        return f"<E> {node.name} </E>"
    if isinstance(node, ast.Concept):
        return f"<C> {node.name} </C>"
    if isinstance(node, ast.Typed):
        return f"<ES> <C> {node.concept} </C> {_print_set(node.inner)} </ES>"
    if isinstance(node, ast.Combine):
        return f"<ES> {_print_set(node.left)} {node.op.value} {_print_set(node.right)} </ES>"
    if isinstance(node, ast.Constrained):
        return f"<ES> {_print_set(node.inner)} {_print_constraint(node.constraint)} </ES>"
    raise TypeError(f"not an entity set: {node!r}")


def _print_constraint(c: ast.Constraint) -> str:
    if isinstance(c, ast.AttrCmp):
        out = f"whose <A> {c.attribute} </A> {c.cop.value} {_print_value(c.value)}"
        return out + _print_qualifier_cond(c.qualifier)
    if isinstance(c, ast.AttrSup):
        out = f"that have {c.sop.value} <A> {c.attribute} </A>"
        return out + _print_qualifier_cond(c.qualifier)
    if isinstance(c, ast.Rel):
        direction = (c.direction or ast.DEFAULT_DIR).value
        out = f"that <R> {c.relation} </R> {direction} to "
        if c.count is not None:
            out += f"{c.count.cop.value} {_print_value(c.count.value)} "
        out += _print_set(c.target)
        return out + _print_qualifier_cond(c.qualifier)
    if isinstance(c, ast.RelSup):
        direction = (c.direction or ast.DEFAULT_DIR).value
        return f"that <R> {c.relation} </R> {direction} to {c.sop.value} {_print_set(c.target)}"
    raise TypeError(f"not a constraint: {c!r}")


def _print_qualifier_cond(q: ast.QualifierCond | None) -> str:
    if q is None:
        return ""
    return f" <Q> {q.key} </Q> {q.cop.value} {_print_value(q.value)}"


def _print_value(v: Value) -> str:
    return f"{v.vtype.value} <V> {v.raw} </V>"


def _print_value_expr(expr: ast.ValueExpr) -> str:
    if isinstance(expr, ast.Lit):
        return _print_value(expr.value)
    if isinstance(expr, ast.AttrOf):
        return f"<A> {expr.attribute} </A> of <E> {expr.entity} </E>"
    if isinstance(expr, ast.Aggregate):
        return f"{expr.op.value} of {_print_value_expr(expr.inner)}"
    if isinstance(expr, ast.CombineValues):
        return f"{_print_value_expr(expr.left)} {expr.op.value} {_print_value_expr(expr.right)}"
    raise TypeError(f"not a value expression: {expr!r}")
