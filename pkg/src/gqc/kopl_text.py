"""Lexical layer of the KoPL-style program text.

A program is a chain of function steps joined by `` . ``.  Binary operations
take two program branches, serialized as ``Branch1 | Branch2 | Op`` where the
op step may be followed by further chain steps; a branch that is itself a
binary composition is parenthesized:

    FindAll() . FilterConcept(film) . Count()
    Find(a) | Find(b) | QueryRelation()
    ( Find(a) | Find(b) | Or ) | Find(c) | And . Count()

Function arguments are comma-separated; commas, parentheses, pipes and
backslashes inside an argument are escaped with a backslash, so entity names
like "Tashkent, Uzbekistan" survive a round trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import E_BAD_BRANCH, E_UNKNOWN_FUNCTION, ParseError, error

_ESCAPED = "\\,()|"


def escape_arg(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPED:
            out.append("\\")
        out.append(ch)
    return "".join(out)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}({', '.join(escape_arg(a) for a in self.args)})"


@dataclass
class Program:
    """Either a plain chain of steps, or a binary composition followed by a
    continuation chain whose first step is the combining op."""

    branches: tuple["Program", "Program"] | None = None
    steps: list = field(default_factory=list)  # Call | Program (parenthesized)

    def render(self) -> str:
        parts = []
        if self.branches is not None:
            parts.append(_render_branch(self.branches[0]))
            parts.append(" | ")
            parts.append(_render_branch(self.branches[1]))
            parts.append(" | ")
        parts.append(" . ".join(_render_step(s) for s in self.steps))
        return "".join(parts)


def _render_branch(p: Program) -> str:
    text = p.render()
    return f"( {text} )" if p.branches is not None else text


def _render_step(step) -> str:
    if isinstance(step, Call):
        return str(step)
    return f"( {step.render()} )"


def chain(*steps) -> Program:
    return Program(steps=list(steps))


def combine(left: Program, right: Program, op: Call, *rest) -> Program:
    return Program(branches=(left, right), steps=[op, *rest])


def extend(p: Program, *steps) -> Program:
    """Append steps to a program's trailing chain (shares no state)."""
    return Program(branches=p.branches, steps=[*p.steps, *steps])


# ---------------------------------------------------------------------------
# Parsing

_NAME_CHARS = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_")


class _Lexer:
    """Tokens: ('call', Call, pos) | ('(', pos) | (')', pos) | ('.', pos) | ('|', pos)."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple] = []
        self._run()

    def _fail(self, code: str, message: str, pos: int):
        raise ParseError([error(code, message, pos, min(pos + 1, len(self.text)))])

    def _run(self) -> None:
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch in "().|":
                self.tokens.append((ch, i))
                i += 1
                continue
            if ch in _NAME_CHARS:
                j = i
                while j < n and text[j] in _NAME_CHARS:
                    j += 1
                name = text[i:j]
                if j >= n or text[j] != "(":
                    self._fail(E_UNKNOWN_FUNCTION, f"expected '(' after function name {name!r}", j)
                args, j = self._args(j + 1)
                self.tokens.append(("call", Call(name, tuple(args)), i))
                i = j
                continue
            self._fail(E_UNKNOWN_FUNCTION, f"unexpected character {ch!r} in program", i)

    def _args(self, i: int) -> tuple[list[str], int]:
        text, n = self.text, len(self.text)
        args: list[str] = []
        current: list[str] = []
        seen_any = False
        while i < n:
            ch = text[i]
            if ch == "\\" and i + 1 < n:
                current.append(text[i + 1])
                i += 2
                seen_any = True
                continue
            if ch == ")":
                if seen_any or current:
                    args.append("".join(current).strip())
                return args, i + 1
            if ch == ",":
                args.append("".join(current).strip())
                current = []
                seen_any = True
                i += 1
                continue
            current.append(ch)
            if not ch.isspace():
                seen_any = True
            i += 1
        self._fail(E_UNKNOWN_FUNCTION, "unterminated argument list", i)


class _ProgParser:
    def __init__(self, tokens: list[tuple], length: int):
        self.tokens = tokens
        self.pos = 0
        self.length = length

    def fail(self, message: str, code: str = E_BAD_BRANCH):
        pos = self.tokens[self.pos][-1] if self.pos < len(self.tokens) else self.length
        raise ParseError([error(code, message, pos, pos)])

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def expr(self) -> Program:
        first = self.seq()
        t = self.peek()
        if t is None or t[0] != "|":
            return first
        self.pos += 1
        second = self.seq()
        t = self.peek()
        if t is None or t[0] != "|":
            self.fail("binary composition needs 'Branch1 | Branch2 | Op'")
        self.pos += 1
        tail = self.seq()
        if not tail.steps or not isinstance(tail.steps[0], Call):
            self.fail("the step after the second '|' must be a function call")
        if self.peek() is not None and self.peek()[0] == "|":
            self.fail("chained '|' needs parentheses around the inner composition")
        return Program(branches=(first, second), steps=tail.steps)

    def seq(self) -> Program:
        steps = [self.unit()]
        while True:
            t = self.peek()
            if t is None or t[0] != ".":
                if len(steps) == 1 and isinstance(steps[0], Program):
                    return steps[0]  # "( X )" is X
                return Program(steps=steps)
            self.pos += 1
            steps.append(self.unit())

    def unit(self):
        t = self.peek()
        if t is None:
            self.fail("expected a function call")
        if t[0] == "call":
            self.pos += 1
            return t[1]
        if t[0] == "(":
            self.pos += 1
            inner = self.expr()
            t = self.peek()
            if t is None or t[0] != ")":
                self.fail("unclosed '(' in program")
            self.pos += 1
            return inner
        self.fail(f"unexpected {t[0]!r} in program")


def parse_program(text: str) -> Program:
    """Parse program text into its tree form; raises ParseError on any
    malformed input."""
    if not text.strip():
        raise ParseError([error(E_BAD_BRANCH, "empty program", 0, 0)])
    lexer = _Lexer(text)
    parser = _ProgParser(lexer.tokens, len(text))
    prog = parser.expr()
    if parser.peek() is not None:
        parser.fail("trailing tokens after a complete program")
    return prog
