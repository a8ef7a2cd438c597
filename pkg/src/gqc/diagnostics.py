"""Diagnostics and the exception hierarchy shared by every pipeline stage.

All parsers, validators and emitters report problems as :class:`Diagnostic`
records with a stable ``code``.  Functions that cannot return partial results
raise a :class:`CompileError` subclass carrying the diagnostics; the CLI maps
each subclass onto a distinct exit code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Stable diagnostic codes.  Tests and downstream tools match on these, never
# on message text.
E_UNBALANCED_MARKER = "E_UNBALANCED_MARKER"
E_UNEXPECTED_TOKEN = "E_UNEXPECTED_TOKEN"
E_EMPTY_PAYLOAD = "E_EMPTY_PAYLOAD"
E_TRAILING_INPUT = "E_TRAILING_INPUT"

E_TYPE_MISMATCH = "E_TYPE_MISMATCH"
E_BAD_AGGREGATE = "E_BAD_AGGREGATE"
E_BAD_COUNT = "E_BAD_COUNT"
E_EMPTY_NAME = "E_EMPTY_NAME"

E_UNSUPPORTED = "E_UNSUPPORTED"
E_PREDICATE_COLLISION = "E_PREDICATE_COLLISION"

E_OUT_OF_DIALECT = "E_OUT_OF_DIALECT"
E_UNKNOWN_PREDICATE = "E_UNKNOWN_PREDICATE"
E_UNKNOWN_FUNCTION = "E_UNKNOWN_FUNCTION"
E_ARITY = "E_ARITY"
E_BAD_BRANCH = "E_BAD_BRANCH"

E_DUP_ID = "E_DUP_ID"
E_DANGLING_TARGET = "E_DANGLING_TARGET"
E_BAD_VALUE = "E_BAD_VALUE"

E_EVAL_UNSUPPORTED = "E_EVAL_UNSUPPORTED"
E_RUNTIME_TYPE = "E_RUNTIME_TYPE"


@dataclass(frozen=True)
class Diagnostic:
    """One reported problem.

    ``start``/``end`` are 0-based character offsets into the offending input;
    diagnostics produced from an AST (no source text) use an empty span.
    """

    code: str
    message: str
    start: int = 0
    end: int = 0
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.code} [{self.start}:{self.end}] {self.message}"


class CompileError(Exception):
    """Base for all toolkit errors; carries the diagnostics that caused it."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "error")


class ParseError(CompileError):
    """Lexical or syntactic failure in IR, SPARQL, KoPL or graph input."""


class ValidationError(CompileError):
    """Structurally complete input that violates semantic well-formedness."""


class UnsupportedError(CompileError):
    """Construct valid in the IR but not expressible in the requested target."""


class GraphError(CompileError):
    """Graph document that violates the property-graph invariants."""


def error(code: str, message: str, start: int = 0, end: int = 0) -> Diagnostic:
    return Diagnostic(code=code, message=message, start=start, end=end)
