"""Code generation backends.

Each emitter walks a validated, normalized query AST and produces
deterministic target text.  :func:`emit` dispatches on
:class:`TargetDialect`.
"""

from __future__ import annotations

import enum

from .. import ast
from ..diagnostics import ValidationError
from ..mapping import DEFAULT_MAPPING, SchemaMapping


class TargetDialect(enum.Enum):
    SPARQL = "sparql"
    CYPHER = "cypher"
    KOPL = "kopl"
    LAMBDA_DCS = "lambda_dcs"


def check_valid(query: ast.Query) -> ast.Query:
    """Normalize and reject semantically ill-formed input."""
    diags = ast.validate(query)
    if diags:
        raise ValidationError(diags)
    return ast.normalize(query)


def emit(query: ast.Query, dialect: TargetDialect, mapping: SchemaMapping = DEFAULT_MAPPING) -> str:
    from . import cypher, kopl, lambda_dcs, sparql

    if dialect is TargetDialect.SPARQL:
        return sparql.emit_sparql(query, mapping)
    if dialect is TargetDialect.CYPHER:
        return cypher.emit_cypher(query, mapping)
    if dialect is TargetDialect.KOPL:
        return kopl.emit_kopl(query, mapping)
    if dialect is TargetDialect.LAMBDA_DCS:
        return lambda_dcs.emit_lambda_dcs(query, mapping)
    raise ValueError(f"unknown dialect {dialect!r}")
