"""gqc: a compiler toolkit for a natural-language-like graph query IR.

The IR reads like constrained English with typed marker tokens.  This
package parses it into a typed AST, validates and normalizes the tree,
compiles it to SPARQL, Cypher, KoPL-style programs and lambda-DCS,
translates the SPARQL subset and KoPL programs back, and interprets queries
directly over an in-memory property graph as a semantics oracle.
"""

from . import ast
from .ast import normalize, validate
from .codegen import TargetDialect, emit
from .codegen.cypher import emit_cypher
from .codegen.kopl import emit_kopl
from .codegen.lambda_dcs import emit_lambda_dcs
from .codegen.sparql import emit_sparql
from .diagnostics import (
    CompileError,
    Diagnostic,
    GraphError,
    ParseError,
    UnsupportedError,
    ValidationError,
)
from .evaluator import Answer, interpret, run_kopl
from .generate import gen_ast, gen_graph
from .graphstore import PropertyGraph, load_graph, validate_graph
from .mapping import DEFAULT_MAPPING, SchemaMapping, load_mapping
from .reverse import parse_kopl, parse_sparql
from .syntax import parse_ir, parse_text, print_ir, tokenize
from .values import Cop, Value, VType

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "CompileError",
    "Cop",
    "DEFAULT_MAPPING",
    "Diagnostic",
    "GraphError",
    "ParseError",
    "PropertyGraph",
    "SchemaMapping",
    "TargetDialect",
    "UnsupportedError",
    "ValidationError",
    "Value",
    "VType",
    "ast",
    "emit",
    "emit_cypher",
    "emit_kopl",
    "emit_lambda_dcs",
    "emit_sparql",
    "gen_ast",
    "gen_graph",
    "interpret",
    "load_graph",
    "load_mapping",
    "normalize",
    "parse_ir",
    "parse_kopl",
    "parse_sparql",
    "parse_text",
    "print_ir",
    "run_kopl",
    "tokenize",
    "validate",
    "validate_graph",
]
