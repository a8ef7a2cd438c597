"""Command-line interface.

Subcommands: ``parse`` (IR -> AST dump), ``check`` (parse + validate),
``compile`` (IR -> target code), ``transpile`` (between IR, SPARQL and
KoPL), ``eval`` (run a query against a graph JSON file) and ``gen``
(deterministic random IR for corpus building).

Input comes from a positional file path or standard input, so the tool
composes as a filter.  ``parse --format json`` output is accepted back by
``compile``/``eval`` in place of IR text.

Exit codes: 0 success, 1 lex/parse error, 2 validation error, 3 unsupported
construct, 4 I/O or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import ast, syntax
from .codegen import TargetDialect, emit
from .diagnostics import (
    CompileError,
    GraphError,
    ParseError,
    UnsupportedError,
    ValidationError,
)
from .evaluator import Answer, interpret, run_kopl
from .generate import gen_ast
from .graphstore import load_graph
from .mapping import DEFAULT_MAPPING, SchemaMapping, load_mapping
from .reverse import parse_kopl, parse_sparql

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_UNSUPPORTED = 3
EXIT_CONFIG = 4


class _CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _CliError(f"cannot read {path}: {exc}") from None


def _write_output(text: str, path: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _CliError(f"cannot write {path}: {exc}") from None


def _load_mapping(path: str | None) -> SchemaMapping:
    if path is None:
        return DEFAULT_MAPPING
    try:
        return load_mapping(_read_input(path))
    except (ValueError, json.JSONDecodeError) as exc:
        raise _CliError(f"bad mapping file: {exc}") from None


def _query_from_text(text: str) -> ast.Query:
    """IR text, or the JSON AST form produced by ``parse --format json``."""
    if text.lstrip().startswith("{"):
        try:
            node = ast.from_json(json.loads(text))
        except (ValueError, json.JSONDecodeError) as exc:
            raise _CliError(f"bad AST JSON: {exc}", EXIT_PARSE) from None
        if not isinstance(node, ast.Query):
            raise _CliError("AST JSON does not hold a query", EXIT_PARSE)
        return node
    return syntax.parse_text(text)


def _checked(query: ast.Query) -> ast.Query:
    diags = ast.validate(query)
    if diags:
        raise ValidationError(diags)
    return query


def _parse_from(source: str, text: str) -> ast.Query:
    if source == "ir":
        return _query_from_text(text)
    if source == "sparql":
        return parse_sparql(text)
    if source == "kopl":
        return parse_kopl(text)
    raise _CliError(f"unknown source dialect {source!r}")


def _answer_json(answer: Answer) -> dict:
    out: dict = {"kind": answer.kind}
    if answer.entities is not None:
        out["entities"] = sorted(answer.entities)
    if answer.count is not None:
        out["count"] = answer.count
    if answer.boolean is not None:
        out["boolean"] = answer.boolean
    if answer.values is not None:
        out["values"] = [{"type": v.vtype.value, "text": v.raw} for v in answer.values]
    if answer.relations is not None:
        out["relations"] = sorted(answer.relations)
    return out


def _cmd_parse(args) -> None:
    query = _query_from_text(_read_input(args.input))
    if args.format == "json":
        _write_output(json.dumps(ast.to_json(query), ensure_ascii=False, indent=2), args.output)
    else:
        _write_output(ast.dump_tree(query), args.output)


def _cmd_check(args) -> None:
    query = _query_from_text(_read_input(args.input))
    _checked(query)
    _write_output("ok", args.output)


def _cmd_compile(args) -> None:
    query = _checked(_query_from_text(_read_input(args.input)))
    mapping = _load_mapping(args.mapping)
    code = emit(query, TargetDialect(args.to), mapping)
    if args.format == "json":
        _write_output(json.dumps({"dialect": args.to, "code": code}, ensure_ascii=False), args.output)
    else:
        _write_output(code, args.output)


def _cmd_transpile(args) -> None:
    query = _checked(_parse_from(args.source, _read_input(args.input)))
    mapping = _load_mapping(args.mapping)
    if args.to == "ir":
        _write_output(syntax.print_ir(query), args.output)
    else:
        _write_output(emit(query, TargetDialect(args.to), mapping), args.output)


def _cmd_eval(args) -> None:
    graph = load_graph(_read_input(args.graph))
    text = _read_input(args.input)
    if args.source == "kopl":
        answer = run_kopl(text, graph)
    else:
        answer = interpret(_checked(_query_from_text(text)), graph)
    if args.format == "json":
        _write_output(json.dumps(_answer_json(answer), ensure_ascii=False), args.output)
    else:
        _write_output(answer.render(), args.output)


def _cmd_gen(args) -> None:
    if args.depth < 1:
        raise _CliError("--depth must be >= 1")
    if args.count < 1:
        raise _CliError("--count must be >= 1")
    lines = [syntax.print_ir(gen_ast(args.seed + i, args.depth)) for i in range(args.count)]
    _write_output("\n".join(lines), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gqc", description="Graph query IR compiler toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_format=True):
        p.add_argument("input", nargs="?", default=None, help="input file (default: standard input)")
        p.add_argument("-o", "--output", default=None, help="write output to a file instead of stdout")
        if with_format:
            p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("parse", help="parse IR text into an AST dump")
    add_common(p)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("check", help="parse and validate IR text")
    add_common(p, with_format=False)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("compile", help="compile IR to a target language")
    p.add_argument("--to", required=True, choices=[d.value for d in TargetDialect])
    p.add_argument("--mapping", default=None, help="schema mapping JSON file")
    add_common(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("transpile", help="translate between dialects through the IR")
    p.add_argument("--from", dest="source", required=True, choices=["ir", "sparql", "kopl"])
    p.add_argument("--to", required=True, choices=["ir"] + [d.value for d in TargetDialect])
    p.add_argument("--mapping", default=None, help="schema mapping JSON file")
    add_common(p, with_format=False)
    p.set_defaults(func=_cmd_transpile)

    p = sub.add_parser("eval", help="evaluate a query against a graph JSON file")
    p.add_argument("--graph", required=True, help="property graph JSON file")
    p.add_argument("--from", dest="source", default="ir", choices=["ir", "kopl"])
    add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen", help="generate deterministic random IR queries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--count", type=int, default=1)
    add_common(p, with_format=False)
    p.set_defaults(func=_cmd_gen)
    return parser


def _report(err: CompileError) -> None:
    for d in err.diagnostics:
        print(f"error: {d}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ParseError as exc:
        _report(exc)
        return EXIT_PARSE
    except (ValidationError, GraphError) as exc:
        _report(exc)
        return EXIT_VALIDATION
    except UnsupportedError as exc:
        _report(exc)
        return EXIT_UNSUPPORTED
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
