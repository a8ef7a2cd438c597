"""Reverse translation: the supported SPARQL subset and KoPL-style programs
back into query ASTs."""

from .kopl import parse_kopl
from .sparql import parse_sparql

__all__ = ["parse_kopl", "parse_sparql"]
