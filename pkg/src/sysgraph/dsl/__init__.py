from .diagnostics import Diagnostic, Span
from .parser import (
    Composition,
    EmbedDecl,
    Model,
    SourceUnit,
    load_model,
    parse_model,
    parse_source,
)
from .printer import print_graph, print_model
from .validate import validate_graph

__all__ = [
    "Composition",
    "Diagnostic",
    "EmbedDecl",
    "Model",
    "SourceUnit",
    "Span",
    "load_model",
    "parse_model",
    "parse_source",
    "print_graph",
    "print_model",
    "validate_graph",
]
