"""Two-tier source parsing: grammar pass with lexical fallback."""

from __future__ import annotations

from failaudit.languages import PYTHON, UNSUPPORTED
from failaudit.lexicons import DEFAULT, Lexicons
from failaudit.model import SourceFile, SyntaxModel, query_sites
from failaudit.parsing.jsts_backend import parse_jsts
from failaudit.parsing.lexical import parse_lexical
from failaudit.parsing.python_backend import parse_python

__all__ = ["parse_source", "query_sites"]


def parse_source(file: SourceFile, lexicons: Lexicons | None = None) -> SyntaxModel:
    """Build the structural model for one supported file.

    Runs the language's grammar pass first; when that rejects the content the
    file drops to keyword scanning instead of being refused, so a scan is
    total over messy input.
    """
    if file.language == UNSUPPORTED:
        raise ValueError(f"{file.relative_path}: unsupported language")
    lexicons = lexicons or DEFAULT
    if file.language == PYTHON:
        model = parse_python(file, lexicons)
    else:
        model = parse_jsts(file, lexicons)
    if model is None:
        model = parse_lexical(file, lexicons)
    return model
