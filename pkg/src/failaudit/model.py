"""Language-neutral structural view of one source file.

The parser backends reduce a file to flat site lists (functions, exception
handlers, calls, conditionals, returns, loops, fallback-default expressions)
that the rule engine queries. Every site carries an exact 1-based line
number; models are immutable once built and safe to share across workers.

``mode`` records parse provenance: ``full_parse`` when the language grammar
(or structural pass) accepted the file, ``lexical_fallback`` when sites were
recovered by keyword scanning. Lexical models keep exact line numbers but may
lack nesting relations, and the rule engine runs a reduced trigger set on
them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from failaudit.languages import detect_language

FULL_PARSE = "full_parse"
LEXICAL_FALLBACK = "lexical_fallback"

# Breadth of the caught exception set.
BREADTH_BARE = "bare"
BREADTH_BROAD = "broad"
BREADTH_NARROW = "narrow"

# How a handler body disposes of the caught failure.
BODY_EMPTY = "empty"
BODY_LOG_ONLY = "log_only"
BODY_RETURNS_VALUE = "returns_value"
BODY_RERAISES = "reraises"
BODY_OTHER = "other"


class UnreadableContentError(Exception):
    """Raised for content the scanner cannot treat as text (file is skipped)."""


@dataclass(frozen=True)
class SourceFile:
    file_id: str
    relative_path: str
    language: str
    content: str
    line_count: int

    @classmethod
    def from_content(
        cls, relative_path: str, content: str, file_id: str | None = None
    ) -> "SourceFile":
        return cls(
            file_id=file_id if file_id is not None else relative_path,
            relative_path=relative_path,
            language=detect_language(relative_path),
            content=content,
            line_count=len(content.splitlines()),
        )

    @classmethod
    def from_bytes(
        cls, relative_path: str, data: bytes, file_id: str | None = None
    ) -> "SourceFile":
        """Decode as UTF-8 with replacement; reject binary blobs outright."""
        if b"\x00" in data:
            raise UnreadableContentError(f"{relative_path}: binary or undecodable content")
        return cls.from_content(relative_path, data.decode("utf-8", errors="replace"), file_id)

    def line(self, number: int) -> str:
        """Return the 1-based source line, or '' when out of range."""
        lines = self.content.splitlines()
        if 1 <= number <= len(lines):
            return lines[number - 1]
        return ""

    def span_text(self, start: int, end: int) -> str:
        lines = self.content.splitlines()
        return "\n".join(lines[max(start - 1, 0) : end])


@dataclass(frozen=True)
class FunctionUnit:
    name: str
    start_line: int
    end_line: int
    is_startup_like: bool
    is_test_like: bool
    decorator_names: tuple[str, ...] = ()
    handler_indices: tuple[int, ...] = ()
    return_indices: tuple[int, ...] = ()
    call_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class HandlerBlock:
    line: int
    caught_breadth: str
    body_kind: str
    returned_expression: str | None = None
    # Guarded region (the try body) and the handler's own body span.
    guard_start: int = 0
    guard_end: int = 0
    body_start: int = 0
    body_end: int = 0
    function_index: int | None = None


@dataclass(frozen=True)
class CallSite:
    line: int
    callee: str
    end_line: int = 0
    arg_count: int = 0
    temperature: float | None = None
    has_default_arg: bool = False
    awaited: bool = False
    value_discarded: bool = False
    then_without_catch: bool = False
    function_index: int | None = None
    # Innermost try whose handlers guard this call, and innermost handler
    # body containing it.
    guard_handler_indices: tuple[int, ...] = ()
    handler_index: int | None = None


@dataclass(frozen=True)
class ConditionSite:
    line: int
    end_line: int
    test_text: str
    has_early_exit: bool = False
    function_index: int | None = None


@dataclass(frozen=True)
class ReturnSite:
    line: int
    expression: str | None
    is_none: bool
    handler_index: int | None = None
    in_error_branch: bool = False
    function_index: int | None = None


@dataclass(frozen=True)
class LoopSite:
    line: int
    end_line: int
    header_text: str
    function_index: int | None = None


# Sub-pattern kinds for fallback-default expressions.
FB_NULL_COALESCING = "null_coalescing"
FB_OR_DEFAULT = "or_default"
FB_GET_WITH_DEFAULT = "get_with_default"
FB_HANDLER_DEFAULT_ASSIGN = "handler_default_assign"


@dataclass(frozen=True)
class FallbackSite:
    line: int
    kind: str
    text: str
    function_index: int | None = None


@dataclass
class SyntaxModel:
    file: SourceFile
    mode: str
    functions: list[FunctionUnit] = field(default_factory=list)
    handlers: list[HandlerBlock] = field(default_factory=list)
    calls: list[CallSite] = field(default_factory=list)
    conditionals: list[ConditionSite] = field(default_factory=list)
    returns: list[ReturnSite] = field(default_factory=list)
    loops: list[LoopSite] = field(default_factory=list)
    fallbacks: list[FallbackSite] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "file_id": self.file.file_id,
            "language": self.file.language,
            "line_count": self.file.line_count,
            "mode": self.mode,
            "functions": [asdict(f) for f in self.functions],
            "handlers": [asdict(h) for h in self.handlers],
            "calls": [asdict(c) for c in self.calls],
            "conditionals": [asdict(c) for c in self.conditionals],
            "returns": [asdict(r) for r in self.returns],
            "loops": [asdict(x) for x in self.loops],
            "fallbacks": [asdict(x) for x in self.fallbacks],
        }

    def serialize(self) -> str:
        """Deterministic serialized form (identical models are bit-identical)."""
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    def function_at(self, index: int | None) -> FunctionUnit | None:
        if index is None:
            return None
        return self.functions[index]


_SITE_KINDS = ("functions", "handlers", "calls", "conditionals", "returns", "loops", "fallbacks")


def query_sites(model: SyntaxModel, kind: str, predicate=None) -> list:
    """Matching sites of one kind in ascending line order.

    ``kind`` is one of functions/handlers/calls/conditionals/returns/loops/
    fallbacks; ``predicate`` filters individual sites.
    """
    if kind not in _SITE_KINDS:
        raise ValueError(f"unknown site kind {kind!r}")
    sites = getattr(model, kind)
    if predicate is not None:
        sites = [s for s in sites if predicate(s)]
    else:
        sites = list(sites)
    key = (lambda s: s.start_line) if kind == "functions" else (lambda s: s.line)
    return sorted(sites, key=key)
