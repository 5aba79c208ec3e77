"""Keyword/token fallback extraction for files the grammar pass rejects.

Recovers handler, return, call, conditional and loop sites from raw lines.
Nesting relations are approximate (indent-based for Python, brace-counted
for the JS family) but every reported site points at a real token on its
exact line, and comment/string content is blanked before scanning so no
phantom sites come from prose.

The rule engine runs a reduced trigger set on lexical models; this module
only has to recover the site kinds those triggers consume.
"""

from __future__ import annotations

import re

from failaudit.languages import PYTHON, is_startup_path, is_test_path
from failaudit.lexicons import Lexicons
from failaudit.model import (
    BODY_EMPTY,
    BODY_LOG_ONLY,
    BODY_OTHER,
    BODY_RERAISES,
    BODY_RETURNS_VALUE,
    BREADTH_BARE,
    BREADTH_BROAD,
    BREADTH_NARROW,
    LEXICAL_FALLBACK,
    CallSite,
    ConditionSite,
    FunctionUnit,
    HandlerBlock,
    LoopSite,
    ReturnSite,
    SourceFile,
    SyntaxModel,
)

_PY_KEYWORDS = frozenset(
    "if elif else for while def class with return yield raise except try lambda "
    "assert del import from and or not in is pass".split()
)
_JS_KEYWORDS = frozenset(
    "if else for while do switch case try catch finally function return throw new "
    "await async class const let var typeof instanceof in of yield delete void".split()
)

_STARTUP_NAMES = frozenset({"main", "init", "initialize", "startup", "bootstrap", "setup"})

_CALL_RE = re.compile(r"([A-Za-z_$][\w$]*(?:\s*[.]\s*[A-Za-z_$][\w$]*)*)\s*\(")
_STRING_RE = re.compile(r"('(?:\\.|[^'\\])*'|\"(?:\\.|[^\"\\])*\")")
_TEMPERATURE_RE = re.compile(r"\btemperature\s*[:=]\s*([0-9]*\.?[0-9]+)")


def _blank_strings(line: str) -> str:
    return _STRING_RE.sub(lambda m: '"' + " " * (len(m.group(0)) - 2) + '"', line)


def _clean_lines(content: str, language: str) -> list[str]:
    """Blank comments and string bodies, preserving line count and columns."""
    lines = content.splitlines()
    cleaned: list[str] = []
    if language == PYTHON:
        in_triple: str | None = None
        for line in lines:
            out = line
            if in_triple:
                end = out.find(in_triple)
                if end == -1:
                    cleaned.append("")
                    continue
                out = " " * (end + 3) + out[end + 3 :]
                in_triple = None
            out = _blank_strings(out)
            for quote in ('"""', "'''"):
                start = out.find(quote)
                if start != -1:
                    end = out.find(quote, start + 3)
                    if end == -1:
                        out = out[:start]
                        in_triple = quote
                    else:
                        out = out[:start] + " " * (end + 3 - start) + out[end + 3 :]
            hash_pos = out.find("#")
            if hash_pos != -1:
                out = out[:hash_pos]
            cleaned.append(out)
        return cleaned

    in_block = False
    for line in lines:
        out = line
        if in_block:
            end = out.find("*/")
            if end == -1:
                cleaned.append("")
                continue
            out = " " * (end + 2) + out[end + 2 :]
            in_block = False
        out = _blank_strings(out)
        out = re.sub(r"`[^`]*`", "``", out)
        while True:
            start = out.find("/*")
            if start == -1:
                break
            end = out.find("*/", start + 2)
            if end == -1:
                out = out[:start]
                in_block = True
                break
            out = out[:start] + " " * (end + 2 - start) + out[end + 2 :]
        slash = out.find("//")
        if slash != -1:
            out = out[:slash]
        cleaned.append(out)
    return cleaned


def parse_lexical(file: SourceFile, lexicons: Lexicons) -> SyntaxModel:
    model = SyntaxModel(file=file, mode=LEXICAL_FALLBACK)
    lines = _clean_lines(file.content, file.language)
    if file.language == PYTHON:
        _PythonScan(file, lexicons, lines, model).run()
    else:
        _JsScan(file, lexicons, lines, model).run()
    return model


def _indent(line: str) -> int:
    return len(line) - len(line.lstrip(" \t"))


class _PythonScan:
    def __init__(self, file: SourceFile, lexicons: Lexicons, lines: list[str], model: SyntaxModel):
        self.file = file
        self.lex = lexicons
        self.lines = lines
        self.model = model
        self.file_test_like = is_test_path(file.relative_path)
        self.file_startup_like = is_startup_path(file.relative_path)

    def run(self) -> None:
        self._scan_functions()
        for number, line in enumerate(self.lines, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            m = re.match(r"except\b\s*([^:]*)(?::\s*(.*))?$", stripped)
            if m:
                self._handler(number, line, m.group(1) or "", m.group(2) or "")
            m = re.match(r"return\b\s*(.*)$", stripped)
            if m:
                expr = m.group(1).strip() or None
                self.model.returns.append(
                    ReturnSite(
                        line=number,
                        expression=expr,
                        is_none=expr == "None",
                        function_index=self._function_at(number),
                    )
                )
            m = re.match(r"(?:if|elif)\b(.*?):?\s*$", stripped)
            if m:
                self.model.conditionals.append(
                    ConditionSite(
                        line=number,
                        end_line=number,
                        test_text=m.group(1).strip(),
                        function_index=self._function_at(number),
                    )
                )
            m = re.match(r"(?:for|while)\b(.*?):?\s*$", stripped)
            if m:
                self.model.loops.append(
                    LoopSite(
                        line=number,
                        end_line=number,
                        header_text=stripped.rstrip(":"),
                        function_index=self._function_at(number),
                    )
                )
            for call in _CALL_RE.finditer(line):
                callee = re.sub(r"\s+", "", call.group(1))
                head = callee.split(".", 1)[0]
                if head in _PY_KEYWORDS:
                    continue
                temp = _TEMPERATURE_RE.search(line)
                self.model.calls.append(
                    CallSite(
                        line=number,
                        callee=callee,
                        end_line=number,
                        temperature=float(temp.group(1)) if temp else None,
                        function_index=self._function_at(number),
                    )
                )

    def _scan_functions(self) -> None:
        for number, line in enumerate(self.lines, start=1):
            m = re.match(r"(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)", line)
            if not m:
                continue
            indent = len(m.group(1))
            end = number
            for later in range(number + 1, len(self.lines) + 1):
                text = self.lines[later - 1]
                if text.strip() and _indent(text) <= indent:
                    break
                if text.strip():
                    end = later
            name = m.group(2)
            normalized = name.strip("_").lower()
            self.model.functions.append(
                FunctionUnit(
                    name=name,
                    start_line=number,
                    end_line=end,
                    is_startup_like=normalized in _STARTUP_NAMES or self.file_startup_like,
                    is_test_like=self.file_test_like or name.lower().startswith("test"),
                )
            )

    def _function_at(self, line: int) -> int | None:
        best: int | None = None
        for idx, fn in enumerate(self.model.functions):
            if fn.start_line <= line <= fn.end_line:
                if best is None or fn.start_line >= self.model.functions[best].start_line:
                    best = idx
        return best

    def _handler(self, number: int, line: str, clause: str, suffix: str) -> None:
        clause = clause.strip()
        if not clause:
            breadth = BREADTH_BARE
        elif re.search(r"\b(Exception|BaseException)\b", clause):
            breadth = BREADTH_BROAD
        else:
            breadth = BREADTH_NARROW
        indent = _indent(line)
        body_lines: list[str] = [suffix] if suffix.strip() else []
        end = number
        for later in range(number + 1, len(self.lines) + 1):
            text = self.lines[later - 1]
            if not text.strip():
                continue
            if _indent(text) <= indent:
                break
            body_lines.append(text.strip())
            end = later
        body_kind, returned = self._classify(body_lines)
        self.model.handlers.append(
            HandlerBlock(
                line=number,
                caught_breadth=breadth,
                body_kind=body_kind,
                returned_expression=returned,
                guard_start=number,
                guard_end=number,
                body_start=number,
                body_end=end,
                function_index=self._function_at(number),
            )
        )

    def _classify(self, body_lines: list[str]) -> tuple[str, str | None]:
        for text in body_lines:
            if re.match(r"raise\b", text):
                return BODY_RERAISES, None
            m = re.match(r"return\b\s*(.*)$", text)
            if m:
                return BODY_RETURNS_VALUE, m.group(1).strip() or None
        meaningful = [t for t in body_lines if t and t not in ("pass", "...")]
        if not meaningful:
            return BODY_EMPTY, None
        log_like = True
        for text in meaningful:
            m = _CALL_RE.match(text)
            if not (m and self.lex.match("logging", m.group(1))):
                log_like = False
                break
        if log_like:
            return BODY_LOG_ONLY, None
        return BODY_OTHER, None


class _JsScan:
    def __init__(self, file: SourceFile, lexicons: Lexicons, lines: list[str], model: SyntaxModel):
        self.file = file
        self.lex = lexicons
        self.lines = lines
        self.model = model
        self.file_test_like = is_test_path(file.relative_path)
        self.file_startup_like = is_startup_path(file.relative_path)

    def run(self) -> None:
        self._scan_functions()
        for number, line in enumerate(self.lines, start=1):
            for m in re.finditer(r"(?<![.\w])catch\b\s*(\()?", line):
                breadth = BREADTH_BROAD if m.group(1) else BREADTH_BARE
                body_kind, returned, end = self._classify_block(number, m.end())
                self.model.handlers.append(
                    HandlerBlock(
                        line=number,
                        caught_breadth=breadth,
                        body_kind=body_kind,
                        returned_expression=returned,
                        guard_start=number,
                        guard_end=number,
                        body_start=number,
                        body_end=end,
                        function_index=self._function_at(number),
                    )
                )
            m = re.search(r"(?<![.\w])return\b\s*([^;]*)", line)
            if m:
                expr = m.group(1).strip() or None
                self.model.returns.append(
                    ReturnSite(
                        line=number,
                        expression=expr,
                        is_none=expr in ("null", "undefined"),
                        function_index=self._function_at(number),
                    )
                )
            m = re.search(r"(?<![.\w])(?:if|switch)\s*\(([^)]*)", line)
            if m:
                self.model.conditionals.append(
                    ConditionSite(
                        line=number,
                        end_line=number,
                        test_text=m.group(1),
                        function_index=self._function_at(number),
                    )
                )
            m = re.search(r"(?<![.\w])(?:for|while)\s*\(([^)]*)", line)
            if m:
                self.model.loops.append(
                    LoopSite(
                        line=number,
                        end_line=number,
                        header_text=m.group(0),
                        function_index=self._function_at(number),
                    )
                )
            for call in _CALL_RE.finditer(line):
                callee = re.sub(r"\s+", "", call.group(1))
                head = callee.split(".", 1)[0]
                if head in _JS_KEYWORDS:
                    continue
                temp = _TEMPERATURE_RE.search(line)
                self.model.calls.append(
                    CallSite(
                        line=number,
                        callee=callee,
                        end_line=number,
                        temperature=float(temp.group(1)) if temp else None,
                        function_index=self._function_at(number),
                    )
                )

    def _scan_functions(self) -> None:
        pattern = re.compile(
            r"(?:function\s+([A-Za-z_$][\w$]*))"
            r"|(?:([A-Za-z_$][\w$]*)\s*[=:]\s*(?:async\s+)?(?:function\b|\([^)]*\)\s*=>))"
        )
        for number, line in enumerate(self.lines, start=1):
            for m in pattern.finditer(line):
                name = m.group(1) or m.group(2) or "<anonymous>"
                end = self._balance_end(number)
                normalized = name.strip("_$").lower()
                self.model.functions.append(
                    FunctionUnit(
                        name=name,
                        start_line=number,
                        end_line=end,
                        is_startup_like=normalized in _STARTUP_NAMES or self.file_startup_like,
                        is_test_like=self.file_test_like or name.lower().startswith("test"),
                    )
                )

    def _balance_end(self, start: int) -> int:
        depth = 0
        opened = False
        for number in range(start, len(self.lines) + 1):
            for ch in self.lines[number - 1]:
                if ch == "{":
                    depth += 1
                    opened = True
                elif ch == "}":
                    depth -= 1
            if opened and depth <= 0:
                return number
        return len(self.lines)

    def _function_at(self, line: int) -> int | None:
        best: int | None = None
        for idx, fn in enumerate(self.model.functions):
            if fn.start_line <= line <= fn.end_line:
                if best is None or fn.start_line >= self.model.functions[best].start_line:
                    best = idx
        return best

    def _classify_block(self, start_line: int, col: int) -> tuple[str, str | None, int]:
        """Classify the catch body that opens at/after (start_line, col)."""
        depth = 0
        opened = False
        statements: list[str] = []
        buffer = ""
        end = start_line
        for number in range(start_line, min(start_line + 60, len(self.lines)) + 1):
            text = self.lines[number - 1]
            if number == start_line:
                text = text[col:]
            for ch in text:
                if ch == "{":
                    depth += 1
                    opened = True
                    continue
                if ch == "}":
                    depth -= 1
                    if opened and depth <= 0:
                        break
                    continue
                if opened and depth == 1:
                    if ch == ";":
                        statements.append(buffer.strip())
                        buffer = ""
                    else:
                        buffer += ch
            end = number
            if opened:
                statements.append(buffer.strip())
                buffer = ""
            if opened and depth <= 0:
                break
        parts = [s for s in statements if s]
        for stmt in parts:
            if re.match(r"throw\b", stmt):
                return BODY_RERAISES, None, end
            m = re.match(r"return\b\s*(.*)$", stmt)
            if m:
                return BODY_RETURNS_VALUE, m.group(1).strip() or None, end
        if not parts:
            return BODY_EMPTY, None, end
        log_like = all(
            (m := _CALL_RE.match(stmt)) and self.lex.match("logging", m.group(1))
            for stmt in parts
        )
        if log_like:
            return BODY_LOG_ONLY, None, end
        return BODY_OTHER, None, end
