"""Structural site extraction for JavaScript, TypeScript and JSX/TSX.

No grammar library for these languages is available in this environment, so
the full-parse tier is a structural pass: a tokenizer that understands
strings, template literals, comments and regex literals, followed by a
bracket-matched walk that recovers functions, try/catch handlers, calls,
conditionals, loops and returns with exact line numbers.

The pass reports failure (and the caller drops to keyword scanning) when the
token stream is malformed: unbalanced brackets, mismatched closers, or an
unterminated string/comment. Type annotations, generics and JSX tags flow
through as plain tokens and do not disturb bracket matching.
"""

from __future__ import annotations

from dataclasses import dataclass

from failaudit.languages import is_startup_path, is_test_path
from failaudit.lexicons import Lexicons, split_words
from failaudit.model import (
    BODY_EMPTY,
    BODY_LOG_ONLY,
    BODY_OTHER,
    BODY_RERAISES,
    BODY_RETURNS_VALUE,
    BREADTH_BARE,
    BREADTH_BROAD,
    FB_GET_WITH_DEFAULT,
    FB_NULL_COALESCING,
    FB_OR_DEFAULT,
    FB_HANDLER_DEFAULT_ASSIGN,
    FULL_PARSE,
    CallSite,
    ConditionSite,
    FallbackSite,
    FunctionUnit,
    HandlerBlock,
    LoopSite,
    ReturnSite,
    SourceFile,
    SyntaxModel,
)

_KEYWORDS = frozenset(
    "if else for while do switch case try catch finally function return throw new "
    "await async class const let var typeof instanceof in of yield delete void "
    "import export extends break continue".split()
)

_STARTUP_NAMES = frozenset({"main", "init", "initialize", "startup", "bootstrap", "setup"})

# Tokens after which a '/' starts a regex literal rather than division.
_REGEX_PRECEDERS = frozenset(
    "( [ { , ; : = == === != !== < > <= >= + - * / % && || ?? ! ? => return case "
    "typeof in of instanceof new delete void yield await".split()
)

_LITERAL_OPENERS = frozenset({"{", "["})


@dataclass
class _Token:
    kind: str  # word / num / str / tmpl / regex / punct
    value: str
    line: int


class _TokenizeError(Exception):
    pass


def _tokenize(text: str) -> list[_Token]:
    """Token stream with comments stripped; raises on malformed input."""
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    line = 1
    brace_depth = 0
    template_stack: list[int] = []  # brace depth at each open interpolation

    def prev_significant() -> _Token | None:
        return tokens[-1] if tokens else None

    def scan_template() -> bool:
        """Consume template chars from i; True when interpolation starts."""
        nonlocal i, line
        while i < n:
            ch = text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "\n":
                line += 1
                i += 1
                continue
            if ch == "`":
                i += 1
                tokens.append(_Token("tmpl", "`...`", line))
                return False
            if ch == "$" and i + 1 < n and text[i + 1] == "{":
                i += 2
                return True
            i += 1
        raise _TokenizeError("unterminated template literal")

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            end = text.find("*/", i + 2)
            if end == -1:
                raise _TokenizeError("unterminated block comment")
            line += text.count("\n", i, end)
            i = end + 2
            continue
        if ch in "'\"":
            quote = ch
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == quote:
                    break
                if text[j] == "\n":
                    raise _TokenizeError("unterminated string literal")
                j += 1
            else:
                raise _TokenizeError("unterminated string literal")
            tokens.append(_Token("str", text[i : j + 1], line))
            i = j + 1
            continue
        if ch == "`":
            i += 1
            if scan_template():
                template_stack.append(brace_depth)
                tokens.append(_Token("punct", "{", line))
                brace_depth += 1
            continue
        if ch == "/":
            prev = prev_significant()
            is_regex = prev is None or (
                prev.kind == "punct" and prev.value in _REGEX_PRECEDERS
            ) or (prev.kind == "word" and prev.value in _REGEX_PRECEDERS)
            if is_regex:
                j = i + 1
                in_class = False
                ok = False
                while j < n:
                    c = text[j]
                    if c == "\\":
                        j += 2
                        continue
                    if c == "\n":
                        break
                    if c == "[":
                        in_class = True
                    elif c == "]":
                        in_class = False
                    elif c == "/" and not in_class:
                        ok = True
                        break
                    j += 1
                if ok:
                    j += 1
                    while j < n and text[j].isalpha():
                        j += 1
                    tokens.append(_Token("regex", text[i:j], line))
                    i = j
                    continue
            tokens.append(_Token("punct", "/", line))
            i += 1
            continue
        if ch.isalpha() or ch in "_$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_$"):
                j += 1
            tokens.append(_Token("word", text[i:j], line))
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._"):
                j += 1
            tokens.append(_Token("num", text[i:j], line))
            i = j
            continue
        # multi-char operators that matter structurally
        for op in ("?.", "=>", "??", "||", "&&", "===", "!==", "==", "!="):
            if text.startswith(op, i):
                tokens.append(_Token("punct", op, line))
                i += len(op)
                break
        else:
            if ch == "{":
                brace_depth += 1
            elif ch == "}":
                if template_stack and brace_depth - 1 == template_stack[-1]:
                    template_stack.pop()
                    brace_depth -= 1
                    tokens.append(_Token("punct", "}", line))
                    i += 1
                    if scan_template():
                        template_stack.append(brace_depth)
                        tokens.append(_Token("punct", "{", line))
                        brace_depth += 1
                    continue
                brace_depth -= 1
            tokens.append(_Token("punct", ch, line))
            i += 1
    if template_stack:
        raise _TokenizeError("unterminated template interpolation")
    return tokens


def _match_pairs(tokens: list[_Token]) -> dict[int, int]:
    """Map each opener token index to its closer; raises when unbalanced."""
    pairs: dict[int, int] = {}
    stack: list[tuple[str, int]] = []
    closers = {")": "(", "}": "{", "]": "["}
    for idx, tok in enumerate(tokens):
        if tok.kind != "punct":
            continue
        if tok.value in "([{":
            stack.append((tok.value, idx))
        elif tok.value in ")]}":
            if not stack or stack[-1][0] != closers[tok.value]:
                raise _TokenizeError(f"mismatched {tok.value!r} at line {tok.line}")
            _, open_idx = stack.pop()
            pairs[open_idx] = idx
    if stack:
        raise _TokenizeError("unbalanced brackets at end of file")
    return pairs


def parse_jsts(file: SourceFile, lexicons: Lexicons) -> SyntaxModel | None:
    try:
        tokens = _tokenize(file.content)
        pairs = _match_pairs(tokens)
    except _TokenizeError:
        return None
    builder = _Builder(file, lexicons, tokens, pairs)
    builder.run()
    return builder.model


@dataclass
class _Block:
    tag: str  # function / try / catch / if / loop / class / block
    open_idx: int
    payload: int | None = None  # site index for tagged constructs
    try_id: int | None = None  # for catch: owning try block id


class _Builder:
    def __init__(self, file: SourceFile, lexicons: Lexicons, tokens, pairs):
        self.file = file
        self.lex = lexicons
        self.tokens = tokens
        self.pairs = pairs
        self.openers = {close: open_ for open_, close in pairs.items()}
        self.model = SyntaxModel(file=file, mode=FULL_PARSE)
        self.file_test_like = is_test_path(file.relative_path)
        self.file_startup_like = is_startup_path(file.relative_path)
        self._calls: list[dict] = []
        self._try_spans: list[tuple[int, int]] = []  # try_id -> (start_line, end_line)
        self._handler_tries: list[int | None] = []  # handler idx -> try_id

    # -- small token helpers -------------------------------------------------

    def _next_sig(self, idx: int) -> int | None:
        j = idx + 1
        return j if j < len(self.tokens) else None

    def _peek_value(self, idx: int) -> str | None:
        j = idx + 1
        if j < len(self.tokens):
            return self.tokens[j].value
        return None

    def _span_text(self, start: int, end: int) -> str:
        return " ".join(t.value for t in self.tokens[start:end])

    def _nearby_text(self, idx: int) -> str:
        return self._span_text(max(idx - 3, 0), min(idx + 4, len(self.tokens)))[:80]

    def run(self) -> None:
        tokens = self.tokens
        stack: list[_Block] = []
        pending: tuple | None = None  # applied to the next '{'
        try_close_at: dict[int, int] = {}  # index of a try's closing '}' -> try_id
        try_counter = 0
        i = 0
        while i < len(tokens):
            tok = tokens[i]
            if tok.kind == "punct" and tok.value == "{":
                tag = ("block", None, None)
                if pending is not None:
                    tag = pending
                    pending = None
                stack.append(_Block(tag=tag[0], open_idx=i, payload=tag[1], try_id=tag[2]))
                i += 1
                continue
            if tok.kind == "punct" and tok.value == "}":
                if stack:
                    block = stack.pop()
                    self._close_block(block, i, stack)
                    if block.tag == "try":
                        try_close_at[i] = block.try_id
                i += 1
                continue

            if tok.kind == "word":
                value = tok.value
                prev = tokens[i - 1] if i > 0 else None
                member_access = prev is not None and prev.kind == "punct" and prev.value in (
                    ".", "?.",
                )
                if value == "try" and not member_access:
                    if self._peek_value(i) == "{":
                        pending = ("try", None, try_counter)
                        self._try_spans.append((tok.line, tok.line))
                        try_counter += 1
                    i += 1
                    continue
                if value == "catch" and not member_access:
                    owner = try_close_at.get(i - 1)
                    if owner is not None:
                        i = self._handle_catch(i, owner, stack)
                        continue
                if value == "finally" and not member_access:
                    if self._peek_value(i) == "{":
                        pending = ("block", None, None)
                    i += 1
                    continue
                if value in ("if", "switch") and not member_access:
                    i, pending = self._handle_conditional(i, stack)
                    continue
                if value in ("for", "while") and not member_access:
                    i, pending = self._handle_loop(i, stack)
                    continue
                if value == "do" and not member_access:
                    if self._peek_value(i) == "{":
                        idx = len(self.model.loops)
                        self.model.loops.append(
                            LoopSite(
                                line=tok.line,
                                end_line=tok.line,
                                header_text="do",
                                function_index=self._enclosing_function(stack),
                            )
                        )
                        pending = ("loop", idx, None)
                    i += 1
                    continue
                if value == "function" and not member_access:
                    i, pending = self._handle_function_kw(i, stack)
                    continue
                if value == "class" and not member_access:
                    if self._class_body_ahead(i):
                        pending = ("class", None, None)
                    i += 1
                    continue
                if value == "return" and not member_access:
                    i = self._handle_return(i, stack)
                    continue
                if value not in _KEYWORDS:
                    if self._peek_value(i) == "(":
                        i = self._handle_word_paren(i, stack)
                        continue
                i += 1
                continue

            if tok.kind == "punct":
                if tok.value == "=>":
                    i, maybe_pending = self._handle_arrow(i, stack)
                    if maybe_pending is not None:
                        pending = maybe_pending
                    continue
                if tok.value == "??":
                    self.model.fallbacks.append(
                        FallbackSite(
                            line=tok.line,
                            kind=FB_NULL_COALESCING,
                            text=self._nearby_text(i),
                            function_index=self._enclosing_function(stack),
                        )
                    )
                    i += 1
                    continue
                if tok.value == "||":
                    nxt = self._next_sig(i)
                    if nxt is not None:
                        t = self.tokens[nxt]
                        literalish = t.kind in ("str", "num", "tmpl") or (
                            t.kind == "punct" and t.value in _LITERAL_OPENERS
                        ) or (t.kind == "word" and t.value in ("true", "false", "null", "undefined"))
                        if literalish:
                            self.model.fallbacks.append(
                                FallbackSite(
                                    line=tok.line,
                                    kind=FB_OR_DEFAULT,
                                    text=self._nearby_text(i),
                                    function_index=self._enclosing_function(stack),
                                )
                            )
                    i += 1
                    continue
            i += 1

        self._resolve_guards()
        self._attach_function_site_indices()

    def _class_body_ahead(self, class_idx: int) -> bool:
        """True when a class body brace appears before a terminating ';'."""
        for j in range(class_idx + 1, min(class_idx + 40, len(self.tokens))):
            value = self.tokens[j].value
            if value == "{":
                return True
            if value in (";", ")"):
                return False
        return False

    # -- construct handlers ---------------------------------------------------

    def _enclosing_function(self, stack: list[_Block]) -> int | None:
        for block in reversed(stack):
            if block.tag == "function":
                return block.payload
        return None

    def _enclosing_handler(self, stack: list[_Block]) -> int | None:
        for block in reversed(stack):
            if block.tag == "catch":
                return block.payload
            if block.tag == "function":
                return None
        return None

    def _enclosing_try(self, stack: list[_Block]) -> int | None:
        for block in reversed(stack):
            if block.tag == "try":
                return block.try_id
            if block.tag == "function":
                return None
        return None

    def _enclosing_error_branch(self, stack: list[_Block]) -> bool:
        for block in reversed(stack):
            if block.tag == "if.error":
                return True
            if block.tag == "function":
                return False
        return False

    def _handle_catch(self, i: int, try_id: int, stack: list[_Block]) -> int:
        tok = self.tokens[i]
        j = i + 1
        breadth = BREADTH_BARE
        if j < len(self.tokens) and self.tokens[j].value == "(":
            breadth = BREADTH_BROAD
            j = self.pairs[j] + 1
        if j < len(self.tokens) and self.tokens[j].value == "{":
            body_close = self.pairs[j]
            body_kind, returned = self._classify_catch_body(j + 1, body_close)
            guard_start, guard_end = self._try_spans[try_id]
            index = len(self.model.handlers)
            self.model.handlers.append(
                HandlerBlock(
                    line=tok.line,
                    caught_breadth=breadth,
                    body_kind=body_kind,
                    returned_expression=returned,
                    guard_start=guard_start,
                    guard_end=guard_end,
                    body_start=self.tokens[j].line,
                    body_end=self.tokens[body_close].line,
                    function_index=self._enclosing_function(stack),
                )
            )
            self._handler_tries.append(try_id)
            self._scan_catch_default_assigns(j + 1, body_close, stack)
            stack.append(_Block(tag="catch", open_idx=j, payload=index, try_id=try_id))
            return j + 1
        return j

    def _classify_catch_body(self, start: int, end: int) -> tuple[str, str | None]:
        statements = self._split_statements(start, end)
        returned: str | None = None
        for stmt in statements:
            first = self.tokens[stmt[0]]
            if first.kind == "word" and first.value == "throw":
                return BODY_RERAISES, None
            if first.kind == "word" and first.value == "return":
                expr = self._span_text(stmt[0] + 1, stmt[1]).strip()
                returned = expr or None
                return BODY_RETURNS_VALUE, returned
        if not statements:
            return BODY_EMPTY, None
        if all(self._is_log_statement(s) for s in statements):
            return BODY_LOG_ONLY, None
        return BODY_OTHER, None

    def _split_statements(self, start: int, end: int) -> list[tuple[int, int]]:
        """Top-level (depth 0) statement spans inside a block, ASI-tolerant."""
        spans: list[tuple[int, int]] = []
        depth = 0
        stmt_start: int | None = None
        last_line = None
        for idx in range(start, end):
            tok = self.tokens[idx]
            if tok.kind == "punct" and tok.value in "([{":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")]}":
                depth -= 1
                continue
            if depth > 0:
                continue
            if tok.kind == "punct" and tok.value == ";":
                if stmt_start is not None:
                    spans.append((stmt_start, idx))
                    stmt_start = None
                continue
            if stmt_start is None:
                stmt_start = idx
                last_line = tok.line
            elif tok.line != last_line and tok.kind == "word" and tok.value in (
                "return", "throw", "const", "let", "var", "if", "for", "while", "break",
                "continue",
            ):
                spans.append((stmt_start, idx))
                stmt_start = idx
                last_line = tok.line
        if stmt_start is not None:
            spans.append((stmt_start, end))
        return spans

    def _is_log_statement(self, span: tuple[int, int]) -> bool:
        start, end = span
        chain: list[str] = []
        idx = start
        while idx < end:
            tok = self.tokens[idx]
            if tok.kind == "word":
                chain.append(tok.value)
            elif not (tok.kind == "punct" and tok.value in (".", "?.")):
                break
            idx += 1
        if not chain or idx >= end:
            return False
        opener = self.tokens[idx]
        if not (opener.kind == "punct" and opener.value == "("):
            return False
        return self.lex.match("logging", ".".join(chain))

    def _scan_catch_default_assigns(self, start: int, end: int, stack: list[_Block]) -> None:
        for stmt_start, stmt_end in self._split_statements(start, end):
            idx = stmt_start
            if self.tokens[idx].kind == "word" and self.tokens[idx].value in ("const", "let", "var"):
                idx += 1
            chain_end = idx
            while chain_end < stmt_end and (
                self.tokens[chain_end].kind == "word"
                or (self.tokens[chain_end].kind == "punct" and self.tokens[chain_end].value in (".", "?."))
            ):
                chain_end += 1
            if chain_end == idx or chain_end >= stmt_end:
                continue
            eq = self.tokens[chain_end]
            if not (eq.kind == "punct" and eq.value == "="):
                continue
            rhs_idx = chain_end + 1
            if rhs_idx >= stmt_end:
                continue
            rhs = self.tokens[rhs_idx]
            literalish = rhs.kind in ("str", "num", "tmpl") or (
                rhs.kind == "punct" and rhs.value in _LITERAL_OPENERS
            ) or (rhs.kind == "word" and rhs.value in ("true", "false", "null", "undefined"))
            if literalish:
                self.model.fallbacks.append(
                    FallbackSite(
                        line=self.tokens[stmt_start].line,
                        kind=FB_HANDLER_DEFAULT_ASSIGN,
                        text=self._span_text(stmt_start, min(stmt_end, stmt_start + 10))[:80],
                        function_index=self._enclosing_function(stack),
                    )
                )

    def _handle_conditional(self, i: int, stack: list[_Block]) -> tuple[int, tuple | None]:
        tok = self.tokens[i]
        j = i + 1
        if j >= len(self.tokens) or self.tokens[j].value != "(":
            return i + 1, None
        close = self.pairs[j]
        test_text = self._span_text(j + 1, close)
        idx = len(self.model.conditionals)
        self.model.conditionals.append(
            ConditionSite(
                line=tok.line,
                end_line=self.tokens[close].line,
                test_text=test_text,
                has_early_exit=False,
                function_index=self._enclosing_function(stack),
            )
        )
        after = close + 1
        if after < len(self.tokens) and self.tokens[after].value == "{":
            tag = "if.error" if self.lex.match("error_branch", test_text) else "if"
            return after, (tag, idx, None)
        return after, None

    def _handle_loop(self, i: int, stack: list[_Block]) -> tuple[int, tuple | None]:
        tok = self.tokens[i]
        j = i + 1
        if j >= len(self.tokens) or self.tokens[j].value != "(":
            return i + 1, None
        close = self.pairs[j]
        header = f"{tok.value} {self._span_text(j + 1, close)}"
        idx = len(self.model.loops)
        self.model.loops.append(
            LoopSite(
                line=tok.line,
                end_line=self.tokens[close].line,
                header_text=header,
                function_index=self._enclosing_function(stack),
            )
        )
        after = close + 1
        if after < len(self.tokens) and self.tokens[after].value == "{":
            return after, ("loop", idx, None)
        return after, None

    def _handle_function_kw(self, i: int, stack: list[_Block]) -> tuple[int, tuple | None]:
        tok = self.tokens[i]
        j = i + 1
        if j < len(self.tokens) and self.tokens[j].value == "*":
            j += 1
        name = "<anonymous>"
        if j < len(self.tokens) and self.tokens[j].kind == "word":
            name = self.tokens[j].value
            j += 1
        else:
            owner = self._owner_name(i)
            if owner:
                name = owner
        if j < len(self.tokens) and self.tokens[j].value == "(":
            j = self.pairs[j] + 1
        while j < len(self.tokens) and self.tokens[j].value != "{":
            if self.tokens[j].value in (";", ")"):
                return j, None
            j += 1
        if j >= len(self.tokens):
            return len(self.tokens), None
        idx = self._new_function(name, tok.line)
        return j, ("function", idx, None)

    def _handle_arrow(self, i: int, stack: list[_Block]) -> tuple[int, tuple | None]:
        tok = self.tokens[i]
        after = i + 1
        if after < len(self.tokens) and self.tokens[after].value == "{":
            name = self._owner_name_for_arrow(i)
            idx = self._new_function(name or "<arrow>", tok.line)
            return after, ("function", idx, None)
        return i + 1, None

    def _owner_name_for_arrow(self, arrow_idx: int) -> str | None:
        j = arrow_idx - 1
        if j >= 0 and self.tokens[j].kind == "punct" and self.tokens[j].value == ")":
            open_idx = self.openers.get(j)
            if open_idx is None:
                return None
            j = open_idx - 1
        elif j >= 0 and self.tokens[j].kind == "word":
            j -= 1
        return self._name_before_assign(j)

    def _owner_name(self, construct_idx: int) -> str | None:
        j = construct_idx - 1
        if j >= 0 and self.tokens[j].kind == "word" and self.tokens[j].value == "async":
            j -= 1
        return self._name_before_assign(j)

    def _name_before_assign(self, j: int) -> str | None:
        if j >= 0 and self.tokens[j].kind == "word" and self.tokens[j].value == "async":
            j -= 1
        if j >= 0 and self.tokens[j].kind == "punct" and self.tokens[j].value in ("=", ":"):
            k = j - 1
            if k >= 0 and self.tokens[k].kind == "word":
                return self.tokens[k].value
        return None

    def _new_function(self, name: str, line: int) -> int:
        normalized = name.strip("_$").lower()
        idx = len(self.model.functions)
        self.model.functions.append(
            FunctionUnit(
                name=name,
                start_line=line,
                end_line=line,  # fixed when the block closes
                is_startup_like=normalized in _STARTUP_NAMES or self.file_startup_like,
                is_test_like=self.file_test_like or name.lower().startswith("test"),
            )
        )
        return idx

    def _handle_return(self, i: int, stack: list[_Block]) -> int:
        tok = self.tokens[i]
        j = i + 1
        depth = 0
        expr_tokens: list[str] = []
        current_line = tok.line
        continuers = ("+", "-", "*", "/", "&&", "||", "??", ",", ".", "?.", "(", "[", "{",
                      "=>", "=", ":", "?")
        while j < len(self.tokens):
            t = self.tokens[j]
            if t.kind == "punct" and t.value in "([{":
                depth += 1
            elif t.kind == "punct" and t.value in ")]}":
                if depth == 0:
                    break
                depth -= 1
            if depth == 0 and t.kind == "punct" and t.value == ";":
                break
            if depth == 0 and t.line != current_line:
                # ASI: stop at line end unless the expression clearly continues
                if not expr_tokens or expr_tokens[-1] not in continuers:
                    break
            expr_tokens.append(t.value)
            current_line = t.line
            j += 1
        expression = " ".join(expr_tokens).strip() or None
        is_none = expression in ("null", "undefined")
        self.model.returns.append(
            ReturnSite(
                line=tok.line,
                expression=expression,
                is_none=is_none,
                handler_index=self._enclosing_handler(stack),
                in_error_branch=self._enclosing_error_branch(stack),
                function_index=self._enclosing_function(stack),
            )
        )
        return i + 1

    _METHOD_MODIFIERS = frozenset(
        {"static", "async", "get", "set", "public", "private", "protected",
         "readonly", "override"}
    )

    def _handle_word_paren(self, i: int, stack: list[_Block]) -> int:
        """A word followed by '(': either a call or a class method definition."""
        open_idx = i + 1
        close_idx = self.pairs[open_idx]
        after = close_idx + 1
        in_class = bool(stack) and stack[-1].tag == "class"
        starts_statement = self._starts_statement(i)
        if in_class and after < len(self.tokens):
            j = i - 1
            while j >= 0 and self.tokens[j].kind == "word" and (
                self.tokens[j].value in self._METHOD_MODIFIERS
            ):
                j -= 1
            at_member_position = j < 0 or (
                self.tokens[j].kind == "punct" and self.tokens[j].value in (";", "{", "}")
            ) or self.tokens[j].line < self.tokens[i].line
            body_idx = after
            while body_idx < len(self.tokens) and self.tokens[body_idx].value not in ("{", ";", ")", "}"):
                body_idx += 1  # skip a TS return-type annotation
            if (
                at_member_position
                and body_idx < len(self.tokens)
                and self.tokens[body_idx].value == "{"
            ):
                # method definition: push its block here; run() resumes inside it
                idx = self._new_function(self.tokens[i].value, self.tokens[i].line)
                stack.append(_Block(tag="function", open_idx=body_idx, payload=idx))
                return body_idx + 1
        callee = self._callee_chain(i)
        arg_text = self._span_text(open_idx + 1, close_idx)
        temperature = self._temperature_from_text(arg_text)
        arg_count = self._count_args(open_idx, close_idx)
        words = split_words(callee)
        last = words[-1] if words else ""
        has_default = last == "get" and arg_count >= 2
        awaited = self._is_awaited(i)
        discarded = starts_statement and self._ends_statement(after)
        then_no_catch = False
        if last == "then":
            stmt_text = self._statement_text_around(i)
            then_no_catch = "catch" not in stmt_text and "finally" not in stmt_text
        self._calls.append(
            {
                "line": self.tokens[i].line,
                "callee": callee,
                "end_line": self.tokens[close_idx].line,
                "arg_count": arg_count,
                "temperature": temperature,
                "has_default_arg": has_default,
                "awaited": awaited,
                "value_discarded": discarded,
                "then_without_catch": then_no_catch,
                "function_index": self._enclosing_function(stack),
                "try_id": self._enclosing_try(stack),
                "handler_index": self._enclosing_handler(stack),
            }
        )
        if has_default:
            self.model.fallbacks.append(
                FallbackSite(
                    line=self.tokens[i].line,
                    kind=FB_GET_WITH_DEFAULT,
                    text=f"{callee}({arg_text})"[:80],
                    function_index=self._enclosing_function(stack),
                )
            )
        return i + 1

    def _callee_chain(self, word_idx: int) -> str:
        parts = [self.tokens[word_idx].value]
        j = word_idx - 1
        while j > 0:
            tok = self.tokens[j]
            if tok.kind == "punct" and tok.value in (".", "?."):
                prev = self.tokens[j - 1]
                if prev.kind == "word":
                    parts.append(prev.value)
                    j -= 2
                    continue
                if prev.kind == "punct" and prev.value == ")":
                    open_idx = self.openers.get(j - 1)
                    if open_idx is not None and open_idx > 0 and self.tokens[open_idx - 1].kind == "word":
                        parts.append(f"{self.tokens[open_idx - 1].value}()")
                        j = open_idx - 2
                        continue
                break
            break
        return ".".join(reversed(parts))

    def _chain_start(self, word_idx: int) -> int:
        """First token of the member chain ending at ``word_idx``, hopping
        through intermediate call results (``a().b().c``)."""
        j = word_idx
        while j > 1:
            tok = self.tokens[j - 1]
            if not (tok.kind == "punct" and tok.value in (".", "?.")):
                break
            prev = self.tokens[j - 2]
            if prev.kind == "word":
                j -= 2
                continue
            if prev.kind == "punct" and prev.value == ")":
                open_idx = self.openers.get(j - 2)
                if open_idx is not None and open_idx > 0 and self.tokens[open_idx - 1].kind == "word":
                    j = open_idx - 1
                    continue
            break
        return j

    def _starts_statement(self, word_idx: int) -> bool:
        start = self._chain_start(word_idx)
        if start == 0:
            return True
        prev = self.tokens[start - 1]
        if prev.kind == "punct" and prev.value in (";", "{", "}"):
            return True
        return prev.line < self.tokens[start].line

    def _ends_statement(self, after_idx: int) -> bool:
        if after_idx >= len(self.tokens):
            return True
        tok = self.tokens[after_idx]
        if tok.kind == "punct":
            if tok.value in (";", "}"):
                return True
            if tok.value in (")", ".", "?.", ","):
                return False  # nested in an expression or a continuing chain
        return tok.line > self.tokens[after_idx - 1].line

    def _is_awaited(self, word_idx: int) -> bool:
        start = self._chain_start(word_idx)
        if start == 0:
            return False
        prev = self.tokens[start - 1]
        return prev.kind == "word" and prev.value == "await"

    def _statement_text_around(self, word_idx: int) -> str:
        start = self._chain_start(word_idx)
        while start > 0:
            prev = self.tokens[start - 1]
            if prev.kind == "punct" and prev.value in (";", "{", "}"):
                break
            start -= 1
        end = word_idx
        depth = 0
        while end < len(self.tokens):
            tok = self.tokens[end]
            if tok.kind == "punct" and tok.value in "([{":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")]}":
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and tok.kind == "punct" and tok.value == ";":
                break
            end += 1
        return self._span_text(start, end)

    @staticmethod
    def _temperature_from_text(arg_text: str) -> float | None:
        import re

        m = re.search(r"\btemperature\s*[:=]\s*([0-9]*\.?[0-9]+)", arg_text)
        if m:
            try:
                return float(m.group(1))
            except ValueError:
                return None
        return None

    def _count_args(self, open_idx: int, close_idx: int) -> int:
        if close_idx == open_idx + 1:
            return 0
        depth = 0
        commas = 0
        for idx in range(open_idx + 1, close_idx):
            tok = self.tokens[idx]
            if tok.kind == "punct" and tok.value in "([{":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")]}":
                depth -= 1
            elif depth == 0 and tok.kind == "punct" and tok.value == ",":
                commas += 1
        return commas + 1

    # -- close / finalize ------------------------------------------------------

    def _close_block(self, block: _Block, close_idx: int, stack: list[_Block]) -> None:
        line = self.tokens[close_idx].line
        if block.tag == "function" and block.payload is not None:
            fn = self.model.functions[block.payload]
            self.model.functions[block.payload] = FunctionUnit(
                name=fn.name,
                start_line=fn.start_line,
                end_line=line,
                is_startup_like=fn.is_startup_like,
                is_test_like=fn.is_test_like,
                decorator_names=fn.decorator_names,
            )
        elif block.tag == "try" and block.try_id is not None:
            start, _ = self._try_spans[block.try_id]
            self._try_spans[block.try_id] = (start, line)
        elif block.tag in ("if", "if.error") and block.payload is not None:
            site = self.model.conditionals[block.payload]
            end = line
            nxt = close_idx + 1
            # extend through a single braced else branch
            if nxt < len(self.tokens) and self.tokens[nxt].value == "else":
                brace = nxt + 1
                if brace < len(self.tokens) and self.tokens[brace].value == "{":
                    end = self.tokens[self.pairs[brace]].line
            early = self._block_has_early_exit(block.open_idx, close_idx)
            self.model.conditionals[block.payload] = ConditionSite(
                line=site.line,
                end_line=end,
                test_text=site.test_text,
                has_early_exit=early,
                function_index=site.function_index,
            )
        elif block.tag == "loop" and block.payload is not None:
            site = self.model.loops[block.payload]
            self.model.loops[block.payload] = LoopSite(
                line=site.line,
                end_line=line,
                header_text=site.header_text,
                function_index=site.function_index,
            )

    def _block_has_early_exit(self, open_idx: int, close_idx: int) -> bool:
        depth = 0
        for idx in range(open_idx + 1, close_idx):
            tok = self.tokens[idx]
            if tok.kind == "punct" and tok.value in "([{":
                depth += 1
            elif tok.kind == "punct" and tok.value in ")]}":
                depth -= 1
            elif depth == 0 and tok.kind == "word" and tok.value in (
                "return", "throw", "break", "continue",
            ):
                return True
        return False

    def _resolve_guards(self) -> None:
        by_try: dict[int, list[int]] = {}
        for handler_idx, try_id in enumerate(self._handler_tries):
            if try_id is not None:
                by_try.setdefault(try_id, []).append(handler_idx)
        for raw in self._calls:
            try_id = raw.pop("try_id")
            guards = tuple(by_try.get(try_id, ())) if try_id is not None else ()
            self.model.calls.append(CallSite(guard_handler_indices=guards, **raw))
        self.model.calls.sort(key=lambda c: (c.line, c.callee))

    def _attach_function_site_indices(self) -> None:
        updated = []
        for idx, fn in enumerate(self.model.functions):
            updated.append(
                FunctionUnit(
                    name=fn.name,
                    start_line=fn.start_line,
                    end_line=fn.end_line,
                    is_startup_like=fn.is_startup_like,
                    is_test_like=fn.is_test_like,
                    decorator_names=fn.decorator_names,
                    handler_indices=tuple(
                        i for i, h in enumerate(self.model.handlers) if h.function_index == idx
                    ),
                    return_indices=tuple(
                        i for i, r in enumerate(self.model.returns) if r.function_index == idx
                    ),
                    call_indices=tuple(
                        i for i, c in enumerate(self.model.calls) if c.function_index == idx
                    ),
                )
            )
        self.model.functions = updated
