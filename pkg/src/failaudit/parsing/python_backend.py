"""Python site extraction via the stdlib grammar.

Returns None when the grammar rejects the file, in which case the caller
falls back to keyword scanning.
"""

from __future__ import annotations

import ast

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
    BREADTH_NARROW,
    FB_GET_WITH_DEFAULT,
    FB_HANDLER_DEFAULT_ASSIGN,
    FB_OR_DEFAULT,
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

_BROAD_NAMES = ("Exception", "BaseException")
_STARTUP_NAMES = frozenset({"main", "init", "initialize", "startup", "bootstrap", "setup"})

_LITERAL_NODES = (ast.Constant, ast.Dict, ast.List, ast.Tuple, ast.Set)


def _is_noop(stmt: ast.stmt) -> bool:
    if isinstance(stmt, ast.Pass):
        return True
    return isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant)


def parse_python(file: SourceFile, lexicons: Lexicons) -> SyntaxModel | None:
    try:
        tree = ast.parse(file.content)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return None
    extractor = _Extractor(file, lexicons)
    extractor.run(tree)
    return extractor.model


class _Extractor:
    """Single recursive pass that tracks function / handler / branch context."""

    def __init__(self, file: SourceFile, lexicons: Lexicons):
        self.file = file
        self.lex = lexicons
        self.model = SyntaxModel(file=file, mode=FULL_PARSE)
        self.file_test_like = is_test_path(file.relative_path)
        self.file_startup_like = is_startup_path(file.relative_path)

    def run(self, tree: ast.Module) -> None:
        for stmt in tree.body:
            self._visit(stmt, _Ctx())
        self._attach_function_site_indices()

    # -- context ------------------------------------------------------------

    def _segment(self, node: ast.AST) -> str:
        text = ast.get_source_segment(self.file.content, node)
        if text is None:
            try:
                text = ast.unparse(node)
            except Exception:
                text = ""
        return text

    def _visit(self, node: ast.AST, ctx: "_Ctx") -> None:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            self._visit_function(node, ctx)
        elif isinstance(node, ast.Try):
            self._visit_try(node, ctx)
        elif isinstance(node, ast.If):
            self._visit_if(node, ctx)
        elif isinstance(node, (ast.For, ast.AsyncFor, ast.While)):
            self._visit_loop(node, ctx)
        elif isinstance(node, ast.Return):
            self._visit_return(node, ctx)
            self._walk_children(node, ctx)
        elif isinstance(node, ast.Call):
            self._visit_call(node, ctx)
            for child in ast.iter_child_nodes(node):
                self._visit(child, ctx._no_flags())
        elif isinstance(node, ast.Await):
            self._walk_children(node, ctx._with(awaited=True))
        elif isinstance(node, ast.Expr):
            self._walk_children(node, ctx._with(discarded=True))
        elif isinstance(node, ast.Assign):
            self._visit_assign(node, ctx)
        elif isinstance(node, ast.BoolOp):
            self._visit_boolop(node, ctx)
        elif isinstance(node, ast.ClassDef):
            for child in node.body:
                self._visit(child, ctx)
        else:
            self._walk_children(node, ctx)

    def _walk_children(self, node: ast.AST, ctx: "_Ctx") -> None:
        for child in ast.iter_child_nodes(node):
            self._visit(child, ctx._no_flags() if not isinstance(child, ast.expr) else ctx)

    # -- constructs ----------------------------------------------------------

    def _visit_function(self, node, ctx: "_Ctx") -> None:
        name = node.name
        normalized = name.strip("_").lower()
        startup_like = normalized in _STARTUP_NAMES or self.file_startup_like
        test_like = self.file_test_like or name.lower().startswith("test")
        decos = tuple(self._segment(d) for d in node.decorator_list)
        index = len(self.model.functions)
        self.model.functions.append(
            FunctionUnit(
                name=name,
                start_line=node.lineno,
                end_line=node.end_lineno or node.lineno,
                is_startup_like=startup_like,
                is_test_like=test_like,
                decorator_names=decos,
            )
        )
        inner = _Ctx(function=index)
        for stmt in node.body:
            self._visit(stmt, inner)

    def _visit_try(self, node: ast.Try, ctx: "_Ctx") -> None:
        guard_start = node.body[0].lineno if node.body else node.lineno
        guard_end = node.body[-1].end_lineno if node.body else node.lineno

        handler_indices: list[int] = []
        for handler in node.handlers:
            index = len(self.model.handlers)
            handler_indices.append(index)
            body_kind, returned = self._classify_handler_body(handler.body)
            self.model.handlers.append(
                HandlerBlock(
                    line=handler.lineno,
                    caught_breadth=self._breadth(handler.type),
                    body_kind=body_kind,
                    returned_expression=returned,
                    guard_start=guard_start,
                    guard_end=guard_end or guard_start,
                    body_start=handler.body[0].lineno if handler.body else handler.lineno,
                    body_end=(handler.body[-1].end_lineno if handler.body else handler.lineno),
                    function_index=ctx.function,
                )
            )

        guard_ctx = ctx._with(guards=tuple(handler_indices)) if handler_indices else ctx
        for stmt in node.body:
            self._visit(stmt, guard_ctx._no_flags())
        for handler, index in zip(node.handlers, handler_indices):
            body_ctx = ctx._with(handler=index)
            for stmt in handler.body:
                self._visit(stmt, body_ctx._no_flags())
        for stmt in node.orelse + node.finalbody:
            self._visit(stmt, ctx._no_flags())

    def _breadth(self, type_node: ast.expr | None) -> str:
        if type_node is None:
            return BREADTH_BARE
        names: list[str] = []
        nodes = type_node.elts if isinstance(type_node, ast.Tuple) else [type_node]
        for n in nodes:
            if isinstance(n, ast.Name):
                names.append(n.id)
            elif isinstance(n, ast.Attribute):
                names.append(n.attr)
        return BREADTH_BROAD if any(n in _BROAD_NAMES for n in names) else BREADTH_NARROW

    def _classify_handler_body(self, body: list[ast.stmt]) -> tuple[str, str | None]:
        """Decide how the handler disposes of the failure.

        The first decisive top-level statement wins: a raise means the
        failure propagates, a return means the handler substitutes a value.
        Bodies without a decisive statement are graded by what they contain.
        """
        returned: str | None = None
        for stmt in body:
            if isinstance(stmt, ast.Raise):
                return BODY_RERAISES, None
            if isinstance(stmt, ast.Return):
                if stmt.value is not None:
                    returned = self._segment(stmt.value)
                return BODY_RETURNS_VALUE, returned
        if all(_is_noop(s) for s in body):
            return BODY_EMPTY, None
        if all(_is_noop(s) or self._is_log_stmt(s) for s in body):
            return BODY_LOG_ONLY, None
        return BODY_OTHER, None

    def _is_log_stmt(self, stmt: ast.stmt) -> bool:
        if not (isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Call)):
            return False
        callee = self._callee_text(stmt.value.func)
        return self.lex.match("logging", callee)

    def _visit_if(self, node: ast.If, ctx: "_Ctx") -> None:
        test_text = self._segment(node.test)
        early = any(
            isinstance(s, (ast.Return, ast.Raise, ast.Continue, ast.Break)) for s in node.body
        )
        self.model.conditionals.append(
            ConditionSite(
                line=node.lineno,
                end_line=node.end_lineno or node.lineno,
                test_text=test_text,
                has_early_exit=early,
                function_index=ctx.function,
            )
        )
        self._visit(node.test, ctx._no_flags())
        error_branch = self.lex.match("error_branch", test_text)
        body_ctx = ctx._with(error_branch=True) if error_branch else ctx
        for stmt in node.body:
            self._visit(stmt, body_ctx._no_flags())
        for stmt in node.orelse:
            self._visit(stmt, ctx._no_flags())

    def _visit_loop(self, node, ctx: "_Ctx") -> None:
        if isinstance(node, ast.While):
            header = f"while {self._segment(node.test)}"
        else:
            header = f"for {self._segment(node.target)} in {self._segment(node.iter)}"
        self.model.loops.append(
            LoopSite(
                line=node.lineno,
                end_line=node.end_lineno or node.lineno,
                header_text=header,
                function_index=ctx.function,
            )
        )
        self._walk_children(node, ctx._no_flags())

    def _visit_return(self, node: ast.Return, ctx: "_Ctx") -> None:
        expression = self._segment(node.value) if node.value is not None else None
        is_none = isinstance(node.value, ast.Constant) and node.value.value is None
        self.model.returns.append(
            ReturnSite(
                line=node.lineno,
                expression=expression,
                is_none=is_none,
                handler_index=ctx.handler,
                in_error_branch=ctx.error_branch,
                function_index=ctx.function,
            )
        )

    def _callee_text(self, func: ast.expr) -> str:
        if isinstance(func, ast.Name):
            return func.id
        if isinstance(func, ast.Attribute):
            return f"{self._callee_text(func.value)}.{func.attr}"
        if isinstance(func, ast.Call):
            return f"{self._callee_text(func.func)}()"
        return self._segment(func)

    def _visit_call(self, node: ast.Call, ctx: "_Ctx") -> None:
        callee = self._callee_text(node.func)
        words = split_words(callee)
        temperature = None
        for kw in node.keywords:
            if kw.arg == "temperature" and isinstance(kw.value, ast.Constant):
                if isinstance(kw.value.value, (int, float)):
                    temperature = float(kw.value.value)
        last = words[-1] if words else ""
        has_default = (last == "get" and len(node.args) >= 2) or (
            last in ("getattr", "getenv") and len(node.args) >= 3
        )
        self.model.calls.append(
            CallSite(
                line=node.lineno,
                callee=callee,
                end_line=node.end_lineno or node.lineno,
                arg_count=len(node.args),
                temperature=temperature,
                has_default_arg=has_default,
                awaited=ctx.awaited,
                value_discarded=ctx.discarded,
                function_index=ctx.function,
                guard_handler_indices=ctx.guards,
                handler_index=ctx.handler,
            )
        )
        if has_default:
            self.model.fallbacks.append(
                FallbackSite(
                    line=node.lineno,
                    kind=FB_GET_WITH_DEFAULT,
                    text=self._segment(node)[:80],
                    function_index=ctx.function,
                )
            )

    def _visit_assign(self, node: ast.Assign, ctx: "_Ctx") -> None:
        if ctx.handler is not None and isinstance(node.value, _LITERAL_NODES):
            self.model.fallbacks.append(
                FallbackSite(
                    line=node.lineno,
                    kind=FB_HANDLER_DEFAULT_ASSIGN,
                    text=self._segment(node)[:80],
                    function_index=ctx.function,
                )
            )
        self._walk_children(node, ctx)

    def _visit_boolop(self, node: ast.BoolOp, ctx: "_Ctx") -> None:
        if isinstance(node.op, ast.Or) and isinstance(node.values[-1], _LITERAL_NODES):
            self.model.fallbacks.append(
                FallbackSite(
                    line=node.lineno,
                    kind=FB_OR_DEFAULT,
                    text=self._segment(node)[:80],
                    function_index=ctx.function,
                )
            )
        self._walk_children(node, ctx)

    def _attach_function_site_indices(self) -> None:
        functions = self.model.functions
        if not functions:
            return
        updated = []
        for idx, fn in enumerate(functions):
            handler_idx = tuple(
                i for i, h in enumerate(self.model.handlers) if h.function_index == idx
            )
            return_idx = tuple(
                i for i, r in enumerate(self.model.returns) if r.function_index == idx
            )
            call_idx = tuple(i for i, c in enumerate(self.model.calls) if c.function_index == idx)
            updated.append(
                FunctionUnit(
                    name=fn.name,
                    start_line=fn.start_line,
                    end_line=fn.end_line,
                    is_startup_like=fn.is_startup_like,
                    is_test_like=fn.is_test_like,
                    decorator_names=fn.decorator_names,
                    handler_indices=handler_idx,
                    return_indices=return_idx,
                    call_indices=call_idx,
                )
            )
        self.model.functions = updated


class _Ctx:
    """Immutable walk context: enclosing function, handler, guards, flags."""

    __slots__ = ("function", "handler", "guards", "error_branch", "awaited", "discarded")

    def __init__(
        self,
        function: int | None = None,
        handler: int | None = None,
        guards: tuple[int, ...] = (),
        error_branch: bool = False,
        awaited: bool = False,
        discarded: bool = False,
    ):
        self.function = function
        self.handler = handler
        self.guards = guards
        self.error_branch = error_branch
        self.awaited = awaited
        self.discarded = discarded

    def _with(self, **kw) -> "_Ctx":
        values = {
            "function": self.function,
            "handler": self.handler,
            "guards": self.guards,
            "error_branch": self.error_branch,
            "awaited": self.awaited,
            "discarded": self.discarded,
        }
        values.update(kw)
        return _Ctx(**values)

    def _no_flags(self) -> "_Ctx":
        if not (self.awaited or self.discarded):
            return self
        return self._with(awaited=False, discarded=False)
