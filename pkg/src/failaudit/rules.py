"""The 15-check catalog and its deterministic evaluation.

Thirteen checks are automated; two (C07 parallel logic drift, C12 lineage)
are human-review-only and never produce findings or PASS/FAIL verdicts.
Detection is a pure function of the syntax model: identical models yield
identical findings, and repeated instances of a trigger in one file yield one
finding each, with no deduplication.

Severity is fixed per trigger so that each check emits a stable severity
profile: C01, C02, C05, C09, C10, C11 and C15 are HIGH-only; C06, C08 and
C13 are MEDIUM-only; C04 is LOW-only; C03 and C14 span HIGH and MEDIUM.

Lexical-fallback models run a reduced token-pattern subset (C03, C05, C09,
C11, C15); the remaining checks need structure the fallback cannot promise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from failaudit.lexicons import DEFAULT, Lexicons, split_words
from failaudit.model import (
    BODY_EMPTY,
    BODY_LOG_ONLY,
    BODY_RERAISES,
    BODY_RETURNS_VALUE,
    BREADTH_BARE,
    BREADTH_BROAD,
    LEXICAL_FALLBACK,
    CallSite,
    FunctionUnit,
    HandlerBlock,
    SyntaxModel,
)

HIGH = "HIGH"
MEDIUM = "MEDIUM"
LOW = "LOW"
SEVERITIES = (HIGH, MEDIUM, LOW)

# Check id -> report schema key, in schema order.
CHECK_KEYS: dict[str, str] = {
    "C01": "success_integrity",
    "C02": "audit_integrity",
    "C03": "exception_handling",
    "C04": "fallback_control",
    "C05": "bypass_controls",
    "C06": "return_contracts",
    "C07": "logic_consistency",
    "C08": "background_tasks",
    "C09": "environment_safety",
    "C10": "startup_integrity",
    "C11": "determinism",
    "C12": "lineage",
    "C13": "confidence_opacity",
    "C14": "test_coverage_symmetry",
    "C15": "idempotency_safety",
}
KEY_TO_CHECK = {key: check for check, key in CHECK_KEYS.items()}
CHECK_IDS = tuple(CHECK_KEYS)

HUMAN_REVIEW_CHECKS = frozenset({"C07", "C12"})
AUTOMATED_CHECKS = tuple(c for c in CHECK_IDS if c not in HUMAN_REVIEW_CHECKS)

# Checks whose token patterns survive lexical fallback.
LEXICAL_CHECKS = frozenset({"C03", "C05", "C09", "C11", "C15"})

ALLOWED_SEVERITIES: dict[str, frozenset[str]] = {
    "C01": frozenset({HIGH}),
    "C02": frozenset({HIGH}),
    "C03": frozenset({HIGH, MEDIUM}),
    "C04": frozenset({LOW}),
    "C05": frozenset({HIGH}),
    "C06": frozenset({MEDIUM}),
    "C08": frozenset({MEDIUM}),
    "C09": frozenset({HIGH}),
    "C10": frozenset({HIGH}),
    "C11": frozenset({HIGH}),
    "C13": frozenset({MEDIUM}),
    "C14": frozenset({HIGH, MEDIUM}),
    "C15": frozenset({HIGH}),
}


class UnknownCheckError(ValueError):
    """Asked to evaluate a check the engine cannot automate."""


@dataclass(frozen=True)
class Finding:
    check: str
    severity: str
    file_id: str
    line: int
    issue: str
    trigger_kind: str = ""
    source: str = "static"

    def sort_key(self) -> tuple:
        return (self.file_id, self.line, self.check, self.source)


@dataclass(frozen=True)
class CheckRule:
    check: str
    trigger: str
    scope: str


CATALOG: dict[str, CheckRule] = {
    "C01": CheckRule("C01", "handler returns a success-coded value without re-raising", "per-handler"),
    "C02": CheckRule("C02", "audit/evidence call guarded by a handler that absorbs its failure", "per-call"),
    "C03": CheckRule("C03", "broad or bare handler that swallows or neutralizes the exception", "per-handler"),
    "C04": CheckRule("C04", "fallback-default expression substitutes a value on the quiet", "per-site"),
    "C05": CheckRule("C05", "bypass-flag conditional that can skip a guard call", "per-site"),
    "C06": CheckRule("C06", "null returned on an error path where other paths return values", "per-function"),
    "C08": CheckRule("C08", "task spawned with no join, await, or error continuation", "per-call"),
    "C09": CheckRule("C09", "environment conditional that can skip a guard call", "per-site"),
    "C10": CheckRule("C10", "startup-scope handler continues after failed initialization", "per-handler"),
    "C11": CheckRule("C11", "randomness used in non-test code with no seed set in the file", "per-call"),
    "C13": CheckRule("C13", "handler returns fallback/cached/default value with no confidence posture", "per-handler"),
    "C14": CheckRule("C14", "failure-path tests missing or badly outnumbered by happy-path tests", "per-test-file"),
    "C15": CheckRule("C15", "retry construct wraps a write with no idempotency control", "per-call"),
}

_SWALLOW_KINDS = (BODY_EMPTY, BODY_LOG_ONLY, BODY_RETURNS_VALUE)

_SUCCESS_WORDS = ("ok", "okay", "success", "succeeded")
_SUCCESS_STRING_RE = re.compile(r"^[\"'](ok|okay|success|succeeded)[\"']$", re.IGNORECASE)
_SUCCESS_CODE_RE = re.compile(r"^2\d{2}$")
_SUCCESS_KEY_RE = re.compile(
    r"[\"']?(status|status_code|code|success|ok|result)[\"']?\s*[:=]\s*"
    r"[\"']?(true|ok|okay|success|succeeded|2\d{2})\b",
    re.IGNORECASE,
)
_POSTURE_RE = re.compile(
    r"[\"'](confidence|degraded|partial|stale|fallback)[\"']|"
    r"\b(confidence|degraded|partial|stale|fallback)\s*[=:]",
    re.IGNORECASE,
)


def is_success_coded(expression: str | None) -> bool:
    """Whether a returned expression encodes success.

    Success-coded means: the literal true, an ok/success status string, a
    2xx code, or a mapping/kwarg that sets a status-ish key to one of those.
    """
    if not expression:
        return False
    text = expression.strip()
    if text.lower() == "true":
        return True
    if _SUCCESS_STRING_RE.match(text):
        return True
    if _SUCCESS_CODE_RE.match(text):
        return True
    return bool(_SUCCESS_KEY_RE.search(text))


def evaluate_check(
    check: str, model: SyntaxModel, lexicons: Lexicons | None = None
) -> list[Finding]:
    """Findings for one automated check against one model."""
    if check in HUMAN_REVIEW_CHECKS:
        raise UnknownCheckError(f"{check} is human-review-only and cannot be evaluated")
    if check not in CHECK_KEYS:
        raise UnknownCheckError(f"unknown check id {check!r}")
    lex = lexicons or DEFAULT
    findings = _EVALUATORS[check](_Scope(model, lex))
    findings.sort(key=lambda f: (f.line, f.check))
    for f in findings:
        assert f.severity in ALLOWED_SEVERITIES[check], (check, f.severity)
    return findings


def checks_for_model(model: SyntaxModel) -> tuple[str, ...]:
    """The automated checks that can run against this model.

    Lexical models support only the token-pattern subset; C14 applies only
    to test-like files.
    """
    if model.mode == LEXICAL_FALLBACK:
        candidates = tuple(c for c in AUTOMATED_CHECKS if c in LEXICAL_CHECKS)
    else:
        candidates = AUTOMATED_CHECKS
    if not _is_test_file(model):
        candidates = tuple(c for c in candidates if c != "C14")
    return candidates


def run_all_checks(model: SyntaxModel, lexicons: Lexicons | None = None) -> list[Finding]:
    """All automated findings for one model, ordered by (line, check id)."""
    findings: list[Finding] = []
    for check in checks_for_model(model):
        findings.extend(evaluate_check(check, model, lexicons))
    findings.sort(key=lambda f: (f.line, f.check))
    return findings


COOCCURRENCE_PROFILES: tuple[tuple[frozenset[str], str], ...] = (
    (frozenset({"C03", "C01"}), "failure concealment"),
    (frozenset({"C04", "C09"}), "environment-shaped degraded assurance"),
    (frozenset({"C02", "C10"}), "starts despite lost evidence guarantees"),
)


@dataclass(frozen=True)
class ProfileTag:
    file_id: str
    checks: tuple[str, ...]
    label: str


def cooccurrence_profiles(findings: list[Finding]) -> list[ProfileTag]:
    """Advisory failure-profile tags for files where check pairs co-occur."""
    by_file: dict[str, set[str]] = {}
    for f in findings:
        by_file.setdefault(f.file_id, set()).add(f.check)
    tags: list[ProfileTag] = []
    for file_id in sorted(by_file):
        present = by_file[file_id]
        for pair, label in COOCCURRENCE_PROFILES:
            if pair <= present:
                tags.append(ProfileTag(file_id, tuple(sorted(pair)), label))
    return tags


# ---------------------------------------------------------------------------
# per-check evaluators
# ---------------------------------------------------------------------------


class _Scope:
    """Shared per-model context for the evaluators."""

    def __init__(self, model: SyntaxModel, lex: Lexicons):
        self.model = model
        self.lex = lex
        self.file_id = model.file.file_id
        self.lexical = model.mode == LEXICAL_FALLBACK

    def finding(self, check: str, severity: str, line: int, issue: str, kind: str) -> Finding:
        return Finding(
            check=check,
            severity=severity,
            file_id=self.file_id,
            line=line,
            issue=issue,
            trigger_kind=kind,
        )

    def callee_matches(self, call: CallSite, category: str) -> bool:
        return self.lex.match(category, call.callee)

    def function_of(self, index: int | None) -> FunctionUnit | None:
        return self.model.function_at(index)

    def function_words(self, fn: FunctionUnit | None) -> tuple[str, ...]:
        if fn is None:
            return split_words(self.model.file.content)
        return split_words(self.model.file.span_text(fn.start_line, fn.end_line))

    def is_test_scope(self, function_index: int | None) -> bool:
        fn = self.function_of(function_index)
        if fn is not None:
            return fn.is_test_like
        return _is_test_file(self.model)


def _is_test_file(model: SyntaxModel) -> bool:
    from failaudit.languages import is_test_path

    return is_test_path(model.file.relative_path)


def _snippet(text: str | None, limit: int = 48) -> str:
    if not text:
        return ""
    flat = " ".join(text.split())
    return flat if len(flat) <= limit else flat[: limit - 3] + "..."


def _eval_c01(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for ret in s.model.returns:
        if ret.handler_index is None:
            continue
        handler = s.model.handlers[ret.handler_index]
        if handler.body_kind == BODY_RERAISES:
            continue
        if is_success_coded(ret.expression):
            out.append(
                s.finding(
                    "C01",
                    HIGH,
                    ret.line,
                    f"handler returns success-coded value {_snippet(ret.expression)!r} "
                    "after the guarded operation failed",
                    "success_return_in_handler",
                )
            )
    return out


def _swallows(handler: HandlerBlock) -> bool:
    return handler.body_kind in _SWALLOW_KINDS


def _eval_c02(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for call in s.model.calls:
        if not s.callee_matches(call, "audit"):
            continue
        protected = False
        for idx in call.guard_handler_indices:
            if _swallows(s.model.handlers[idx]):
                protected = True
                break
        if not protected and call.handler_index is not None:
            protected = _swallows(s.model.handlers[call.handler_index])
        if protected:
            out.append(
                s.finding(
                    "C02",
                    HIGH,
                    call.line,
                    f"audit/evidence operation '{call.callee}' can fail silently: "
                    "its handler absorbs the failure",
                    "audit_call_swallowed",
                )
            )
    return out


def _eval_c03(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for handler in s.model.handlers:
        if handler.caught_breadth not in (BREADTH_BARE, BREADTH_BROAD):
            continue
        breadth = "bare" if handler.caught_breadth == BREADTH_BARE else "broad"
        if handler.body_kind == BODY_EMPTY:
            out.append(
                s.finding(
                    "C03",
                    HIGH,
                    handler.line,
                    f"{breadth} handler swallows the exception with an empty body",
                    "swallow_empty",
                )
            )
        elif handler.body_kind == BODY_LOG_ONLY:
            out.append(
                s.finding(
                    "C03",
                    MEDIUM,
                    handler.line,
                    f"{breadth} handler only logs; the failure does not propagate",
                    "swallow_log_only",
                )
            )
        elif handler.body_kind == BODY_RETURNS_VALUE:
            out.append(
                s.finding(
                    "C03",
                    MEDIUM,
                    handler.line,
                    f"{breadth} handler neutralizes the exception by returning "
                    f"{_snippet(handler.returned_expression) or 'nothing'!r}",
                    "swallow_returns_value",
                )
            )
    return out


def _eval_c04(s: _Scope) -> list[Finding]:
    return [
        s.finding(
            "C04",
            LOW,
            site.line,
            f"fallback default substitutes a value: {_snippet(site.text)!r}",
            site.kind,
        )
        for site in s.model.fallbacks
    ]


def _guard_skip_conditionals(s: _Scope, category: str) -> list[tuple[int, str]]:
    """Conditional sites whose test matches ``category`` and that gate a guard call."""
    hits: list[tuple[int, str]] = []
    guard_calls = [c for c in s.model.calls if s.callee_matches(c, "guard")]
    for cond in s.model.conditionals:
        if not s.lex.match(category, cond.test_text):
            continue
        if s.lexical:
            if guard_calls:
                hits.append((cond.line, cond.test_text))
            continue
        in_span = any(cond.line <= c.line <= cond.end_line for c in guard_calls)
        after_exit = cond.has_early_exit and any(
            c.line > cond.end_line
            and c.function_index == cond.function_index
            for c in guard_calls
        )
        if in_span or after_exit:
            hits.append((cond.line, cond.test_text))
    return hits


def _eval_c05(s: _Scope) -> list[Finding]:
    return [
        s.finding(
            "C05",
            HIGH,
            line,
            f"bypass flag controls whether a safeguard runs: if {_snippet(test)!r}",
            "bypass_conditional",
        )
        for line, test in _guard_skip_conditionals(s, "bypass")
    ]


def _eval_c09(s: _Scope) -> list[Finding]:
    return [
        s.finding(
            "C09",
            HIGH,
            line,
            f"environment check relaxes a safeguard: if {_snippet(test)!r}",
            "environment_conditional",
        )
        for line, test in _guard_skip_conditionals(s, "environment")
    ]


def _eval_c06(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    by_function: dict[int | None, list] = {}
    for ret in s.model.returns:
        by_function.setdefault(ret.function_index, []).append(ret)
    for _fn_index, rets in sorted(by_function.items(), key=lambda kv: (kv[0] is None, kv[0])):
        has_value_return = any(not r.is_none and r.expression is not None for r in rets)
        if not has_value_return:
            continue
        for ret in rets:
            if ret.is_none and (ret.handler_index is not None or ret.in_error_branch):
                out.append(
                    s.finding(
                        "C06",
                        MEDIUM,
                        ret.line,
                        "error path returns null where other paths return a value; "
                        "absence and failure become indistinguishable",
                        "null_on_error_path",
                    )
                )
    return out


def _eval_c08(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for call in s.model.calls:
        words = split_words(call.callee)
        last = words[-1] if words else ""
        if last == "then":
            if call.then_without_catch and call.value_discarded:
                out.append(
                    s.finding(
                        "C08",
                        MEDIUM,
                        call.line,
                        f"promise chain '{_snippet(call.callee)}' has no error continuation",
                        "unhandled_then",
                    )
                )
            continue
        if not s.callee_matches(call, "task_spawn"):
            continue
        if call.value_discarded and not call.awaited:
            out.append(
                s.finding(
                    "C08",
                    MEDIUM,
                    call.line,
                    f"background task '{call.callee}' is spawned and abandoned: "
                    "no join, await, or error continuation",
                    "fire_and_forget_spawn",
                )
            )
    return out


def _eval_c10(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for handler in s.model.handlers:
        fn = s.function_of(handler.function_index)
        startup_scope = fn.is_startup_like if fn is not None else (
            _is_startup_file(s.model)
        )
        if startup_scope and handler.body_kind in _SWALLOW_KINDS:
            where = fn.name if fn is not None else "module scope"
            out.append(
                s.finding(
                    "C10",
                    HIGH,
                    handler.line,
                    f"startup scope '{where}' continues after a failed "
                    "initialization step",
                    "startup_continues_after_failure",
                )
            )
    return out


def _is_startup_file(model: SyntaxModel) -> bool:
    from failaudit.languages import is_startup_path

    return is_startup_path(model.file.relative_path)


def _eval_c11(s: _Scope) -> list[Finding]:
    seed_present = any(s.callee_matches(c, "seed") for c in s.model.calls)
    if seed_present:
        return []
    out: list[Finding] = []
    for call in s.model.calls:
        if s.is_test_scope(call.function_index):
            continue
        is_source = s.callee_matches(call, "random") and not s.callee_matches(call, "seed")
        if is_source:
            out.append(
                s.finding(
                    "C11",
                    HIGH,
                    call.line,
                    f"randomness source '{call.callee}' used with no seed set "
                    "anywhere in the file",
                    "unseeded_randomness",
                )
            )
        elif call.temperature is not None and call.temperature > 0:
            out.append(
                s.finding(
                    "C11",
                    HIGH,
                    call.line,
                    f"sampling call '{call.callee}' uses temperature "
                    f"{call.temperature:g} > 0 with no seed set in the file",
                    "positive_temperature",
                )
            )
    return out


def _eval_c13(s: _Scope) -> list[Finding]:
    out: list[Finding] = []
    for ret in s.model.returns:
        if ret.handler_index is None or not ret.expression:
            continue
        if not s.lex.match("fallback_source", ret.expression):
            continue
        if _POSTURE_RE.search(ret.expression):
            continue
        out.append(
            s.finding(
                "C13",
                MEDIUM,
                ret.line,
                f"handler returns degraded value {_snippet(ret.expression)!r} with "
                "no confidence posture (no confidence/degraded/partial/stale key)",
                "undisclosed_degraded_return",
            )
        )
    return out


def _eval_c14(s: _Scope) -> list[Finding]:
    if not _is_test_file(s.model):
        return []
    happy, failing, anchor_line = _count_test_units(s)
    total = happy + failing
    if total == 0:
        return []
    if failing == 0 and happy >= 3:
        return [
            s.finding(
                "C14",
                HIGH,
                anchor_line,
                f"{happy} happy-path tests and zero failure-path tests: "
                "error behavior is entirely unexercised",
                "missing_failure_paths",
            )
        ]
    if failing >= 1 and happy > 0 and failing / happy < 0.25:
        return [
            s.finding(
                "C14",
                MEDIUM,
                anchor_line,
                f"failure-path tests lag happy-path tests ({failing} vs {happy})",
                "failure_path_deficit",
            )
        ]
    return []


def _count_test_units(s: _Scope) -> tuple[int, int, int]:
    """(happy, failure-path, anchor line) for the file's test units.

    Python test units are test-named functions; JS units are it()/test()
    call sites with spans approximated by the gap to the next unit.
    """
    units: list[tuple[int, int]] = []  # (start, end) spans
    for fn in s.model.functions:
        if fn.name.lower().startswith("test"):
            units.append((fn.start_line, fn.end_line))
    if not units:
        call_lines = sorted(
            c.line for c in s.model.calls if split_words(c.callee)[-1:] in (("it",), ("test",))
        )
        for idx, line in enumerate(call_lines):
            end = call_lines[idx + 1] - 1 if idx + 1 < len(call_lines) else s.model.file.line_count
            units.append((line, end))
    if not units:
        return 0, 0, 1
    happy = 0
    failing = 0
    for start, end in units:
        words = split_words(s.model.file.span_text(start, end))
        if s.lex.match_words("failure_assert", words):
            failing += 1
        else:
            happy += 1
    return happy, failing, units[0][0]


def _eval_c15(s: _Scope) -> list[Finding]:
    spans: list[tuple[int, int, int | None]] = []  # (start, end, function_index)
    for idx, fn in enumerate(s.model.functions):
        if any(s.lex.match("retry", d) for d in fn.decorator_names):
            spans.append((fn.start_line, fn.end_line, idx))
    for loop in s.model.loops:
        if not s.lex.match("attempt", loop.header_text):
            continue
        has_sleep = any(
            s.callee_matches(c, "sleep") and loop.line <= c.line <= loop.end_line
            for c in s.model.calls
        )
        if has_sleep or s.lexical:
            spans.append((loop.line, loop.end_line, loop.function_index))
    for call in s.model.calls:
        if s.callee_matches(call, "retry") and call.end_line > call.line:
            spans.append((call.line, call.end_line, call.function_index))
    if s.lexical and not spans:
        if any(s.callee_matches(c, "retry") for c in s.model.calls):
            spans.append((1, s.model.file.line_count, None))
    if not spans:
        return []

    out: list[Finding] = []
    seen: set[int] = set()
    for call in s.model.calls:
        if call.line in seen:
            continue
        if not s.callee_matches(call, "write"):
            continue
        if s.callee_matches(call, "retry"):
            continue
        for start, end, fn_index in spans:
            if not (start <= call.line <= end):
                continue
            scope_fn = s.function_of(fn_index if fn_index is not None else call.function_index)
            words = s.function_words(scope_fn)
            if s.lex.match_words("idempotency", words):
                continue
            seen.add(call.line)
            out.append(
                s.finding(
                    "C15",
                    HIGH,
                    call.line,
                    f"write operation '{call.callee}' is retried with no "
                    "idempotency control in scope",
                    "retried_write_without_idempotency",
                )
            )
            break
    return out


_EVALUATORS = {
    "C01": _eval_c01,
    "C02": _eval_c02,
    "C03": _eval_c03,
    "C04": _eval_c04,
    "C05": _eval_c05,
    "C06": _eval_c06,
    "C08": _eval_c08,
    "C09": _eval_c09,
    "C10": _eval_c10,
    "C11": _eval_c11,
    "C13": _eval_c13,
    "C14": _eval_c14,
    "C15": _eval_c15,
}
