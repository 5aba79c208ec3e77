"""Optional model-assisted evaluation layer.

The evaluator transport is a pluggable endpoint: serialized request text in,
structured JSON text out. A live HTTP server is configuration, not a code
dependency; a stub implementation ships for tests and offline use.

Two rules keep this layer subordinate to the deterministic engine. First,
the request never asks the evaluator to rule on the human-review-only checks,
and any response that rules on them is overwritten to UNKNOWN. Second,
response parsing is strict: a response that deviates from the contract shape
is discarded whole (the scan proceeds on static results alone) rather than
salvaged, since an optimistic parser would conceal evaluator failure, which
is exactly the defect class this tool exists to surface.
"""

from __future__ import annotations

import json
import os
import urllib.request
from dataclasses import dataclass, field

from failaudit.model import SourceFile
from failaudit.report import FAIL, PASS, UNKNOWN, VERDICTS
from failaudit.rules import (
    AUTOMATED_CHECKS,
    CATALOG,
    CHECK_KEYS,
    HUMAN_REVIEW_CHECKS,
    SEVERITIES,
    Finding,
)

CONTRACT_VERSION = "1.2"

# Secrets come from the environment only; everything else is flags/config.
TOKEN_ENV_VAR = "FAILAUDIT_ENDPOINT_TOKEN"


@dataclass
class EndpointConfig:
    base_url: str = ""
    model: str = ""
    timeout_s: float = 60.0
    context_budget: int = 24_000  # characters of file content per request


@dataclass
class EvaluatorResult:
    ok: bool
    verdicts: dict[str, str] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)
    truncated: bool = False
    error: str | None = None


def build_audit_request(file: SourceFile, checks: list[str], context_budget: int) -> tuple[dict, bool]:
    """Contract request document; returns (request, truncated)."""
    asked = [c for c in checks if c not in HUMAN_REVIEW_CHECKS]
    content = file.content
    truncated = False
    if len(content) > context_budget:
        content = content[:context_budget]
        truncated = True
    request = {
        "contract": "failure-audit-request",
        "contract_version": CONTRACT_VERSION,
        "file": {
            "name": file.relative_path,
            "language": file.language,
            "content": content,
            "truncated": truncated,
        },
        "checks": [
            {"id": c, "key": CHECK_KEYS[c], "concern": CATALOG[c].trigger} for c in asked
        ],
        "response_shape": {
            "verdicts": "mapping of every requested check key to PASS | FAIL | UNKNOWN",
            "findings": "list of {check, line, severity, issue} for each FAIL",
        },
    }
    return request, truncated


class StubEvaluator:
    """Canned evaluator for tests and offline runs.

    ``verdicts`` maps schema keys to tokens (missing keys default to PASS);
    ``raw`` short-circuits with an arbitrary response body; ``error`` makes
    the transport itself fail.
    """

    def __init__(
        self,
        verdicts: dict[str, str] | None = None,
        findings: list[dict] | None = None,
        raw: str | None = None,
        error: Exception | None = None,
    ):
        self.verdicts = verdicts or {}
        self.findings = findings or []
        self.raw = raw
        self.error = error
        self.requests: list[dict] = []

    def complete(self, request_text: str) -> str:
        if self.error is not None:
            raise self.error
        request = json.loads(request_text)
        self.requests.append(request)
        if self.raw is not None:
            return self.raw
        verdicts = {
            entry["key"]: self.verdicts.get(entry["key"], PASS)
            for entry in request["checks"]
        }
        return json.dumps({"verdicts": verdicts, "findings": self.findings})


class HttpEvaluator:
    """Generic JSON-over-HTTP endpoint (an Ollama-style generate route)."""

    def __init__(self, config: EndpointConfig):
        if not config.base_url:
            raise ValueError("endpoint base_url is required for llm/hybrid mode")
        self.config = config

    def complete(self, request_text: str) -> str:
        payload = json.dumps(
            {"model": self.config.model, "prompt": request_text, "stream": False}
        ).encode("utf-8")
        url = self.config.base_url.rstrip("/") + "/api/generate"
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(url, data=payload, headers=headers)
        with urllib.request.urlopen(req, timeout=self.config.timeout_s) as response:
            body = json.loads(response.read().decode("utf-8"))
        return body.get("response", "")


def make_evaluator(config: EndpointConfig):
    """Endpoint factory. ``stub:`` URLs build offline stubs (stub:all-pass)."""
    if config.base_url.startswith("stub:"):
        flavor = config.base_url[len("stub:") :] or "all-pass"
        if flavor == "all-pass":
            return StubEvaluator()
        if flavor == "all-fail":
            return StubEvaluator(
                verdicts={CHECK_KEYS[c]: FAIL for c in AUTOMATED_CHECKS}
            )
        if flavor == "malformed":
            return StubEvaluator(raw="not a contract response")
        raise ValueError(f"unknown stub evaluator flavor {flavor!r}")
    return HttpEvaluator(config)


def _parse_response(text: str, asked: list[str], file_id: str) -> EvaluatorResult:
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, TypeError) as err:
        return EvaluatorResult(ok=False, error=f"malformed response: {err}")
    if not isinstance(data, dict):
        return EvaluatorResult(ok=False, error="malformed response: not an object")
    raw_verdicts = data.get("verdicts")
    if not isinstance(raw_verdicts, dict):
        return EvaluatorResult(ok=False, error="malformed response: missing verdicts map")

    asked_keys = {CHECK_KEYS[c] for c in asked}
    human_keys = {CHECK_KEYS[c] for c in HUMAN_REVIEW_CHECKS}
    extra = set(raw_verdicts) - asked_keys - human_keys
    missing = asked_keys - set(raw_verdicts)
    if extra:
        return EvaluatorResult(ok=False, error=f"unexpected verdict keys: {sorted(extra)}")
    if missing:
        return EvaluatorResult(ok=False, error=f"missing verdict keys: {sorted(missing)}")
    for key in asked_keys:
        if raw_verdicts[key] not in VERDICTS:
            return EvaluatorResult(
                ok=False, error=f"bad verdict token {raw_verdicts[key]!r} for {key}"
            )

    findings: list[Finding] = []
    raw_findings = data.get("findings", [])
    if not isinstance(raw_findings, list):
        return EvaluatorResult(ok=False, error="malformed response: findings must be a list")
    for entry in raw_findings:
        if not isinstance(entry, dict):
            return EvaluatorResult(ok=False, error="malformed finding entry")
        check = entry.get("check")
        line = entry.get("line")
        severity = entry.get("severity")
        issue = entry.get("issue", "")
        if check not in CHECK_KEYS or check in HUMAN_REVIEW_CHECKS:
            return EvaluatorResult(ok=False, error=f"finding for invalid check {check!r}")
        if not isinstance(line, int) or isinstance(line, bool) or line < 1:
            return EvaluatorResult(ok=False, error=f"finding with bad line {line!r}")
        if severity not in SEVERITIES:
            return EvaluatorResult(ok=False, error=f"finding with bad severity {severity!r}")
        if not isinstance(issue, str):
            return EvaluatorResult(ok=False, error="finding with non-text issue")
        findings.append(
            Finding(
                check=check,
                severity=severity,
                file_id=file_id,
                line=line,
                issue=issue,
                source="llm",
            )
        )

    # Human-review-only checks stay UNKNOWN regardless of what came back.
    verdicts = {key: raw_verdicts[key] for key in sorted(asked_keys)}
    for key in human_keys:
        verdicts[key] = UNKNOWN
    return EvaluatorResult(ok=True, verdicts=verdicts, findings=findings)


def request_llm_audit(
    file: SourceFile,
    checks: list[str],
    evaluator,
    context_budget: int = EndpointConfig.context_budget,
) -> EvaluatorResult:
    """One evaluator round-trip for one file; never raises on evaluator faults."""
    asked = [c for c in checks if c not in HUMAN_REVIEW_CHECKS]
    request, truncated = build_audit_request(file, asked, context_budget)
    try:
        response_text = evaluator.complete(json.dumps(request))
    except Exception as err:  # transport failure: scan proceeds static-only
        return EvaluatorResult(ok=False, truncated=truncated, error=f"evaluator failure: {err}")
    result = _parse_response(response_text, asked, file.file_id)
    result.truncated = truncated
    return result


def merge_hybrid(static_findings: list[Finding], llm_findings: list[Finding]) -> list[Finding]:
    """Union with source tags; static findings are never removed or downgraded."""
    merged = list(static_findings) + [
        Finding(
            check=f.check,
            severity=f.severity,
            file_id=f.file_id,
            line=f.line,
            issue=f.issue,
            trigger_kind=f.trigger_kind,
            source="llm",
        )
        for f in llm_findings
    ]
    merged.sort(key=lambda f: (f.file_id, f.line, f.check, f.source != "static"))
    return merged


@dataclass
class SuppressionReport:
    static_fail_count: int
    suppressed_count: int
    both_fail_count: int
    unknown_count: int
    suppression_rate: float | None  # None when there is nothing to suppress
    matrix: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def rate_percent(self) -> int | None:
        if self.suppression_rate is None:
            return None
        return round(self.suppression_rate * 100)

    def to_dict(self) -> dict:
        return {
            "static_fail_count": self.static_fail_count,
            "suppressed_count": self.suppressed_count,
            "both_fail_count": self.both_fail_count,
            "unknown_count": self.unknown_count,
            "suppression_rate": self.suppression_rate,
            "rate_percent": self.rate_percent,
            "matrix": self.matrix,
        }


def suppression_report(
    static_verdicts: dict[str, str], llm_verdicts: dict[str, str]
) -> SuppressionReport:
    """Static-FAIL versus evaluator-verdict matrix over one check set.

    The rate is suppressed / static-FAIL; with zero static FAILs it is
    reported as not-applicable (None), never as zero by convention.
    """
    matrix: dict[str, dict[str, str]] = {}
    suppressed = both = unknown = 0
    static_fails = [k for k, v in static_verdicts.items() if v == FAIL]
    for key in static_fails:
        llm_value = llm_verdicts.get(key, UNKNOWN)
        matrix[key] = {"static": FAIL, "llm": llm_value}
        if llm_value == PASS:
            suppressed += 1
        elif llm_value == FAIL:
            both += 1
        else:
            unknown += 1
    total = len(static_fails)
    rate = (suppressed / total) if total else None
    return SuppressionReport(
        static_fail_count=total,
        suppressed_count=suppressed,
        both_fail_count=both,
        unknown_count=unknown,
        suppression_rate=rate,
        matrix=matrix,
    )
