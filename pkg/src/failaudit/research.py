"""Aggregate-only research submissions with a privacy gate.

A submission carries counts and verdicts only: no source text, file paths,
repository names, or snippets, ever. The validator enforces that by scanning
every text field for path-like and source-like content, and the JSONL writer
refuses to persist anything the validator rejects.

Validator heuristics (documented contract):
  - path-like: any whitespace-free token containing a / or \\ separator, or
    a word ending in a known code-file extension (``x.py``, ``a.ts``, ...)
  - source-like: three or more lines where any line bears a code marker
    (``def ``, ``return``, ``import``, ``function``, ``=>``, ``;``, braces)

Submission ids are 128 random bits, never derived from scanned content, so a
submission cannot fingerprint a codebase. Writes are line-buffered
whole-lines-only: every record is fully serialized and validated before the
sink is opened, and each line is written in one call, so a reader never sees
a torn record.
"""

from __future__ import annotations

import json
import re
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path

from failaudit import __version__
from failaudit.report import AUDIT_VERSION, AuditReport
from failaudit.rules import AUTOMATED_CHECKS, SEVERITIES

_PATH_LIKE_RE = re.compile(r"\S+[/\\]\S+")
_CODE_FILE_RE = re.compile(
    r"\b[\w.-]+\.(py|pyw|js|jsx|mjs|cjs|ts|tsx|java|rb|go|rs|c|h|cpp|hpp|cs|php)\b"
)
_CODE_MARKER_RE = re.compile(r"(\bdef\s|\breturn\b|\bimport\s|\bfunction\b|=>|[;{}])")


@dataclass(frozen=True)
class PrivacyViolation:
    field: str
    reason: str


@dataclass
class AggregateSubmission:
    audit_version: str
    scan_id: str
    generated_at: str
    tool_version: str
    files_by_language: dict[str, int]
    parse_modes: dict[str, int]
    skipped_count: int
    findings_by_check: dict[str, int]
    findings_by_severity: dict[str, int]
    verdicts: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "audit_version": self.audit_version,
            "scan_id": self.scan_id,
            "generated_at": self.generated_at,
            "tool_version": self.tool_version,
            "files_by_language": dict(self.files_by_language),
            "parse_modes": dict(self.parse_modes),
            "skipped_count": self.skipped_count,
            "findings_by_check": dict(self.findings_by_check),
            "findings_by_severity": dict(self.findings_by_severity),
            "verdicts": dict(self.verdicts),
        }


def new_scan_id(rng=None) -> str:
    """128-bit anonymous id; seeded rng only makes test runs reproducible."""
    if rng is not None:
        return f"{rng.getrandbits(128):032x}"
    return secrets.token_hex(16)


def build_aggregate(
    report: AuditReport,
    scan_id: str | None = None,
    generated_at: str | None = None,
) -> AggregateSubmission:
    """Reduce a report to transmissible aggregates; drops every path field."""
    by_check = {check: 0 for check in AUTOMATED_CHECKS}
    by_severity = {severity: 0 for severity in SEVERITIES}
    for finding in report.findings:
        by_check[finding.check] = by_check.get(finding.check, 0) + 1
        by_severity[finding.severity] += 1
    return AggregateSubmission(
        audit_version=AUDIT_VERSION,
        scan_id=scan_id if scan_id is not None else new_scan_id(),
        generated_at=generated_at
        if generated_at is not None
        else time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        tool_version=__version__,
        files_by_language=dict(report.scan_meta.files_by_language),
        parse_modes=dict(report.scan_meta.parse_modes),
        skipped_count=len(report.scan_meta.skipped),
        findings_by_check=by_check,
        findings_by_severity=by_severity,
        verdicts=dict(report.verdicts),
    )


def _scan_text(value: str, where: str, violations: list[PrivacyViolation]) -> None:
    if _PATH_LIKE_RE.search(value):
        violations.append(PrivacyViolation(where, "path-like content (separator sequence)"))
        return
    if _CODE_FILE_RE.search(value):
        violations.append(PrivacyViolation(where, "file-name-like content (code extension)"))
        return
    lines = value.splitlines()
    if len(lines) >= 3 and any(_CODE_MARKER_RE.search(line) for line in lines):
        violations.append(PrivacyViolation(where, "source-like content (multi-line code)"))


def validate_privacy(submission: AggregateSubmission | dict) -> list[PrivacyViolation]:
    """Empty list when the submission is clean; otherwise the named violations."""
    data = submission.to_dict() if isinstance(submission, AggregateSubmission) else submission
    violations: list[PrivacyViolation] = []

    def walk(value, where: str) -> None:
        if isinstance(value, str):
            _scan_text(value, where, violations)
        elif isinstance(value, dict):
            for key in value:
                walk(value[key], f"{where}.{key}" if where else str(key))
        elif isinstance(value, (list, tuple)):
            for i, item in enumerate(value):
                walk(item, f"{where}[{i}]")

    walk(data, "")
    return violations


@dataclass
class WriteResult:
    appended: int
    rejected: list[tuple[int, list[PrivacyViolation]]] = field(default_factory=list)


def write_jsonl(
    submissions: list[AggregateSubmission | dict], sink_path: str | Path
) -> WriteResult:
    """Append accepted submissions, one JSON object per line.

    Every record is serialized and validated before the sink is touched;
    rejected submissions are returned with their violations and never reach
    the file. An empty accept set leaves the sink untouched.
    """
    accepted_lines: list[str] = []
    rejected: list[tuple[int, list[PrivacyViolation]]] = []
    for index, submission in enumerate(submissions):
        violations = validate_privacy(submission)
        if violations:
            rejected.append((index, violations))
            continue
        data = submission.to_dict() if isinstance(submission, AggregateSubmission) else submission
        accepted_lines.append(json.dumps(data, ensure_ascii=False, sort_keys=False))
    if accepted_lines:
        with open(sink_path, "a", encoding="utf-8") as handle:
            handle.write("".join(line + "\n" for line in accepted_lines))
            handle.flush()
    return WriteResult(appended=len(accepted_lines), rejected=rejected)
