"""Audit report assembly and the versioned output document.

A report carries one verdict per check plus the finding list. Verdict
semantics are fail-closed: the two human-review-only checks are always
UNKNOWN, an automated check is FAIL exactly when at least one finding exists
for it, and an automated check is UNKNOWN when no file in scope was
analyzable for it (for example the test-coverage check on a scan with no
test files). UNKNOWN is rendered apart from PASS and means "requires human
review", never "safe".

The document is a fixed-order mapping under the ``ai_failure_audit`` key,
version "1.2", with one key per check in catalog order and a findings list
whose entries carry issue / file / line / severity / check. A JSON rendering
of the same structure is available behind a format flag. ``scan_meta`` is an
extension key carrying file counts by language, parse-mode counts and
skipped files; parsers that only know the base schema can ignore it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from failaudit.rules import (
    CHECK_KEYS,
    HUMAN_REVIEW_CHECKS,
    KEY_TO_CHECK,
    SEVERITIES,
    Finding,
)

AUDIT_VERSION = "1.2"

PASS = "PASS"
FAIL = "FAIL"
UNKNOWN = "UNKNOWN"
VERDICTS = (PASS, FAIL, UNKNOWN)

SCHEMA_FORMAT = "schema-1.2"
JSON_FORMAT = "json"

_TRIGGER_SUFFIX = " (trigger: "


class SchemaViolationError(ValueError):
    """Document does not satisfy the audit schema; names the offending key."""

    def __init__(self, key: str, detail: str = ""):
        self.key = key
        message = f"schema violation at {key!r}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class UnsupportedVersionError(ValueError):
    def __init__(self, version: object):
        self.version = version
        super().__init__(f"unsupported audit_version {version!r}; expected {AUDIT_VERSION!r}")


@dataclass
class ScanMeta:
    files_by_language: dict[str, int] = field(default_factory=dict)
    parse_modes: dict[str, int] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)
    unsupported: int = 0

    def to_dict(self) -> dict:
        return {
            "files_by_language": dict(self.files_by_language),
            "parse_modes": dict(self.parse_modes),
            "skipped": list(self.skipped),
            "unsupported": self.unsupported,
        }


@dataclass
class AuditReport:
    verdicts: dict[str, str]
    findings: list[Finding]
    scan_meta: ScanMeta = field(default_factory=ScanMeta)
    audit_version: str = AUDIT_VERSION

    def high_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == "HIGH")


def aggregate_verdicts(findings: list[Finding], coverage: dict[str, int]) -> dict[str, str]:
    """Verdict map from findings plus per-check analyzable-file counts."""
    failed = {f.check for f in findings}
    verdicts: dict[str, str] = {}
    for check, key in CHECK_KEYS.items():
        if check in HUMAN_REVIEW_CHECKS:
            verdicts[key] = UNKNOWN
        elif check in failed:
            verdicts[key] = FAIL
        elif coverage.get(check, 0) <= 0:
            verdicts[key] = UNKNOWN
        else:
            verdicts[key] = PASS
    return verdicts


def _finding_to_entry(finding: Finding) -> dict:
    issue = finding.issue
    if finding.trigger_kind:
        issue = f"{issue}{_TRIGGER_SUFFIX}{finding.trigger_kind})"
    entry = {
        "issue": issue,
        "file": finding.file_id,
        "line": finding.line,
        "severity": finding.severity,
        "check": finding.check,
    }
    if finding.source != "static":
        entry["source"] = finding.source
    return entry


def _entry_to_finding(entry: dict, index: int) -> Finding:
    where = f"findings[{index}]"
    if not isinstance(entry, dict):
        raise SchemaViolationError(where, "finding entry must be a mapping")
    for key in ("issue", "file", "line", "severity", "check"):
        if key not in entry:
            raise SchemaViolationError(f"{where}.{key}", "missing field")
    issue = entry["issue"]
    line = entry["line"]
    severity = entry["severity"]
    check = entry["check"]
    if not isinstance(issue, str) or not isinstance(entry["file"], str):
        raise SchemaViolationError(f"{where}.issue", "issue and file must be text")
    if not isinstance(line, int) or isinstance(line, bool) or line < 0:
        raise SchemaViolationError(f"{where}.line", f"bad line {line!r}")
    if severity not in SEVERITIES:
        raise SchemaViolationError(f"{where}.severity", f"bad severity {severity!r}")
    if check not in CHECK_KEYS or check in HUMAN_REVIEW_CHECKS:
        raise SchemaViolationError(f"{where}.check", f"bad check {check!r}")
    source = entry.get("source", "static")
    if source not in ("static", "llm"):
        raise SchemaViolationError(f"{where}.source", f"bad source {source!r}")
    trigger_kind = ""
    if issue.endswith(")") and _TRIGGER_SUFFIX in issue:
        base, _, tail = issue.rpartition(_TRIGGER_SUFFIX)
        issue, trigger_kind = base, tail[:-1]
    return Finding(
        check=check,
        severity=severity,
        file_id=entry["file"],
        line=line,
        issue=issue,
        trigger_kind=trigger_kind,
        source=source,
    )


def report_to_document(report: AuditReport) -> dict:
    body: dict = {"audit_version": report.audit_version}
    for check, key in CHECK_KEYS.items():
        body[key] = report.verdicts[key]
    body["findings"] = [_finding_to_entry(f) for f in report.findings]
    body["scan_meta"] = report.scan_meta.to_dict()
    return {"ai_failure_audit": body}


def emit_report(report: AuditReport, fmt: str = SCHEMA_FORMAT) -> str:
    """Serialize in the audit document format (or its JSON equivalent)."""
    document = report_to_document(report)
    if fmt == JSON_FORMAT:
        import json

        return json.dumps(document, indent=2, ensure_ascii=False) + "\n"
    if fmt != SCHEMA_FORMAT:
        raise ValueError(f"unknown report format {fmt!r}")
    return yaml.safe_dump(
        document,
        sort_keys=False,
        default_flow_style=False,
        allow_unicode=True,
        width=100,
    )


def parse_report(text: str) -> AuditReport:
    """Parse and validate an audit document (YAML or its JSON equivalent)."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise SchemaViolationError("ai_failure_audit", f"unparseable document: {err}") from err
    if not isinstance(data, dict) or "ai_failure_audit" not in data:
        raise SchemaViolationError("ai_failure_audit", "missing top-level key")
    body = data["ai_failure_audit"]
    if not isinstance(body, dict):
        raise SchemaViolationError("ai_failure_audit", "must be a mapping")
    version = body.get("audit_version")
    if version != AUDIT_VERSION:
        raise UnsupportedVersionError(version)

    verdicts: dict[str, str] = {}
    for check, key in CHECK_KEYS.items():
        if key not in body:
            raise SchemaViolationError(key, "missing check key")
        value = body[key]
        if value not in VERDICTS:
            raise SchemaViolationError(key, f"unknown verdict token {value!r}")
        if check in HUMAN_REVIEW_CHECKS and value != UNKNOWN:
            raise SchemaViolationError(key, "human-review-only checks must be UNKNOWN")
        verdicts[key] = value

    raw_findings = body.get("findings", [])
    if raw_findings is None:
        raw_findings = []
    if not isinstance(raw_findings, list):
        raise SchemaViolationError("findings", "must be a list")
    findings = [_entry_to_finding(entry, i) for i, entry in enumerate(raw_findings)]

    meta_raw = body.get("scan_meta", {}) or {}
    if not isinstance(meta_raw, dict):
        raise SchemaViolationError("scan_meta", "must be a mapping")
    meta = ScanMeta(
        files_by_language=dict(meta_raw.get("files_by_language", {}) or {}),
        parse_modes=dict(meta_raw.get("parse_modes", {}) or {}),
        skipped=list(meta_raw.get("skipped", []) or []),
        unsupported=int(meta_raw.get("unsupported", 0) or 0),
    )
    return AuditReport(verdicts=verdicts, findings=findings, scan_meta=meta, audit_version=version)


def render_summary(report: AuditReport) -> str:
    """Human-readable verdict summary; UNKNOWN is called out for human review."""
    from failaudit.rules import cooccurrence_profiles

    lines: list[str] = []
    fails = [k for k, v in report.verdicts.items() if v == FAIL]
    passes = [k for k, v in report.verdicts.items() if v == PASS]
    unknowns = [k for k, v in report.verdicts.items() if v == UNKNOWN]
    by_severity = {s: 0 for s in SEVERITIES}
    for f in report.findings:
        by_severity[f.severity] += 1
    lines.append(
        f"findings: {len(report.findings)} "
        f"(HIGH {by_severity['HIGH']}, MEDIUM {by_severity['MEDIUM']}, LOW {by_severity['LOW']})"
    )
    if fails:
        lines.append("FAIL: " + ", ".join(f"{KEY_TO_CHECK[k]} {k}" for k in fails))
    if passes:
        lines.append("PASS: " + ", ".join(f"{KEY_TO_CHECK[k]} {k}" for k in passes))
    if unknowns:
        lines.append("requires human review (UNKNOWN is not a neutral result):")
        for key in unknowns:
            lines.append(f"  {KEY_TO_CHECK[key]} {key}")
    tags = cooccurrence_profiles(report.findings)
    if tags:
        lines.append("failure profiles:")
        for tag in tags:
            lines.append(f"  {tag.file_id}: {'+'.join(tag.checks)} -> {tag.label}")
    return "\n".join(lines) + "\n"
