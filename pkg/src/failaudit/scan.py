"""Scan orchestration: walk, parse, evaluate, aggregate.

Parsing and rule evaluation are pure per-file functions, so files fan out to
a worker pool; results are merged in path order, which keeps every scan
output deterministic regardless of worker count. Static mode touches no
network. In llm/hybrid modes, evaluator faults degrade the affected file to
static-only results instead of failing the scan.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from failaudit import languages
from failaudit.lexicons import DEFAULT, Lexicons
from failaudit.model import SourceFile, SyntaxModel, UnreadableContentError
from failaudit.parsing import parse_source
from failaudit.report import AuditReport, FAIL, ScanMeta, aggregate_verdicts
from failaudit.rules import AUTOMATED_CHECKS, Finding, checks_for_model, run_all_checks

MODE_STATIC = "static"
MODE_LLM = "llm"
MODE_HYBRID = "hybrid"
SCAN_MODES = (MODE_STATIC, MODE_LLM, MODE_HYBRID)

SIZE_FILTER_BOUNDS = (100, 2000)


class ScanConfigError(ValueError):
    """Invalid scan configuration (mode/endpoint combinations and the like)."""


@dataclass
class ScanConfig:
    mode: str = MODE_STATIC
    lexicons: Lexicons = field(default_factory=lambda: DEFAULT)
    size_filter: bool = False
    workers: int = 4
    extra_ignore: tuple[str, ...] = ()
    use_default_ignores: bool = True
    evaluator: object | None = None  # required for llm/hybrid
    context_budget: int = 24_000

    def validate(self) -> None:
        if self.mode not in SCAN_MODES:
            raise ScanConfigError(f"unknown scan mode {self.mode!r}")
        if self.mode == MODE_STATIC and self.evaluator is not None:
            raise ScanConfigError("static mode takes no endpoint settings")
        if self.mode in (MODE_LLM, MODE_HYBRID) and self.evaluator is None:
            raise ScanConfigError(f"{self.mode} mode requires an evaluator endpoint")
        if self.workers < 1:
            raise ScanConfigError("workers must be >= 1")


@dataclass
class FileOutcome:
    file: SourceFile
    model: SyntaxModel | None
    findings: list[Finding]
    llm_verdicts: dict[str, str] = field(default_factory=dict)
    llm_error: str | None = None
    truncated: bool = False
    skipped_reason: str | None = None


@dataclass
class ScanOutcome:
    report: AuditReport
    file_outcomes: list[FileOutcome]
    static_findings: list[Finding]

    @property
    def exit_code(self) -> int:
        return 2 if self.report.high_count() > 0 else 0


def load_source_files(
    targets: list[str | Path],
    extra_ignore: tuple[str, ...] = (),
    use_default_ignores: bool = True,
) -> list[tuple[Path, str]]:
    """Resolve targets to (absolute path, scan-relative path) pairs."""
    resolved: list[tuple[Path, str]] = []
    for target in targets:
        target = Path(target)
        if not target.exists():
            raise FileNotFoundError(f"no such file or directory: {target}")
        base = target if target.is_dir() else target.parent
        for path in languages.iter_source_files(
            target, extra_ignore=extra_ignore, use_default_ignores=use_default_ignores
        ):
            rel = path.relative_to(base).as_posix()
            resolved.append((path, rel))
    resolved.sort(key=lambda pair: pair[1])
    return resolved


def _analyze_one(file: SourceFile, config: ScanConfig) -> FileOutcome:
    model = parse_source(file, config.lexicons)
    static_findings = run_all_checks(model, config.lexicons) if config.mode != MODE_LLM else []
    findings = list(static_findings)
    llm_verdicts: dict[str, str] = {}
    llm_error = None
    truncated = False
    if config.mode in (MODE_LLM, MODE_HYBRID):
        from failaudit.llm import merge_hybrid, request_llm_audit

        result = request_llm_audit(
            file, list(AUTOMATED_CHECKS), config.evaluator, config.context_budget
        )
        truncated = result.truncated
        if result.ok:
            llm_verdicts = result.verdicts
            if config.mode == MODE_HYBRID:
                findings = merge_hybrid(static_findings, result.findings)
            else:
                findings = list(result.findings)
        else:
            llm_error = result.error
            if config.mode == MODE_LLM:
                # evaluator failed: fall back to the deterministic engine
                findings = run_all_checks(model, config.lexicons)
    return FileOutcome(
        file=file,
        model=model,
        findings=findings,
        llm_verdicts=llm_verdicts,
        llm_error=llm_error,
        truncated=truncated,
    )


def scan_files(files: list[SourceFile], config: ScanConfig | None = None) -> ScanOutcome:
    """Scan in-memory source files (the path-based entry point builds these)."""
    config = config or ScanConfig()
    config.validate()

    outcomes: list[FileOutcome] = []
    skipped: list[FileOutcome] = []
    eligible: list[SourceFile] = []
    for file in files:
        if file.language == languages.UNSUPPORTED:
            skipped.append(
                FileOutcome(file=file, model=None, findings=[], skipped_reason="unsupported")
            )
            continue
        if config.size_filter and not (
            SIZE_FILTER_BOUNDS[0] <= file.line_count <= SIZE_FILTER_BOUNDS[1]
        ):
            skipped.append(
                FileOutcome(file=file, model=None, findings=[], skipped_reason="size filter")
            )
            continue
        eligible.append(file)

    if config.workers > 1 and len(eligible) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(lambda f: _analyze_one(f, config), eligible))
    else:
        outcomes = [_analyze_one(f, config) for f in eligible]

    return _assemble(outcomes, skipped, config)


def scan_paths(targets: list[str | Path], config: ScanConfig | None = None) -> ScanOutcome:
    config = config or ScanConfig()
    config.validate()
    pairs = load_source_files(
        targets, extra_ignore=config.extra_ignore, use_default_ignores=config.use_default_ignores
    )
    files: list[SourceFile] = []
    unreadable: list[FileOutcome] = []
    for path, rel in pairs:
        try:
            files.append(SourceFile.from_bytes(rel, path.read_bytes()))
        except UnreadableContentError as err:
            placeholder = SourceFile(
                file_id=rel, relative_path=rel, language=languages.detect_language(rel),
                content="", line_count=0,
            )
            unreadable.append(
                FileOutcome(file=placeholder, model=None, findings=[], skipped_reason=str(err))
            )
    outcome = scan_files(files, config)
    if unreadable:
        for item in unreadable:
            outcome.file_outcomes.append(item)
            outcome.report.scan_meta.skipped.append(
                {"file": item.file.relative_path, "reason": item.skipped_reason}
            )
        outcome.report.scan_meta.skipped.sort(key=lambda entry: entry["file"])
    return outcome


def _assemble(
    outcomes: list[FileOutcome], skipped: list[FileOutcome], config: ScanConfig
) -> ScanOutcome:
    outcomes = sorted(outcomes, key=lambda o: o.file.relative_path)
    findings: list[Finding] = []
    static_findings: list[Finding] = []
    coverage: dict[str, int] = {check: 0 for check in AUTOMATED_CHECKS}
    meta = ScanMeta()

    llm_failed_checks: set[str] = set()
    for outcome in outcomes:
        findings.extend(outcome.findings)
        static_findings.extend(f for f in outcome.findings if f.source == "static")
        model = outcome.model
        if model is None:
            continue
        meta.files_by_language[model.file.language] = (
            meta.files_by_language.get(model.file.language, 0) + 1
        )
        meta.parse_modes[model.mode] = meta.parse_modes.get(model.mode, 0) + 1
        if config.mode == MODE_LLM and outcome.llm_verdicts:
            from failaudit.rules import KEY_TO_CHECK

            for key, verdict in outcome.llm_verdicts.items():
                if verdict == FAIL:
                    llm_failed_checks.add(KEY_TO_CHECK[key])
                coverage[KEY_TO_CHECK[key]] = coverage.get(KEY_TO_CHECK[key], 0) + 1
        else:
            for check in checks_for_model(model):
                coverage[check] += 1
            if config.mode == MODE_HYBRID and outcome.llm_verdicts:
                from failaudit.rules import KEY_TO_CHECK

                for key, verdict in outcome.llm_verdicts.items():
                    if verdict == FAIL:
                        llm_failed_checks.add(KEY_TO_CHECK[key])

    for item in skipped:
        if item.skipped_reason == "unsupported":
            meta.unsupported += 1
        else:
            meta.skipped.append(
                {"file": item.file.relative_path, "reason": item.skipped_reason}
            )
    meta.skipped.sort(key=lambda entry: entry["file"])

    findings.sort(key=lambda f: f.sort_key())
    verdicts = aggregate_verdicts(findings, coverage)
    if llm_failed_checks:
        from failaudit.rules import CHECK_KEYS

        for check in llm_failed_checks:
            verdicts[CHECK_KEYS[check]] = FAIL

    report = AuditReport(verdicts=verdicts, findings=findings, scan_meta=meta)
    return ScanOutcome(
        report=report,
        file_outcomes=outcomes + skipped,
        static_findings=sorted(static_findings, key=lambda f: f.sort_key()),
    )
