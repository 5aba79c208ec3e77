"""Two-arm corpus comparison: summaries, differentials, breakdowns, bootstrap.

Arms are lists of file records loaded from line-delimited manifests. Every
count is a straight sum over records with no deduplication; the headline
metric is high-severity findings per file. Displayed per-file rates are
rounded to three decimals and the differential ratio is the quotient of the
rounded rates (shown at two decimals), which is how the published style of
these tables composes; raw rates stay available on the summaries.

Direction labels use a configurable relative parity band (default 5%):
two values within the band of each other are reported as approximate parity.
"""

from __future__ import annotations

import json
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from failaudit.languages import LANGUAGES
from failaudit.rules import AUTOMATED_CHECKS, CHECK_KEYS, SEVERITIES, Finding

ARM_AI = "A_ai"
ARM_HUMAN = "B_human"
ARMS = (ARM_AI, ARM_HUMAN)

SIZE_BOUNDS = (100, 2000)
PARITY_BAND = 0.05

DIRECTION_A = "A>B"
DIRECTION_B = "B>A"
DIRECTION_PARITY = "parity"


class ManifestError(ValueError):
    pass


class EmptyArmError(ValueError):
    """A per-file ratio is undefined over an empty arm."""


@dataclass(frozen=True)
class FileRecord:
    file_id: str
    repo_id: str
    language: str
    line_count: int
    arm: str
    findings: tuple[Finding, ...] = ()


@dataclass(frozen=True)
class ArmSummary:
    arm: str
    files: int
    high: int
    medium: int
    low: int
    repos: int

    @property
    def high_per_file(self) -> float:
        return self.high / self.files

    @property
    def rate_display(self) -> float:
        return round(self.high_per_file, 3)


def record_from_dict(data: dict, index: int = 0) -> FileRecord:
    where = f"record {index}"
    for key in ("file_id", "repo_id", "language", "line_count", "arm"):
        if key not in data:
            raise ManifestError(f"{where}: missing field {key!r}")
    if data["arm"] not in ARMS:
        raise ManifestError(f"{where}: arm must be one of {ARMS}, got {data['arm']!r}")
    if data["language"] not in LANGUAGES:
        raise ManifestError(f"{where}: unknown language {data['language']!r}")
    line_count = data["line_count"]
    if not isinstance(line_count, int) or line_count < 0:
        raise ManifestError(f"{where}: bad line_count {line_count!r}")
    findings = []
    for fi, raw in enumerate(data.get("findings", []) or []):
        check = raw.get("check")
        severity = raw.get("severity")
        if check not in CHECK_KEYS:
            raise ManifestError(f"{where}: finding {fi} has unknown check {check!r}")
        if severity not in SEVERITIES:
            raise ManifestError(f"{where}: finding {fi} has bad severity {severity!r}")
        findings.append(
            Finding(
                check=check,
                severity=severity,
                file_id=data["file_id"],
                line=int(raw.get("line", 1)),
                issue=raw.get("issue", ""),
            )
        )
    return FileRecord(
        file_id=data["file_id"],
        repo_id=data["repo_id"],
        language=data["language"],
        line_count=line_count,
        arm=data["arm"],
        findings=tuple(findings),
    )


def record_to_dict(record: FileRecord) -> dict:
    return {
        "file_id": record.file_id,
        "repo_id": record.repo_id,
        "language": record.language,
        "line_count": record.line_count,
        "arm": record.arm,
        "findings": [
            {"check": f.check, "severity": f.severity, "line": f.line}
            for f in record.findings
        ],
    }


def load_manifest(path: str | Path, size_filter: bool = False) -> list[FileRecord]:
    """Read one line-delimited manifest; optionally apply the size filter."""
    records: list[FileRecord] = []
    with open(path, "r", encoding="utf-8") as handle:
        for index, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as err:
                raise ManifestError(f"{path}: line {index + 1} is not valid JSON: {err}")
            records.append(record_from_dict(data, index))
    if size_filter:
        records = [r for r in records if SIZE_BOUNDS[0] <= r.line_count <= SIZE_BOUNDS[1]]
    return records


def write_manifest(records: list[FileRecord], path: str | Path) -> int:
    lines = [json.dumps(record_to_dict(r), ensure_ascii=False) for r in records]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def _severity_counts(records: list[FileRecord]) -> tuple[int, int, int]:
    high = medium = low = 0
    for record in records:
        for f in record.findings:
            if f.severity == "HIGH":
                high += 1
            elif f.severity == "MEDIUM":
                medium += 1
            else:
                low += 1
    return high, medium, low


def summarize_arm(records: list[FileRecord]) -> ArmSummary:
    if not records:
        raise EmptyArmError("cannot summarize an empty arm (per-file rate undefined)")
    arms = {r.arm for r in records}
    if len(arms) != 1:
        raise ValueError(f"records span multiple arms: {sorted(arms)}")
    high, medium, low = _severity_counts(records)
    return ArmSummary(
        arm=records[0].arm,
        files=len(records),
        high=high,
        medium=medium,
        low=low,
        repos=len({r.repo_id for r in records}),
    )


def _direction(value_a: float, value_b: float, parity_band: float) -> str:
    reference = max(value_a, value_b)
    if reference == 0:
        return DIRECTION_PARITY
    if abs(value_a - value_b) <= parity_band * reference:
        return DIRECTION_PARITY
    return DIRECTION_A if value_a > value_b else DIRECTION_B


@dataclass(frozen=True)
class ArmComparison:
    summary_a: ArmSummary
    summary_b: ArmSummary
    rate_a: float  # 3 d.p.
    rate_b: float  # 3 d.p.
    ratio: float | None  # quotient of the rounded rates; inf sentinel; None for 0/0
    direction: str
    severity_deltas: dict[str, int] = field(default_factory=dict)

    @property
    def ratio_display(self) -> str:
        if self.ratio is None:
            return "n/a"
        if math.isinf(self.ratio):
            return "inf"
        return f"{self.ratio:.2f}"


def compare_arms(
    a: ArmSummary, b: ArmSummary, parity_band: float = PARITY_BAND
) -> ArmComparison:
    rate_a = a.rate_display
    rate_b = b.rate_display
    if rate_b == 0:
        ratio = math.inf if rate_a > 0 else None
    else:
        ratio = rate_a / rate_b
    return ArmComparison(
        summary_a=a,
        summary_b=b,
        rate_a=rate_a,
        rate_b=rate_b,
        ratio=ratio,
        direction=_direction(rate_a, rate_b, parity_band),
        severity_deltas={
            "HIGH": a.high - b.high,
            "MEDIUM": a.medium - b.medium,
            "LOW": a.low - b.low,
        },
    )


@dataclass(frozen=True)
class LanguageComparison:
    language: str
    comparable: bool
    summary_a: ArmSummary | None
    summary_b: ArmSummary | None
    comparison: ArmComparison | None


def split_arms(records: list[FileRecord]) -> tuple[list[FileRecord], list[FileRecord]]:
    arm_a = [r for r in records if r.arm == ARM_AI]
    arm_b = [r for r in records if r.arm == ARM_HUMAN]
    return arm_a, arm_b


def per_language_breakdown(
    records: list[FileRecord], parity_band: float = PARITY_BAND
) -> list[LanguageComparison]:
    arm_a, arm_b = split_arms(records)
    out: list[LanguageComparison] = []
    languages = sorted({r.language for r in records})
    for language in languages:
        in_a = [r for r in arm_a if r.language == language]
        in_b = [r for r in arm_b if r.language == language]
        if not in_a or not in_b:
            out.append(
                LanguageComparison(
                    language=language,
                    comparable=False,
                    summary_a=summarize_arm(in_a) if in_a else None,
                    summary_b=summarize_arm(in_b) if in_b else None,
                    comparison=None,
                )
            )
            continue
        summary_a = summarize_arm(in_a)
        summary_b = summarize_arm(in_b)
        out.append(
            LanguageComparison(
                language=language,
                comparable=True,
                summary_a=summary_a,
                summary_b=summary_b,
                comparison=compare_arms(summary_a, summary_b, parity_band),
            )
        )
    return out


@dataclass(frozen=True)
class CheckComparison:
    check: str
    key: str
    count_a: int
    count_b: int
    direction: str


def per_check_breakdown(
    records: list[FileRecord], parity_band: float = PARITY_BAND
) -> list[CheckComparison]:
    arm_a, arm_b = split_arms(records)

    def counts(side: list[FileRecord]) -> dict[str, int]:
        tally = {check: 0 for check in AUTOMATED_CHECKS}
        for record in side:
            for f in record.findings:
                tally[f.check] = tally.get(f.check, 0) + 1
        return tally

    tall_a = counts(arm_a)
    tall_b = counts(arm_b)
    return [
        CheckComparison(
            check=check,
            key=CHECK_KEYS[check],
            count_a=tall_a.get(check, 0),
            count_b=tall_b.get(check, 0),
            direction=_direction(tall_a.get(check, 0), tall_b.get(check, 0), parity_band),
        )
        for check in AUTOMATED_CHECKS
    ]


@dataclass(frozen=True)
class BootstrapResult:
    draws: int
    draw_size: int
    exceed_probability: float
    seed: int


def bootstrap_repo_sensitivity(
    agent_repo_means: list[float],
    reference_mean: float,
    draws: int,
    draw_size: int,
    seed: int,
) -> BootstrapResult:
    """Probability that a repo-subset mean meets or exceeds the reference.

    Each draw samples ``draw_size`` repositories without replacement; the
    result is the fraction of draws whose mean is >= the reference. The same
    seed always reproduces the same probability.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if draw_size < 1 or draw_size > len(agent_repo_means):
        raise ValueError(
            f"draw_size must be in [1, {len(agent_repo_means)}], got {draw_size}"
        )
    rng = random.Random(seed)
    exceeded = 0
    for _ in range(draws):
        chosen = rng.sample(agent_repo_means, draw_size)
        if statistics.fmean(chosen) >= reference_mean:
            exceeded += 1
    return BootstrapResult(
        draws=draws,
        draw_size=draw_size,
        exceed_probability=exceeded / draws,
        seed=seed,
    )


def conservation_check(records: list[FileRecord]) -> None:
    """Assert count conservation across the breakdowns (sanity invariant)."""
    arm_a, arm_b = split_arms(records)
    for side in (arm_a, arm_b):
        if not side:
            continue
        total_high = _severity_counts(side)[0]
        by_language = 0
        for language in {r.language for r in side}:
            by_language += _severity_counts([r for r in side if r.language == language])[0]
        if by_language != total_high:
            raise AssertionError("per-language HIGH counts do not sum to the arm total")
