"""Acceptance gate: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion; any assertion failure marks that criterion red.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import socket
import statistics
import time

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus_sources import (
    CONCEALING_HANDLER,
    PROPAGATING_GUARD,
    expected_severities,
    synthetic_corpus,
)

from failaudit.cli import main
from failaudit.corpus import ARM_AI, ARM_HUMAN, FileRecord
from failaudit.llm import StubEvaluator, suppression_report
from failaudit.matching import MatchSpec, match_controls
from failaudit.model import SourceFile
from failaudit.parsing import parse_source
from failaudit.report import (
    FAIL,
    PASS,
    UNKNOWN,
    AuditReport,
    ScanMeta,
    aggregate_verdicts,
    emit_report,
    parse_report,
)
from failaudit.research import build_aggregate, validate_privacy
from failaudit.rules import (
    ALLOWED_SEVERITIES,
    AUTOMATED_CHECKS,
    CHECK_KEYS,
    Finding,
    run_all_checks,
)
from failaudit.scan import MODE_HYBRID, MODE_STATIC, ScanConfig, scan_files

from test_matching import brute_force  # the exhaustive selection oracle


def _ok(number: int, description: str) -> None:
    print(f"ACCEPTANCE {number:02d} PASS: {description}")


def _scan_sources(entries, mode=MODE_STATIC, evaluator=None):
    files = [SourceFile.from_content(path, source) for path, source in entries]
    return scan_files(files, ScanConfig(mode=mode, evaluator=evaluator, workers=1))


def test_criterion_01_canonical_fixtures():
    started = time.perf_counter()
    concealing = parse_source(SourceFile.from_content("app/process.py", CONCEALING_HANDLER))
    findings = run_all_checks(concealing)
    c01 = [f for f in findings if f.check == "C01"]
    c03 = [f for f in findings if f.check == "C03"]
    assert len(c01) == 1 and c01[0].severity == "HIGH"
    assert len(c03) == 1
    assert len(findings) == 2

    outcome = _scan_sources([("app/process.py", CONCEALING_HANDLER)])
    assert outcome.report.verdicts["success_integrity"] == FAIL

    propagating = parse_source(SourceFile.from_content("app/pipeline.py", PROPAGATING_GUARD))
    clean = run_all_checks(propagating)
    assert [f for f in clean if f.check in ("C01", "C03")] == []

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"canonical fixtures took {elapsed:.3f}s"
    _ok(1, "canonical fixtures classify as concealed vs propagated in < 1 s")


_report_findings = st.lists(
    st.builds(
        lambda check, line, fid: Finding(
            check=check,
            severity=sorted(ALLOWED_SEVERITIES[check])[0],
            file_id=fid,
            line=line,
            issue="synthetic finding",
            trigger_kind="synthetic",
        ),
        check=st.sampled_from(AUTOMATED_CHECKS),
        line=st.integers(min_value=1, max_value=4000),
        fid=st.sampled_from(["app/a.py", "web/b.js", "src/c.ts"]),
    ),
    max_size=6,
)


@settings(max_examples=50, deadline=None)
@given(findings=_report_findings, with_tests=st.booleans())
def test_criterion_02_schema_conformance(findings, with_tests):
    coverage = {check: 1 for check in AUTOMATED_CHECKS}
    if not with_tests:
        coverage["C14"] = 0
    report = AuditReport(
        verdicts=aggregate_verdicts(findings, coverage),
        findings=sorted(findings, key=lambda f: f.sort_key()),
        scan_meta=ScanMeta(files_by_language={"python": 3}),
    )
    text = emit_report(report)
    body = yaml.safe_load(text)["ai_failure_audit"]
    verdict_keys = [k for k in body if k in CHECK_KEYS.values()]
    assert verdict_keys == list(CHECK_KEYS.values())
    assert body["audit_version"] == "1.2"
    parsed = parse_report(text)
    assert emit_report(parsed) == text
    assert parsed.findings == report.findings


def test_criterion_02_line():
    _ok(2, "15 schema keys in order, version 1.2, lossless round-trip over 50 reports")


@pytest.fixture(scope="module")
def synthetic_scan_results():
    entries = synthetic_corpus(200, seed=17)
    results = []
    for path, source in entries:
        outcome = _scan_sources([(path, source)])
        results.append((path, outcome.report))
    return results


def test_criterion_03_unknown_semantics(synthetic_scan_results):
    assert len(synthetic_scan_results) == 200
    for path, report in synthetic_scan_results:
        assert report.verdicts["logic_consistency"] == UNKNOWN, path
        assert report.verdicts["lineage"] == UNKNOWN, path
        for finding in report.findings:
            assert finding.check not in ("C07", "C12"), path
    _ok(3, "logic_consistency/lineage UNKNOWN in 100% of 200 reports; no C07/C12 findings")


def test_criterion_04_severity_clustering(synthetic_scan_results):
    observed: dict[str, set[str]] = {}
    for _, report in synthetic_scan_results:
        for finding in report.findings:
            observed.setdefault(finding.check, set()).add(finding.severity)
    for check, severities in observed.items():
        assert severities <= ALLOWED_SEVERITIES[check], (check, severities)
    guaranteed = expected_severities()
    for check, severities in guaranteed.items():
        assert observed.get(check) == severities, (check, observed.get(check))
    singles = {
        "C01": "HIGH", "C02": "HIGH", "C05": "HIGH", "C09": "HIGH", "C10": "HIGH",
        "C11": "HIGH", "C15": "HIGH", "C06": "MEDIUM", "C08": "MEDIUM",
        "C13": "MEDIUM", "C04": "LOW",
    }
    for check, severity in singles.items():
        assert observed[check] == {severity}, check
    assert observed["C03"] == {"HIGH", "MEDIUM"}
    assert observed["C14"] == {"HIGH", "MEDIUM"}
    _ok(4, "severity clustering over the 200-file corpus matches the table exactly")


def test_criterion_05_no_dedup_counting():
    blocks = "\n".join(
        f"""def step{i}(x):
    try:
        run{i}(x)
    except Exception:
        pass
"""
        for i in range(5)
    )
    model = parse_source(SourceFile.from_content("app/steps.py", blocks))
    c03 = [f for f in run_all_checks(model) if f.check == "C03"]
    assert len(c03) == 5
    assert len({f.line for f in c03}) == 5
    _ok(5, "five identical broad-catch-pass blocks yield exactly five C03 findings")


def _write_arm(path, arm, spec):
    with open(path, "w", encoding="utf-8") as fh:
        for language, files, high in spec:
            for i in range(files):
                findings = (
                    [{"check": "C03", "severity": "HIGH", "line": 1}] if i < high else []
                )
                fh.write(
                    json.dumps(
                        {
                            "file_id": f"{arm}-{language}-{i}",
                            "repo_id": f"{arm}-repo-{i % 50}",
                            "language": language,
                            "line_count": 400,
                            "arm": arm,
                            "findings": findings,
                        }
                    )
                    + "\n"
                )
    return path


def test_criterion_06_arithmetic_replay(tmp_path, capsys):
    pilot_a = _write_arm(tmp_path / "pilotA.jsonl", ARM_AI, [("python", 300, 80)])
    pilot_b = _write_arm(tmp_path / "pilotB.jsonl", ARM_HUMAN, [("python", 300, 61)])
    assert main(["corpus", "compare", str(pilot_a), str(pilot_b)]) == 0
    out = capsys.readouterr().out
    assert "high_per_file=0.267" in out
    assert "high_per_file=0.203" in out
    assert "ratio (A/B): 1.32" in out
    assert abs(0.267 / 0.203 - 1.32) <= 0.005

    strict_a = _write_arm(
        tmp_path / "strictA.jsonl",
        ARM_AI,
        [("javascript", 327, 223), ("python", 311, 91), ("typescript", 317, 101)],
    )
    strict_b = _write_arm(
        tmp_path / "strictB.jsonl",
        ARM_HUMAN,
        [("javascript", 327, 120), ("python", 311, 40), ("typescript", 317, 71)],
    )
    assert main(["corpus", "compare", str(strict_a), str(strict_b), "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["high_per_file"] == {"A": 0.435, "B": 0.242}
    assert data["ratio"] == "1.80"
    assert abs(0.435 / 0.242 - 1.80) <= 0.005
    ratios = {row["language"]: float(row["ratio"]) for row in data["per_language"]}
    assert abs(ratios["javascript"] - 1.86) <= 0.01
    assert abs(ratios["python"] - 2.27) <= 0.01
    assert abs(ratios["typescript"] - 1.42) <= 0.01
    _ok(6, "published arm/ language rates and ratios replay within tolerance")


def test_criterion_07_matching_oracle():
    rng = random.Random(1234)

    # the canonical 12-file / 3-repo pool under cap 2 against the oracle
    arm_a = [
        FileRecord(f"a{i}", f"armrepo{i}", "python", lines, ARM_AI)
        for i, lines in enumerate([150, 150, 250, 250, 500, 900])
    ]
    pool = [
        FileRecord(f"p{i}", f"r{i % 3}", "python", rng.choice([150, 250, 500, 900]), ARM_HUMAN)
        for i in range(12)
    ]
    spec = MatchSpec(per_repo_cap=2, seed=42)
    got = sorted(pool.index(r) for r in match_controls(pool, arm_a, spec).selected)
    assert got == brute_force(pool, arm_a, spec)

    # cap safety across 100 random pools
    for trial in range(100):
        languages = ["python", "javascript", "typescript"]
        arm = [
            FileRecord(
                f"a{i}", f"ar{i}", rng.choice(languages), rng.choice([120, 300, 700, 1500]),
                ARM_AI,
            )
            for i in range(rng.randrange(4, 10))
        ]
        candidates = [
            FileRecord(
                f"p{i}", f"r{rng.randrange(4)}", rng.choice(languages),
                rng.choice([120, 300, 700, 1500]), ARM_HUMAN,
            )
            for i in range(rng.randrange(6, 18))
        ]
        cap = rng.choice([1, 2, 3, 4])
        result = match_controls(candidates, arm, MatchSpec(per_repo_cap=cap, seed=trial))
        per_repo: dict[str, int] = {}
        for record in result.selected:
            per_repo[record.repo_id] = per_repo.get(record.repo_id, 0) + 1
        assert all(v <= cap for v in per_repo.values()), f"trial {trial}"
    _ok(7, "matcher equals brute-force enumeration; repo cap held over 100 random pools")


def test_criterion_08_bootstrap_oracle():
    from failaudit.corpus import bootstrap_repo_sensitivity

    means = [0.1, 0.9, 0.4, 0.6, 0.2, 0.8, 0.35, 0.65, 0.5, 0.05]
    reference = 0.45
    exact = sum(
        1 for pair in itertools.combinations(means, 2) if statistics.fmean(pair) >= reference
    ) / math.comb(len(means), 2)
    sampled = bootstrap_repo_sensitivity(means, reference, draws=5000, draw_size=2, seed=9)
    assert abs(sampled.exceed_probability - exact) <= 0.02

    assert bootstrap_repo_sensitivity([2.0] * 10, 1.0, 5000, 2, 1).exceed_probability == 1.0
    assert bootstrap_repo_sensitivity([0.5] * 10, 1.0, 5000, 2, 1).exceed_probability == 0.0
    _ok(8, "bootstrap P matches the exact combinatorial oracle; dominance is exact")


def test_criterion_09_suppression_arithmetic():
    keys = [CHECK_KEYS[c] for c in AUTOMATED_CHECKS]

    def static_with(fails: int) -> dict:
        return {k: (FAIL if i < fails else PASS) for i, k in enumerate(keys)}

    seven = suppression_report(static_with(7), {k: PASS for k in keys})
    eight = suppression_report(static_with(8), {k: PASS for k in keys})
    assert seven.rate_percent == 100 and seven.suppressed_count == 7
    assert eight.rate_percent == 100 and eight.suppressed_count == 8

    static = static_with(7)
    llm = dict(static)
    llm[keys[0]] = PASS
    llm[keys[1]] = PASS
    partial = suppression_report(static, llm)
    assert (partial.suppressed_count, partial.both_fail_count) == (2, 5)
    assert partial.rate_percent == 29  # 2/7 rounded

    clean = suppression_report({k: PASS for k in keys}, {k: PASS for k in keys})
    assert clean.suppression_rate is None and clean.rate_percent is None
    _ok(9, "suppression rows reproduce 100%/100%/29%; zero static FAILs is not-applicable")


def test_criterion_10_privacy_gate():
    rng = random.Random(4242)
    base_report = AuditReport(
        verdicts=aggregate_verdicts([], {check: 1 for check in AUTOMATED_CHECKS}),
        findings=[],
        scan_meta=ScanMeta(files_by_language={"python": 4}),
    )
    paths = ["src/app.py", "lib\\core.ts", "pkg/mod/util.js", "deep/a/b/c.py", "ui/view.tsx"]
    snippet = "def handler(x):\n    return x\n\nimport json\nvalue = json.loads(x);"
    words = ["alpha", "beta", "gamma", "delta", "metric", "count", "arm", "scan"]

    seeded_rejected = 0
    clean_rejected = 0
    for i in range(1000):
        submission = build_aggregate(base_report, scan_id=f"{i:032x}").to_dict()
        if i % 2 == 0:
            submission["annotation"] = rng.choice(paths) if rng.random() < 0.5 else snippet
            if validate_privacy(submission):
                seeded_rejected += 1
        else:
            submission["annotation"] = " ".join(rng.choice(words) for _ in range(5))
            if validate_privacy(submission):
                clean_rejected += 1
    assert seeded_rejected == 500, "every seeded violation must be rejected"
    assert clean_rejected == 0, "no clean submission may be rejected"
    _ok(10, "1,000-submission fuzz: 100% seeded rejections, 0% false rejects")


def test_criterion_11_backbone_immunity(fixture_corpus, monkeypatch):
    from failaudit.scan import load_source_files

    files = [
        SourceFile.from_bytes(rel, path.read_bytes())
        for path, rel in load_source_files([fixture_corpus])
    ]

    def deny(*args, **kwargs):
        raise AssertionError("network use in static mode")

    monkeypatch.setattr(socket.socket, "connect", deny)
    monkeypatch.setattr(socket, "create_connection", deny)

    static = scan_files(files, ScanConfig(mode=MODE_STATIC, workers=1))
    hybrid = scan_files(files, ScanConfig(mode=MODE_HYBRID, evaluator=StubEvaluator(), workers=1))
    assert hybrid.static_findings == static.report.findings
    assert static.report.findings, "fixture corpus must produce deterministic findings"
    _ok(11, "hybrid static findings identical to static mode; static ran network-denied")


def test_criterion_12_determinism(fixture_corpus, tmp_path, capsys):
    first = tmp_path / "first.yaml"
    second = tmp_path / "second.yaml"
    assert main(["scan", str(fixture_corpus), "--seed", "11", "--out", str(first)]) == 2
    assert main(["scan", str(fixture_corpus), "--seed", "11", "--out", str(second)]) == 2
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()

    arm_a = _write_arm(tmp_path / "a.jsonl", ARM_AI, [("python", 40, 9)])
    arm_b = _write_arm(tmp_path / "b.jsonl", ARM_HUMAN, [("python", 40, 5)])
    main(["compare", str(arm_a), str(arm_b), "--format", "json"])
    first_out = capsys.readouterr().out
    main(["compare", str(arm_a), str(arm_b), "--format", "json"])
    second_out = capsys.readouterr().out
    assert first_out == second_out
    _ok(12, "consecutive same-seed runs emit byte-identical machine-readable output")
