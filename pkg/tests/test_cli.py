from __future__ import annotations

import json
import socket

import pytest
import yaml
from corpus_sources import CONCEALING_HANDLER

from failaudit.cli import main
from failaudit.corpus import ARM_AI, ARM_HUMAN


def _write_arm(path, arm, spec):
    """spec: list of (language, files, high_count)"""
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


@pytest.fixture
def strict_manifests(tmp_path):
    a = _write_arm(
        tmp_path / "armA.jsonl",
        ARM_AI,
        [("javascript", 327, 223), ("python", 311, 91), ("typescript", 317, 101)],
    )
    b = _write_arm(
        tmp_path / "armB.jsonl",
        ARM_HUMAN,
        [("javascript", 327, 120), ("python", 311, 40), ("typescript", 317, 71)],
    )
    return a, b


def test_scan_exit_two_on_high_finding(tmp_path, capsys):
    target = tmp_path / "process.py"
    target.write_text(CONCEALING_HANDLER, encoding="utf-8")
    code = main(["scan", str(target)])
    captured = capsys.readouterr()
    assert code == 2
    document = yaml.safe_load(captured.out)
    body = document["ai_failure_audit"]
    assert body["success_integrity"] == "FAIL"
    assert body["exception_handling"] == "FAIL"
    assert len(body["findings"]) == 2
    assert "requires human review" in captured.err


def test_scan_empty_dir_exits_zero(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["scan", str(empty)])
    captured = capsys.readouterr()
    assert code == 0
    body = yaml.safe_load(captured.out)["ai_failure_audit"]
    assert "FAIL" not in body.values()


def test_scan_json_format(tmp_path, capsys):
    target = tmp_path / "clean.py"
    target.write_text("def add(a, b):\n    return a + b\n", encoding="utf-8")
    code = main(["scan", str(target), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    data = json.loads(captured.out)
    assert data["ai_failure_audit"]["audit_version"] == "1.2"


def test_scan_out_and_figure(tmp_path, fixture_corpus, capsys):
    out = tmp_path / "report.yaml"
    figure = tmp_path / "checks.png"
    code = main(["scan", str(fixture_corpus), "--out", str(out), "--figure", str(figure)])
    capsys.readouterr()
    assert code == 2
    assert out.exists() and figure.stat().st_size > 0
    body = yaml.safe_load(out.read_text())["ai_failure_audit"]
    assert body["scan_meta"]["parse_modes"]["lexical_fallback"] >= 1


def test_scan_research_sink(tmp_path, capsys):
    target = tmp_path / "process.py"
    target.write_text(CONCEALING_HANDLER, encoding="utf-8")
    sink = tmp_path / "sink.jsonl"
    code = main(
        ["scan", str(target), "--seed", "7", "--submit-research-aggregate", str(sink)]
    )
    capsys.readouterr()
    assert code == 2
    line = json.loads(sink.read_text().splitlines()[0])
    assert line["findings_by_severity"]["HIGH"] == 1
    assert "process.py" not in sink.read_text()

    # same seed appends an identical scan id
    main(["scan", str(target), "--seed", "7", "--submit-research-aggregate", str(sink)])
    capsys.readouterr()
    first, second = [json.loads(l) for l in sink.read_text().splitlines()]
    assert first["scan_id"] == second["scan_id"]


def test_scan_rejects_endpoint_in_static_mode(tmp_path, capsys):
    target = tmp_path / "x.py"
    target.write_text("x = 1\n")
    code = main(["scan", str(target), "--endpoint-url", "http://localhost:1"])
    captured = capsys.readouterr()
    assert code == 1
    assert "static" in captured.err


def test_unknown_flag_exits_one(tmp_path, capsys):
    code = main(["scan", str(tmp_path), "--bogus"])
    captured = capsys.readouterr()
    assert code == 1
    assert "error" in captured.err


def test_missing_target_exits_one(tmp_path, capsys):
    code = main(["scan", str(tmp_path / "nope")])
    captured = capsys.readouterr()
    assert code == 1
    assert "no such file" in captured.err


def test_static_scan_with_network_denied(tmp_path, capsys, monkeypatch):
    def deny(*args, **kwargs):
        raise AssertionError("network use in static mode")

    monkeypatch.setattr(socket.socket, "connect", deny)
    monkeypatch.setattr(socket, "create_connection", deny)
    target = tmp_path / "process.py"
    target.write_text(CONCEALING_HANDLER, encoding="utf-8")
    code = main(["scan", str(target), "--mode", "static"])
    capsys.readouterr()
    assert code == 2


def test_hybrid_mode_with_stub_endpoint(tmp_path, capsys):
    target = tmp_path / "process.py"
    target.write_text(CONCEALING_HANDLER, encoding="utf-8")
    static_code = main(["scan", str(target), "--format", "json"])
    static_out = capsys.readouterr().out
    hybrid_code = main(
        ["scan", str(target), "--mode", "hybrid", "--endpoint-url", "stub:all-pass",
         "--format", "json"]
    )
    hybrid_out = capsys.readouterr().out
    assert static_code == hybrid_code == 2
    static_findings = json.loads(static_out)["ai_failure_audit"]["findings"]
    hybrid_findings = json.loads(hybrid_out)["ai_failure_audit"]["findings"]
    assert static_findings == hybrid_findings


def test_lexicon_override_flag(tmp_path, capsys):
    target = tmp_path / "spin.py"
    target.write_text("def spin(o):\n    return random.choice(o)\n", encoding="utf-8")
    overrides = tmp_path / "lex.json"
    overrides.write_text(json.dumps({"random": []}), encoding="utf-8")

    assert main(["scan", str(target)]) == 2
    capsys.readouterr()
    assert main(["scan", str(target), "--lexicons", str(overrides)]) == 0
    capsys.readouterr()


def test_compare_prints_published_numbers(strict_manifests, capsys):
    a, b = strict_manifests
    code = main(["compare", str(a), str(b)])
    captured = capsys.readouterr()
    assert code == 0
    assert "high_per_file=0.435" in captured.out
    assert "high_per_file=0.242" in captured.out
    assert "ratio (A/B): 1.80" in captured.out
    for token in ("1.86", "2.27", "1.42"):
        assert token in captured.out


def test_corpus_compare_alias_and_json(strict_manifests, capsys):
    a, b = strict_manifests
    code = main(["corpus", "compare", str(a), str(b), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    data = json.loads(captured.out)
    assert data["ratio"] == "1.80"
    languages = {row["language"]: row["ratio"] for row in data["per_language"]}
    assert languages == {"javascript": "1.86", "python": "2.27", "typescript": "1.42"}


def test_compare_figure(strict_manifests, tmp_path, capsys):
    a, b = strict_manifests
    figure = tmp_path / "rates.png"
    code = main(["compare", str(a), str(b), "--figure", str(figure)])
    capsys.readouterr()
    assert code == 0
    assert figure.stat().st_size > 0


def test_compare_reports_mode(tmp_path, capsys):
    target = tmp_path / "process.py"
    target.write_text(CONCEALING_HANDLER, encoding="utf-8")
    first = tmp_path / "a.yaml"
    second = tmp_path / "b.yaml"
    main(["scan", str(target), "--out", str(first)])
    main(["scan", str(target), "--out", str(second)])
    capsys.readouterr()
    code = main(["compare", str(first), str(second), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    data = json.loads(captured.out)
    assert all(row["same"] for row in data["verdicts"])


def test_corpus_summarize(strict_manifests, capsys):
    a, _ = strict_manifests
    code = main(["corpus", "summarize", str(a), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    rows = json.loads(captured.out)
    assert rows[0]["arm"] == ARM_AI
    assert rows[0]["files"] == 955
    assert rows[0]["high_per_file"] == 0.435


def test_corpus_summarize_figure_with_two_arm_manifest(tmp_path, capsys):
    both = tmp_path / "both.jsonl"
    _write_arm(both, ARM_AI, [("python", 10, 3)])
    with open(both, "a", encoding="utf-8") as fh:
        with open(_write_arm(tmp_path / "b.jsonl", ARM_HUMAN, [("python", 10, 1)])) as src:
            fh.write(src.read())
    figure = tmp_path / "arms.png"
    code = main(["corpus", "summarize", str(both), "--figure", str(figure)])
    captured = capsys.readouterr()
    assert code == 0
    assert "arm A_ai" in captured.out and "arm B_human" in captured.out
    assert figure.stat().st_size > 0


def test_scan_worker_count_does_not_change_output(fixture_corpus, tmp_path, capsys):
    serial = tmp_path / "serial.yaml"
    parallel = tmp_path / "parallel.yaml"
    main(["scan", str(fixture_corpus), "--workers", "1", "--out", str(serial)])
    main(["scan", str(fixture_corpus), "--workers", "8", "--out", str(parallel)])
    capsys.readouterr()
    assert serial.read_bytes() == parallel.read_bytes()


def test_corpus_match_cli(tmp_path, capsys):
    arm_a = _write_arm(tmp_path / "a.jsonl", ARM_AI, [("python", 6, 0)])
    pool = _write_arm(tmp_path / "pool.jsonl", ARM_HUMAN, [("python", 9, 0)])
    out = tmp_path / "selection.jsonl"
    code = main(
        ["corpus", "match", "--pool", str(pool), "--arm-a", str(arm_a),
         "--cap", "2", "--seed", "42", "--out", str(out), "--format", "json"]
    )
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    assert payload["selected"] == 6
    assert payload["total_shortfall"] == 0
    assert len(out.read_text().splitlines()) == 6


def test_corpus_bootstrap_cli(tmp_path, capsys):
    means = tmp_path / "means.json"
    means.write_text(json.dumps([1.0] * 6), encoding="utf-8")
    code = main(
        ["corpus", "bootstrap", "--means", str(means), "--reference", "0.5",
         "--draws", "200", "--draw-size", "2", "--seed", "1", "--format", "json"]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert json.loads(captured.out)["exceed_probability"] == 1.0

    code = main(
        ["corpus", "bootstrap", "--means", "0.1,0.2,0.9", "--reference", "0.5",
         "--draws", "100", "--draw-size", "3", "--seed", "1"]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.startswith("P = ")


def test_suppression_cli(tmp_path, capsys):
    concealing = tmp_path / "process.py"
    concealing.write_text(CONCEALING_HANDLER, encoding="utf-8")
    static_doc = tmp_path / "static.yaml"
    main(["scan", str(concealing), "--out", str(static_doc)])
    capsys.readouterr()

    # an all-PASS evaluator report over the same file
    llm_doc = tmp_path / "llm.yaml"
    text = static_doc.read_text().replace("FAIL", "PASS")
    llm_doc.write_text(text, encoding="utf-8")
    code = main(["suppression", str(static_doc), str(llm_doc), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    data = json.loads(captured.out)
    assert data["static_fail_count"] == 2
    assert data["suppressed_count"] == 2
    assert data["rate_percent"] == 100


def test_scan_determinism_byte_identical(fixture_corpus, tmp_path, capsys):
    first = tmp_path / "r1.yaml"
    second = tmp_path / "r2.yaml"
    assert main(["scan", str(fixture_corpus), "--seed", "3", "--out", str(first)]) == 2
    assert main(["scan", str(fixture_corpus), "--seed", "3", "--out", str(second)]) == 2
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()


def test_scan_records_unreadable_files_as_skipped(tmp_path, capsys):
    (tmp_path / "ok.py").write_text("x = 1\n", encoding="utf-8")
    (tmp_path / "blob.py").write_bytes(b"\x00\x01binary")
    code = main(["scan", str(tmp_path), "--format", "json"])
    captured = capsys.readouterr()
    assert code == 0
    meta = json.loads(captured.out)["ai_failure_audit"]["scan_meta"]
    assert meta["files_by_language"] == {"python": 1}
    assert [entry["file"] for entry in meta["skipped"]] == ["blob.py"]


def test_compare_determinism_byte_identical(strict_manifests, capsys):
    a, b = strict_manifests
    main(["compare", str(a), str(b)])
    first = capsys.readouterr().out
    main(["compare", str(a), str(b)])
    second = capsys.readouterr().out
    assert first == second
