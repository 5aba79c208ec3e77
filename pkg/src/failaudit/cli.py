"""Command-line surface.

Subcommands:
  scan         audit files/directories and emit the versioned report
  compare      differential between two arm manifests or two reports
  corpus       summarize | match | bootstrap | compare (analytics workflows)
  suppression  static-FAIL vs evaluator-verdict matrix from two reports

Machine-readable documents go to stdout (or --out); human summaries go to
stderr so piped output stays parseable. Exit codes carry CI-gate semantics
for scans: 0 means the scan completed with no HIGH finding, 2 means at least
one HIGH finding, 1 means the run itself failed. Analytics subcommands exit
0 on success.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from failaudit import __version__
from failaudit.corpus import (
    ARM_AI,
    ARM_HUMAN,
    EmptyArmError,
    ManifestError,
    bootstrap_repo_sensitivity,
    compare_arms,
    load_manifest,
    per_check_breakdown,
    per_language_breakdown,
    split_arms,
    summarize_arm,
    write_manifest,
)
from failaudit.lexicons import Lexicons
from failaudit.llm import EndpointConfig, make_evaluator, suppression_report
from failaudit.matching import MatchSpec, match_controls
from failaudit.report import (
    JSON_FORMAT,
    SCHEMA_FORMAT,
    SchemaViolationError,
    UnsupportedVersionError,
    emit_report,
    parse_report,
    render_summary,
)
from failaudit.research import build_aggregate, new_scan_id, write_jsonl
from failaudit.scan import MODE_STATIC, SCAN_MODES, ScanConfig, ScanConfigError, scan_paths


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2, which collides with the
    HIGH-findings gate; route them through CliError (exit 1) instead."""

    def error(self, message):
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="failaudit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="audit paths and emit a report", parents=[])
    scan.add_argument("targets", nargs="+", help="files or directories to scan")
    scan.add_argument("--mode", choices=SCAN_MODES, default=MODE_STATIC)
    scan.add_argument("--format", choices=[SCHEMA_FORMAT, JSON_FORMAT], default=SCHEMA_FORMAT)
    scan.add_argument("--out", type=Path, help="write the report document here")
    scan.add_argument("--figure", type=Path, help="render findings-per-check chart here")
    scan.add_argument("--seed", type=int, help="seed for run-scoped randomness (scan id)")
    scan.add_argument("--lexicons", type=Path, help="lexicon override file (JSON/YAML)")
    scan.add_argument("--size-filter", action="store_true",
                      help="apply the 100-2000 line study filter")
    scan.add_argument("--workers", type=int, default=4)
    scan.add_argument("--ignore", action="append", default=[],
                      help="extra ignore glob (repeatable)")
    scan.add_argument("--no-default-ignores", action="store_true")
    scan.add_argument("--submit-research-aggregate", type=Path, metavar="SINK",
                      help="append an aggregate-only submission to this JSONL sink")
    scan.add_argument("--endpoint-url", help="evaluator endpoint (llm/hybrid modes)")
    scan.add_argument("--endpoint-model", default="")
    scan.add_argument("--endpoint-timeout", type=float, default=60.0)
    scan.add_argument("--context-budget", type=int, default=24_000)

    compare = sub.add_parser("compare", help="two-arm or two-report differential")
    _add_compare_args(compare)

    corpus = sub.add_parser("corpus", help="corpus analytics")
    corpus_sub = corpus.add_subparsers(dest="corpus_command", required=True)

    summarize = corpus_sub.add_parser("summarize", help="per-arm summary of manifests")
    summarize.add_argument("manifests", nargs="+", type=Path)
    summarize.add_argument("--format", choices=["table", "json"], default="table")
    summarize.add_argument("--size-filter", action="store_true")
    summarize.add_argument("--figure", type=Path)

    match = corpus_sub.add_parser("match", help="strict matched-control selection")
    match.add_argument("--pool", type=Path, required=True)
    match.add_argument("--arm-a", type=Path, required=True)
    match.add_argument("--cap", type=int, default=4, help="max files per repository")
    match.add_argument("--seed", type=int, default=42)
    match.add_argument("--target", type=int, help="overall selection ceiling")
    match.add_argument("--out", type=Path, help="write the selection manifest here")
    match.add_argument("--format", choices=["table", "json"], default="table")
    match.add_argument("--size-filter", action="store_true")

    bootstrap = corpus_sub.add_parser("bootstrap", help="repo-balance sensitivity")
    bootstrap.add_argument("--means", required=True,
                           help="JSON file with repo means, or a comma-separated list")
    bootstrap.add_argument("--reference", type=float, required=True)
    bootstrap.add_argument("--draws", type=int, default=5000)
    bootstrap.add_argument("--draw-size", type=int, required=True)
    bootstrap.add_argument("--seed", type=int, default=42)
    bootstrap.add_argument("--format", choices=["table", "json"], default="table")

    corpus_compare = corpus_sub.add_parser("compare", help="alias of top-level compare")
    _add_compare_args(corpus_compare)

    suppression = sub.add_parser("suppression", help="static vs evaluator suppression matrix")
    suppression.add_argument("static_report", type=Path)
    suppression.add_argument("llm_report", type=Path)
    suppression.add_argument("--format", choices=["table", "json"], default="table")

    return parser


def _add_compare_args(parser) -> None:
    parser.add_argument("side_a", type=Path, help="arm manifest or report document")
    parser.add_argument("side_b", type=Path, help="arm manifest or report document")
    parser.add_argument("--kind", choices=["arms", "reports"],
                        help="default: arms for .jsonl inputs, reports otherwise")
    parser.add_argument("--format", choices=["table", "json"], default="table")
    parser.add_argument("--parity-band", type=float, default=0.05)
    parser.add_argument("--size-filter", action="store_true")
    parser.add_argument("--figure", type=Path,
                        help="render the per-language rate chart here")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "corpus":
            if args.corpus_command == "summarize":
                return _cmd_summarize(args)
            if args.corpus_command == "match":
                return _cmd_match(args)
            if args.corpus_command == "bootstrap":
                return _cmd_bootstrap(args)
            if args.corpus_command == "compare":
                return _cmd_compare(args)
        if args.command == "suppression":
            return _cmd_suppression(args)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as err:
        print(f"failaudit: error: {err}", file=sys.stderr)
        return 1
    except (
        ScanConfigError,
        ManifestError,
        EmptyArmError,
        SchemaViolationError,
        UnsupportedVersionError,
        FileNotFoundError,
        ValueError,
    ) as err:
        print(f"failaudit: error: {err}", file=sys.stderr)
        return 1


def _emit(text: str, out: Path | None) -> None:
    if out is not None:
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_scan(args) -> int:
    evaluator = None
    if args.mode == MODE_STATIC:
        if args.endpoint_url:
            raise CliError("--mode static takes no endpoint settings")
    else:
        if not args.endpoint_url:
            raise CliError(f"--mode {args.mode} requires --endpoint-url")
        evaluator = make_evaluator(
            EndpointConfig(
                base_url=args.endpoint_url,
                model=args.endpoint_model,
                timeout_s=args.endpoint_timeout,
                context_budget=args.context_budget,
            )
        )
    lexicons = Lexicons.from_file(args.lexicons) if args.lexicons else None
    config = ScanConfig(
        mode=args.mode,
        size_filter=args.size_filter,
        workers=args.workers,
        extra_ignore=tuple(args.ignore),
        use_default_ignores=not args.no_default_ignores,
        evaluator=evaluator,
        context_budget=args.context_budget,
    )
    if lexicons is not None:
        config.lexicons = lexicons

    outcome = scan_paths([str(t) for t in args.targets], config)
    document = emit_report(outcome.report, args.format)
    _emit(document, args.out)
    print(render_summary(outcome.report), file=sys.stderr, end="")

    if args.figure:
        from failaudit.figures import render_check_counts

        render_check_counts(outcome.report, args.figure)
        print(f"figure written to {args.figure}", file=sys.stderr)

    if args.submit_research_aggregate:
        rng = random.Random(args.seed) if args.seed is not None else None
        submission = build_aggregate(outcome.report, scan_id=new_scan_id(rng))
        result = write_jsonl([submission], args.submit_research_aggregate)
        if result.rejected:
            reasons = "; ".join(
                f"{v.field}: {v.reason}" for _, violations in result.rejected for v in violations
            )
            raise CliError(f"research submission failed the privacy gate: {reasons}")
        print(
            f"research aggregate appended to {args.submit_research_aggregate}",
            file=sys.stderr,
        )

    return outcome.exit_code


def _detect_kind(args) -> str:
    if args.kind:
        return args.kind
    if args.side_a.suffix == ".jsonl" and args.side_b.suffix == ".jsonl":
        return "arms"
    return "reports"


def _cmd_compare(args) -> int:
    if _detect_kind(args) == "reports":
        return _compare_reports(args)
    records = load_manifest(args.side_a, size_filter=args.size_filter) + load_manifest(
        args.side_b, size_filter=args.size_filter
    )
    arm_a, arm_b = split_arms(records)
    if not arm_a or not arm_b:
        raise EmptyArmError("comparison needs records in both arms (A_ai and B_human)")
    summary_a = summarize_arm(arm_a)
    summary_b = summarize_arm(arm_b)
    comparison = compare_arms(summary_a, summary_b, args.parity_band)
    languages = per_language_breakdown(records, args.parity_band)
    checks = per_check_breakdown(records, args.parity_band)

    if args.format == "json":
        payload = {
            "arms": {
                ARM_AI: _summary_dict(summary_a),
                ARM_HUMAN: _summary_dict(summary_b),
            },
            "high_per_file": {"A": comparison.rate_a, "B": comparison.rate_b},
            "ratio": None if comparison.ratio is None else comparison.ratio_display,
            "direction": comparison.direction,
            "severity_deltas": comparison.severity_deltas,
            "per_language": [
                {
                    "language": item.language,
                    "comparable": item.comparable,
                    "rate_a": item.comparison.rate_a if item.comparable else None,
                    "rate_b": item.comparison.rate_b if item.comparable else None,
                    "ratio": item.comparison.ratio_display if item.comparable else None,
                    "direction": item.comparison.direction if item.comparable else None,
                }
                for item in languages
            ],
            "per_check": [
                {
                    "check": item.check,
                    "key": item.key,
                    "count_a": item.count_a,
                    "count_b": item.count_b,
                    "direction": item.direction,
                }
                for item in checks
            ],
        }
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        _print_comparison_table(summary_a, summary_b, comparison, languages, checks)

    if args.figure:
        from failaudit.figures import render_language_rates

        render_language_rates(languages, args.figure)
        print(f"figure written to {args.figure}", file=sys.stderr)
    return 0


def _summary_dict(summary) -> dict:
    return {
        "files": summary.files,
        "high": summary.high,
        "medium": summary.medium,
        "low": summary.low,
        "repos": summary.repos,
        "high_per_file": summary.rate_display,
    }


def _print_comparison_table(summary_a, summary_b, comparison, languages, checks) -> None:
    write = sys.stdout.write
    for label, s in ((ARM_AI, summary_a), (ARM_HUMAN, summary_b)):
        write(
            f"arm {label}: files={s.files} high={s.high} medium={s.medium} "
            f"low={s.low} repos={s.repos} high_per_file={s.rate_display:.3f}\n"
        )
    write(
        f"high_per_file ratio (A/B): {comparison.ratio_display}   "
        f"direction: {comparison.direction}\n"
    )
    deltas = comparison.severity_deltas
    write(
        f"severity deltas (A-B): HIGH {deltas['HIGH']:+d} "
        f"MEDIUM {deltas['MEDIUM']:+d} LOW {deltas['LOW']:+d}\n"
    )
    write("\nper-language high_per_file:\n")
    write(f"  {'language':<12} {'files_A':>7} {'rate_A':>7} {'files_B':>7} "
          f"{'rate_B':>7} {'ratio':>6} direction\n")
    for item in languages:
        if not item.comparable:
            write(f"  {item.language:<12} non-comparable (present in one arm only)\n")
            continue
        c = item.comparison
        write(
            f"  {item.language:<12} {c.summary_a.files:>7} {c.rate_a:>7.3f} "
            f"{c.summary_b.files:>7} {c.rate_b:>7.3f} {c.ratio_display:>6} {c.direction}\n"
        )
    write("\nper-check finding counts:\n")
    write(f"  {'check':<5} {'key':<24} {'A':>6} {'B':>6} direction\n")
    for item in checks:
        write(
            f"  {item.check:<5} {item.key:<24} {item.count_a:>6} "
            f"{item.count_b:>6} {item.direction}\n"
        )


def _compare_reports(args) -> int:
    report_a = parse_report(args.side_a.read_text(encoding="utf-8"))
    report_b = parse_report(args.side_b.read_text(encoding="utf-8"))
    rows = []
    for key in report_a.verdicts:
        va = report_a.verdicts[key]
        vb = report_b.verdicts[key]
        rows.append({"key": key, "a": va, "b": vb, "same": va == vb})
    counts = {
        "a_findings": len(report_a.findings),
        "b_findings": len(report_b.findings),
        "a_high": report_a.high_count(),
        "b_high": report_b.high_count(),
    }
    if args.format == "json":
        sys.stdout.write(json.dumps({"verdicts": rows, "counts": counts}, indent=2) + "\n")
        return 0
    for row in rows:
        marker = "=" if row["same"] else "!"
        sys.stdout.write(f"  {row['key']:<24} {row['a']:<8} {row['b']:<8} {marker}\n")
    sys.stdout.write(
        f"findings: A={counts['a_findings']} (HIGH {counts['a_high']})  "
        f"B={counts['b_findings']} (HIGH {counts['b_high']})\n"
    )
    return 0


def _cmd_summarize(args) -> int:
    payload = []
    all_language_rows = []
    for manifest in args.manifests:
        records = load_manifest(manifest, size_filter=args.size_filter)
        by_arm: dict[str, list] = {}
        for record in records:
            by_arm.setdefault(record.arm, []).append(record)
        for arm in sorted(by_arm):
            summary = summarize_arm(by_arm[arm])
            payload.append({"manifest": str(manifest), "arm": arm, **_summary_dict(summary)})
        if len(by_arm) == 2:
            all_language_rows = per_language_breakdown(records)
    if args.format == "json":
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        for row in payload:
            sys.stdout.write(
                f"{row['manifest']} arm {row['arm']}: files={row['files']} "
                f"high={row['high']} medium={row['medium']} low={row['low']} "
                f"repos={row['repos']} high_per_file={row['high_per_file']:.3f}\n"
            )
    if args.figure and all_language_rows:
        from failaudit.figures import render_language_rates

        render_language_rates(all_language_rows, args.figure)
        print(f"figure written to {args.figure}", file=sys.stderr)
    return 0


def _cmd_match(args) -> int:
    pool = load_manifest(args.pool, size_filter=args.size_filter)
    arm_a = load_manifest(args.arm_a, size_filter=args.size_filter)
    spec = MatchSpec(per_repo_cap=args.cap, seed=args.seed, target=args.target)
    result = match_controls(pool, arm_a, spec)
    if args.out:
        write_manifest(result.selected, args.out)
        print(f"selection manifest written to {args.out}", file=sys.stderr)
    if args.format == "json":
        payload = {
            "selected": len(result.selected),
            "candidates": len(pool),
            "total_shortfall": result.total_shortfall,
            "gaps": [
                {
                    "language": gap.cell[0],
                    "band": gap.cell[1],
                    "decile": gap.cell[2],
                    "quota": gap.quota,
                    "selected": gap.selected,
                    "shortfall": gap.shortfall,
                }
                for gap in result.gaps
            ],
        }
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        sys.stdout.write(
            f"selected {len(result.selected)} of {len(pool)} candidates "
            f"(cap {args.cap}/repo, seed {args.seed})\n"
        )
        if result.gaps:
            sys.stdout.write("unfilled cells:\n")
            for gap in result.gaps:
                lang, band, decile = gap.cell
                sys.stdout.write(
                    f"  {lang} band {band} decile {decile}: "
                    f"quota {gap.quota}, selected {gap.selected}, short {gap.shortfall}\n"
                )
        else:
            sys.stdout.write("zero gaps\n")
    return 0


def _cmd_bootstrap(args) -> int:
    means_path = Path(args.means)
    if means_path.exists():
        means = json.loads(means_path.read_text(encoding="utf-8"))
        if not isinstance(means, list):
            raise CliError("means file must contain a JSON array of numbers")
        means = [float(v) for v in means]
    else:
        try:
            means = [float(v) for v in args.means.split(",") if v.strip()]
        except ValueError:
            raise CliError(f"--means is neither a file nor a number list: {args.means!r}")
    result = bootstrap_repo_sensitivity(
        means, args.reference, args.draws, args.draw_size, args.seed
    )
    if args.format == "json":
        sys.stdout.write(
            json.dumps(
                {
                    "draws": result.draws,
                    "draw_size": result.draw_size,
                    "seed": result.seed,
                    "exceed_probability": result.exceed_probability,
                },
                indent=2,
            )
            + "\n"
        )
    else:
        sys.stdout.write(
            f"P = {result.exceed_probability:.2f} over {result.draws} draws of "
            f"{result.draw_size} repos (seed {result.seed})\n"
        )
    return 0


def _cmd_suppression(args) -> int:
    static = parse_report(args.static_report.read_text(encoding="utf-8"))
    llm = parse_report(args.llm_report.read_text(encoding="utf-8"))
    result = suppression_report(static.verdicts, llm.verdicts)
    if args.format == "json":
        sys.stdout.write(json.dumps(result.to_dict(), indent=2) + "\n")
        return 0
    rate = "n/a" if result.rate_percent is None else f"{result.rate_percent}%"
    sys.stdout.write(
        f"static FAILs: {result.static_fail_count}  suppressed (evaluator PASS): "
        f"{result.suppressed_count}  both FAIL: {result.both_fail_count}  "
        f"suppression rate: {rate}\n"
    )
    for key in sorted(result.matrix):
        row = result.matrix[key]
        sys.stdout.write(f"  {key:<24} static {row['static']:<5} evaluator {row['llm']}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
