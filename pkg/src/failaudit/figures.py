"""Figure rendering for scan reports and corpus comparisons.

Figures are written straight to files (Agg backend, no display); the format
follows the output extension.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from failaudit.corpus import LanguageComparison
from failaudit.report import AuditReport
from failaudit.rules import AUTOMATED_CHECKS

_SEVERITY_COLORS = {"HIGH": "#b22222", "MEDIUM": "#e69500", "LOW": "#808080"}
_ARM_LABELS = {"A_ai": "Arm A (AI-attributed)", "B_human": "Arm B (human control)"}


def render_language_rates(
    breakdown: list[LanguageComparison], path: str | Path
) -> Path:
    """Grouped bars of high-severity findings per file, by language and arm."""
    comparable = [b for b in breakdown if b.comparable]
    languages = [b.language for b in comparable]
    rates_a = [b.comparison.rate_a for b in comparable]
    rates_b = [b.comparison.rate_b for b in comparable]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    positions = range(len(languages))
    width = 0.38
    ax.bar(
        [p - width / 2 for p in positions], rates_a, width,
        label=_ARM_LABELS["A_ai"], color="#b22222",
    )
    ax.bar(
        [p + width / 2 for p in positions], rates_b, width,
        label=_ARM_LABELS["B_human"], color="#2f6fb3",
    )
    for p, value in zip(positions, rates_a):
        ax.annotate(f"{value:.3f}", (p - width / 2, value), ha="center", va="bottom", fontsize=8)
    for p, value in zip(positions, rates_b):
        ax.annotate(f"{value:.3f}", (p + width / 2, value), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(languages)
    ax.set_ylabel("high-severity findings per file")
    ax.set_title("High-severity findings per file by language")
    ax.legend()
    ax.grid(axis="y", linestyle="--", alpha=0.4)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_check_counts(report: AuditReport, path: str | Path) -> Path:
    """Bar chart of finding counts per check, colored by severity."""
    counts: dict[str, dict[str, int]] = {}
    for finding in report.findings:
        counts.setdefault(finding.check, {}).setdefault(finding.severity, 0)
        counts[finding.check][finding.severity] += 1
    checks = [c for c in AUTOMATED_CHECKS if c in counts]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    bottoms = [0] * len(checks)
    for severity in ("HIGH", "MEDIUM", "LOW"):
        values = [counts[c].get(severity, 0) for c in checks]
        if not any(values):
            continue
        ax.bar(checks, values, bottom=bottoms, label=severity,
               color=_SEVERITY_COLORS[severity])
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_ylabel("findings")
    ax.set_title("Findings per check")
    if checks:
        ax.legend()
    ax.grid(axis="y", linestyle="--", alpha=0.4)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
