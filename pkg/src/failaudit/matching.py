"""Strict matched-control selection for two-arm studies.

Controls are drawn from a candidate pool to mirror the treatment arm's
distribution over (language, size band, size decile) cells, under a hard
per-repository cap and an optional overall target. Size deciles are computed
from the treatment arm's line counts per language and layered inside coarse
size bands.

Selection contract: among all selections that respect the per-cell quotas,
the repository cap, and the target, the matcher returns the one of maximum
size that is lexicographically first under a seeded priority order (a single
seeded shuffle of the pool). That makes the output reproducible bit-for-bit
for a fixed seed and checkable against brute-force enumeration on small
pools. The implementation is a greedy walk in priority order with an exact
max-flow feasibility oracle, so a candidate is taken exactly when taking it
still allows a maximum-size completion. Unfillable cells are reported as
gaps with shortfall counts.
"""

from __future__ import annotations

import random
import statistics
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from failaudit.corpus import FileRecord

DEFAULT_BANDS: tuple[tuple[int, int], ...] = ((100, 300), (301, 800), (801, 2000))


@dataclass(frozen=True)
class MatchSpec:
    per_repo_cap: int
    seed: int
    target: int | None = None
    size_bands: tuple[tuple[int, int], ...] = DEFAULT_BANDS

    def validate(self) -> None:
        if self.per_repo_cap < 1:
            raise ValueError("per-repo cap must be >= 1")
        if self.target is not None and self.target < 0:
            raise ValueError("target must be >= 0")


Cell = tuple[str, str, int]  # (language, band label, decile index)


@dataclass(frozen=True)
class CellGap:
    cell: Cell
    quota: int
    selected: int

    @property
    def shortfall(self) -> int:
        return self.quota - self.selected


@dataclass
class MatchResult:
    selected: list[FileRecord]
    gaps: list[CellGap]
    quotas: dict[Cell, int] = field(default_factory=dict)

    @property
    def total_shortfall(self) -> int:
        return sum(g.shortfall for g in self.gaps)


def _band_label(line_count: int, bands: tuple[tuple[int, int], ...]) -> str:
    for lo, hi in bands:
        if lo <= line_count <= hi:
            return f"{lo}-{hi}"
    return "other"


def derive_decile_boundaries(
    arm_a: list[FileRecord],
) -> dict[str, list[float]]:
    """Per-language decile cut points from the treatment arm's line counts."""
    by_language: dict[str, list[int]] = {}
    for record in arm_a:
        by_language.setdefault(record.language, []).append(record.line_count)
    boundaries: dict[str, list[float]] = {}
    for language, counts in by_language.items():
        if len(counts) < 2:
            boundaries[language] = []
        else:
            boundaries[language] = statistics.quantiles(counts, n=10, method="inclusive")
    return boundaries


def cell_of(
    record: FileRecord,
    boundaries: dict[str, list[float]],
    bands: tuple[tuple[int, int], ...] = DEFAULT_BANDS,
) -> Cell:
    cuts = boundaries.get(record.language, [])
    return (
        record.language,
        _band_label(record.line_count, bands),
        bisect_right(cuts, record.line_count),
    )


def _max_fill(
    group_counts: dict[tuple[str, Cell], int],
    repo_remaining: dict[str, int],
    cell_remaining: dict[Cell, int],
    limit: int,
) -> int:
    """Maximum cap/quota-respecting selection size over the given candidates."""
    if limit <= 0 or not group_counts:
        return 0
    repos = sorted({repo for repo, _ in group_counts})
    cells = sorted({cell for _, cell in group_counts})
    repo_index = {repo: 1 + i for i, repo in enumerate(repos)}
    cell_index = {cell: 1 + len(repos) + i for i, cell in enumerate(cells)}
    sink = 1 + len(repos) + len(cells)

    rows: list[int] = []
    cols: list[int] = []
    caps: list[int] = []
    for repo in repos:
        rows.append(0)
        cols.append(repo_index[repo])
        caps.append(repo_remaining.get(repo, 0))
    for (repo, cell), count in sorted(group_counts.items()):
        rows.append(repo_index[repo])
        cols.append(cell_index[cell])
        caps.append(count)
    for cell in cells:
        rows.append(cell_index[cell])
        cols.append(sink)
        caps.append(cell_remaining.get(cell, 0))

    graph = csr_matrix(
        (np.asarray(caps, dtype=np.int32), (rows, cols)), shape=(sink + 1, sink + 1)
    )
    value = int(maximum_flow(graph, 0, sink).flow_value)
    return min(value, limit)


def match_controls(
    pool: list[FileRecord],
    arm_a: list[FileRecord],
    spec: MatchSpec,
) -> MatchResult:
    spec.validate()
    if not pool:
        raise ValueError("candidate pool is empty")
    if not arm_a:
        raise ValueError("treatment arm is empty; no cells to mirror")

    boundaries = derive_decile_boundaries(arm_a)
    quotas: dict[Cell, int] = {}
    for record in arm_a:
        cell = cell_of(record, boundaries, spec.size_bands)
        quotas[cell] = quotas.get(cell, 0) + 1

    target = spec.target if spec.target is not None else len(arm_a)
    cells_by_candidate = [cell_of(r, boundaries, spec.size_bands) for r in pool]

    order = list(range(len(pool)))
    random.Random(spec.seed).shuffle(order)
    # only candidates landing in a mirrored cell are selectable
    order = [i for i in order if cells_by_candidate[i] in quotas]

    repo_remaining: dict[str, int] = {}
    for record in pool:
        repo_remaining.setdefault(record.repo_id, spec.per_repo_cap)
    cell_remaining = dict(quotas)

    def group_counts_for(indices: list[int]) -> dict[tuple[str, Cell], int]:
        groups: dict[tuple[str, Cell], int] = {}
        for i in indices:
            key = (pool[i].repo_id, cells_by_candidate[i])
            groups[key] = groups.get(key, 0) + 1
        return groups

    best = _max_fill(group_counts_for(order), repo_remaining, cell_remaining, target)

    chosen: list[int] = []
    for position, index in enumerate(order):
        if len(chosen) >= best:
            break
        record = pool[index]
        cell = cells_by_candidate[index]
        if repo_remaining[record.repo_id] <= 0 or cell_remaining[cell] <= 0:
            continue
        repo_remaining[record.repo_id] -= 1
        cell_remaining[cell] -= 1
        required = best - len(chosen) - 1
        rest = order[position + 1 :]
        feasible = _max_fill(group_counts_for(rest), repo_remaining, cell_remaining, required)
        if feasible >= required:
            chosen.append(index)
        else:
            repo_remaining[record.repo_id] += 1
            cell_remaining[cell] += 1

    selected = [pool[i] for i in sorted(chosen)]
    selected_by_cell: dict[Cell, int] = {}
    for i in chosen:
        cell = cells_by_candidate[i]
        selected_by_cell[cell] = selected_by_cell.get(cell, 0) + 1
    gaps = [
        CellGap(cell=cell, quota=quota, selected=selected_by_cell.get(cell, 0))
        for cell, quota in sorted(quotas.items())
        if quota > selected_by_cell.get(cell, 0)
    ]
    return MatchResult(selected=selected, gaps=gaps, quotas=quotas)
