"""i-mf feature pruning: duplicate-column pruning under dependency constraints, then
frequency filtering.

A feature may be pruned when another kept feature has an identical column on the
training set, and only if every feature depending on it is pruned too. The kept
set is therefore closed under dependencies, which means pruned colours never have
to be computed for the kept ones. Picking the largest such prune set is the
optimisation part. A greedy pass gives the starting solution, and a bounded
branch-and-bound over the remaining representative choices improves on it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .ilg import LabelledGraph
from .kernels import ColourTable, FeatureIndex, KernelConfig, embed

log = logging.getLogger(__name__)

DEFAULT_FREQUENCY = 0.01
DEFAULT_SEARCH_BUDGET = 20_000


class PruningNotSupported(ValueError):
    pass


@dataclass
class PruneReport:
    features: int
    kept: int
    pruned_duplicate: int
    dependency_blocked: int
    pruned_frequency: int
    optimal: bool
    max_depth_before: Optional[int] = None
    max_depth_after: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def evaluation_matrix(graphs: Iterable[LabelledGraph], table: ColourTable, index: FeatureIndex,
                      config: Optional[KernelConfig] = None) -> np.ndarray:
    """Row ``i`` is the embedding of graph ``i``."""
    rows = [embed(g, table, index, config).as_float() for g in graphs]
    if not rows:
        return np.zeros((0, len(index)))
    return np.vstack(rows)


def dependency_graph(table: ColourTable, index: FeatureIndex) -> dict:
    """colour -> colours of the index it was hashed from."""
    members = set(index.colours)
    return {c: frozenset(d for d in table.dependencies(c) if d in members) for c in index.colours}


def _closure(seeds: Iterable[int], deps: list) -> set:
    out = set()
    stack = list(seeds)
    while stack:
        c = stack.pop()
        if c in out:
            continue
        out.add(c)
        stack.extend(deps[c])
    return out


def _duplicate_groups(matrix: np.ndarray) -> list[list[int]]:
    groups: dict = {}
    for j in range(matrix.shape[1]):
        groups.setdefault(np.ascontiguousarray(matrix[:, j]).tobytes(), []).append(j)
    return list(groups.values())


def minimum_kept_set(groups: list, deps: list, budget: int = DEFAULT_SEARCH_BUDGET) -> tuple[set, bool]:
    """Smallest dependency-closed set containing every singleton and hitting every group.

    Returns ``(kept, optimal)``; ``optimal`` is False when the search budget ran out
    before the branch-and-bound finished.
    """
    forced = _closure((g[0] for g in groups if len(g) == 1), deps)
    multi = [g for g in groups if len(g) > 1]

    def unhit(kept):
        return [g for g in multi if not any(m in kept for m in g)]

    def options(group, kept):
        # new features each representative would drag in; cheapest first, then lowest id
        return sorted(((len(_closure([m], deps) - kept), m) for m in group))

    kept = set(forced)
    todo = unhit(kept)
    while todo:
        cost, choice = min(options(g, kept)[0] for g in todo)
        kept |= _closure([choice], deps)
        todo = unhit(kept)
    best = [kept]
    nodes = [0]
    exhausted = [False]

    def search(current, remaining):
        if not remaining:
            if len(current) < len(best[0]):
                best[0] = current
            return
        if len(current) + 1 >= len(best[0]):
            return
        nodes[0] += 1
        if nodes[0] > budget:
            exhausted[0] = True
            return
        group = remaining[0]
        for cost, m in options(group, current):
            if len(current) + cost >= len(best[0]):
                break
            nxt = current | _closure([m], deps)
            search(nxt, [g for g in remaining[1:] if not any(x in nxt for x in g)])
            if exhausted[0]:
                return

    search(set(forced), unhit(forced))
    return best[0], not exhausted[0]


def prune_imf(matrix: np.ndarray, index: FeatureIndex, dependencies: Mapping[int, Iterable[int]],
              freq: float = DEFAULT_FREQUENCY, budget: int = DEFAULT_SEARCH_BUDGET,
              depths: Optional[Mapping[int, int]] = None) -> tuple[FeatureIndex, PruneReport]:
    """Prune duplicate and rare columns of ``matrix`` (rows = training states).

    Columns correspond to ``index.colours``. Features that are nonzero in fewer than
    ``freq`` of the rows are dropped after the duplicate step, whatever depends on them.
    """
    if not 0.0 <= freq <= 1.0:
        raise ValueError("freq must lie in [0, 1]")
    matrix = np.asarray(matrix)
    n_rows, m = matrix.shape if matrix.ndim == 2 else (0, len(index))
    if m != len(index):
        raise ValueError(f"matrix has {m} columns but the index has {len(index)} colours")
    pos = {c: i for i, c in enumerate(index.colours)}
    deps = [[pos[d] for d in dependencies.get(c, ()) if d in pos] for c in index.colours]

    if n_rows == 0:
        groups = [[j] for j in range(m)]
    else:
        groups = _duplicate_groups(matrix)
    kept, optimal = minimum_kept_set(groups, deps, budget)
    if not optimal:
        log.warning("i-mf search budget exhausted; keeping best prune set found (%d features)", len(kept))
    multi = [g for g in groups if len(g) > 1]
    in_multi = sum(len(g) for g in multi)
    kept_multi = [sum(1 for j in g if j in kept) for g in multi]
    pruned_duplicate = in_multi - sum(kept_multi)
    blocked = sum(k - 1 for k in kept_multi if k > 1)

    pruned_frequency = 0
    if n_rows and freq > 0:
        nonzero = (matrix != 0).sum(axis=0) / n_rows
        rare = {j for j in kept if nonzero[j] < freq}
        pruned_frequency = len(rare)
        kept -= rare

    kept_index = FeatureIndex(tuple(index.colours[j] for j in sorted(kept)))
    report = PruneReport(
        features=m, kept=len(kept_index), pruned_duplicate=pruned_duplicate,
        dependency_blocked=blocked, pruned_frequency=pruned_frequency, optimal=optimal)
    if depths is not None:
        report.max_depth_before = max((depths[c] for c in index.colours), default=None)
        report.max_depth_after = max((depths[c] for c in kept_index.colours), default=None)
        if report.max_depth_after is not None and report.max_depth_after < (report.max_depth_before or 0):
            log.info("i-mf pruning reduced effective iterations from %s to %s",
                     report.max_depth_before, report.max_depth_after)
    return kept_index, report


def prune_features(graphs: list[LabelledGraph], table: ColourTable, index: FeatureIndex,
                   freq: float = DEFAULT_FREQUENCY,
                   matrix: Optional[np.ndarray] = None) -> tuple[FeatureIndex, PruneReport]:
    """i-mf over training graphs for a collected table."""
    if table.config.algorithm in ("iwl", "niwl"):
        raise PruningNotSupported("feature pruning is not supported for the iWL and niWL algorithms")
    if matrix is None:
        matrix = evaluation_matrix(graphs, table, index)
    depths = {c: table.depth(c) for c in index.colours}
    return prune_imf(matrix, index, dependency_graph(table, index), freq, depths=depths)

