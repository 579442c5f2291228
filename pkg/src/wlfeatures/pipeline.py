"""From training tasks to a heuristic: oracle traces, ILGs, colours, pruning and a linear fit."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import learn
from .ilg import ILGBuilder, normalise_repr
from .kernels import (DEFAULT_PAIR_CAP, IWL, NIWL, ColourTable, FeatureIndex, KernelConfig, collect_colours,
                      embed)
from .learn import LinearModel, RankingSet, RegressionSet
from .pddl import LiftedTask, detect_static_predicates, ground_actions
from .pruning import DEFAULT_FREQUENCY, PruningNotSupported, dependency_graph, evaluation_matrix, prune_imf
from .search import RANKING, REGRESSION, SearchBudget, make_training_data

log = logging.getLogger(__name__)

NO_PRUNING = "none"
IMF = "i-mf"
PRUNING_OPTIONS = (NO_PRUNING, IMF)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    algorithm: str = "wl"
    iterations: int = 1
    pruning: str = NO_PRUNING
    hash_mode: str = "set"
    repr: str = "partial"
    optimiser: str = learn.RKSVM

    def __post_init__(self):
        try:
            kc = KernelConfig(self.algorithm, self.iterations, self.hash_mode)
            rep = normalise_repr(self.repr)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "algorithm", kc.algorithm)
        object.__setattr__(self, "hash_mode", kc.hash_mode)
        object.__setattr__(self, "repr", rep)
        pruning = self.pruning.lower()
        if pruning not in PRUNING_OPTIONS:
            raise ConfigError(f"unknown pruning option {self.pruning!r}")
        object.__setattr__(self, "pruning", pruning)
        optimiser = self.optimiser.lower()
        if optimiser not in learn.OPTIMISERS:
            raise ConfigError(f"unknown optimiser {self.optimiser!r}")
        object.__setattr__(self, "optimiser", optimiser)
        if pruning == IMF and kc.algorithm in (IWL, NIWL):
            raise ConfigError("feature pruning is not supported for the iWL and niWL algorithms")

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.algorithm, self.iterations, self.hash_mode)

    @property
    def ranking(self) -> bool:
        return self.optimiser in learn.RANKING_OPTIMISERS

    @property
    def key(self) -> str:
        rep = "part" if self.repr == "partial" else "cmpl"
        return f"{self.algorithm}_L{self.iterations}_{self.pruning}_{self.hash_mode}_{rep}_{self.optimiser}"

    def to_dict(self) -> dict:
        return asdict(self)


def _statics(task: LiftedTask, config: ModelConfig) -> frozenset:
    return detect_static_predicates(task.domain) if config.repr == "partial" else frozenset()


def train(config: ModelConfig, tasks: Sequence[LiftedTask], oracle_budget: Optional[SearchBudget] = None,
          freq: float = DEFAULT_FREQUENCY, pair_cap: int = DEFAULT_PAIR_CAP,
          optimiser_params: Optional[dict] = None) -> LinearModel:
    """Train one model; the returned model carries its colour table and kept feature index."""
    start = time.perf_counter()
    mode = RANKING if config.ranking else REGRESSION
    graphs, labels, pairs = [], [], []
    for task in tasks:
        data = make_training_data(task, mode, ground_actions(task), oracle_budget)
        builder = ILGBuilder(task, config.repr, _statics(task, config))
        offset = len(graphs)
        graphs.extend(builder.build(r.state) for r in data.rows)
        labels.extend(np.nan if r.label is None else r.label for r in data.rows)
        pairs.extend((offset + a, offset + b) for a, b in data.pairs)
    if not graphs:
        raise ValueError("no training tasks")

    table, index = collect_colours(graphs, config.kernel, pair_cap=pair_cap)
    X = evaluation_matrix(graphs, table, index)
    report = None
    if config.pruning == IMF:
        if config.algorithm in (IWL, NIWL):
            raise PruningNotSupported("feature pruning is not supported for the iWL and niWL algorithms")
        depths = {c: table.depth(c) for c in index.colours}
        kept, report = prune_imf(X, index, dependency_graph(table, index), freq, depths=depths)
        cols = [index.position(c) for c in kept.colours]
        X, index = X[:, cols], kept
        log.info("i-mf kept %d of %d features", report.kept, report.features)

    y = np.asarray(labels, dtype=np.float64)
    if config.ranking:
        data = RankingSet(X, np.asarray(pairs, dtype=np.int64))
    else:
        data = RegressionSet(X, y)
    model = learn.fit(config.optimiser, data, **(optimiser_params or {}))
    model.table = table
    model.index = index
    model.hyperparameters = {**config.to_dict(), "optimiser_params": model.hyperparameters}
    if report is not None:
        model.metrics["pruning"] = asdict(report)
    model.metrics["time_seconds"] = time.perf_counter() - start
    model.metrics["training_rows"] = len(graphs)
    model.metrics["training_pairs"] = len(pairs)
    return model


def model_config(model: LinearModel) -> ModelConfig:
    hp = model.hyperparameters
    return ModelConfig(hp["algorithm"], hp["iterations"], hp["pruning"], hp["hash_mode"], hp["repr"],
                       hp["optimiser"])


class WLHeuristic:
    """``state -> w . embedding(ILG(state)) + b`` for one task."""

    def __init__(self, model: LinearModel, task: LiftedTask, pair_cap: int = DEFAULT_PAIR_CAP):
        if model.table is None or model.index is None:
            raise ValueError("model has no colour table")
        self.model = model
        self.config = model_config(model)
        self.table: ColourTable = model.table
        self.index: FeatureIndex = model.index
        self.builder = ILGBuilder(task, self.config.repr, _statics(task, self.config))
        self.pair_cap = pair_cap
        self.evaluations = 0

    def embedding(self, state):
        return embed(self.builder.build(state), self.table, self.index, pair_cap=self.pair_cap)

    def __call__(self, state) -> float:
        self.evaluations += 1
        return self.model.predict(self.embedding(state))


def blind_heuristic(state) -> float:
    return 0.0
