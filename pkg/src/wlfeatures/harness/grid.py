"""Hyperparameter grid: enumeration and validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from ..learn import OPTIMISERS
from ..pipeline import ConfigError, IMF, NO_PRUNING, ModelConfig

ALGORITHMS = ("wl", "iwl", "niwl", "2-lwl", "2-wl")
ITERATIONS = tuple(range(1, 9))
PRUNINGS = (NO_PRUNING, IMF)
HASHES = ("mset", "set")
REPRS = ("partial", "complete")

PRUNING_RULE = "feature pruning is not supported for the iWL and niWL algorithms"
TWO_WL_RULE = "2-wl is disabled unless explicitly enabled with a pair memory cap"


@dataclass(frozen=True)
class Grid:
    algorithms: tuple = ALGORITHMS
    iterations: tuple = ITERATIONS
    prunings: tuple = PRUNINGS
    hashes: tuple = HASHES
    reprs: tuple = REPRS
    optimisers: tuple = OPTIMISERS

    def candidates(self) -> Iterator[tuple]:
        yield from itertools.product(self.algorithms, self.iterations, self.prunings, self.hashes,
                                     self.reprs, self.optimisers)

    @classmethod
    def from_filters(cls, **filters) -> "Grid":
        """Restrict axes; ``None`` keeps the full axis."""
        base = cls()
        kwargs = {}
        for name, values in filters.items():
            if values is not None:
                kwargs[name] = tuple(values)
        return cls(**{**base.__dict__, **kwargs})


def check_config(algorithm, iterations, pruning, hash_mode, repr, optimiser, enable_two_wl: bool = False
                 ) -> ModelConfig:
    """Build a config or raise :class:`ConfigError` naming the violated rule."""
    if str(algorithm).lower() == "2-wl" and not enable_two_wl:
        raise ConfigError(TWO_WL_RULE)
    if str(optimiser).lower() == "rkgpc":
        raise ConfigError("rkGPC is not implemented")
    return ModelConfig(algorithm, int(iterations), pruning, hash_mode, repr, optimiser)


def validate(grid: Optional[Grid] = None, enable_two_wl: bool = False) -> tuple[list, list]:
    """Split a grid into accepted configs and ``(candidate, reason)`` rejections."""
    grid = grid or Grid()
    accepted, rejected = [], []
    for cand in grid.candidates():
        try:
            accepted.append(check_config(*cand, enable_two_wl=enable_two_wl))
        except ConfigError as exc:
            rejected.append((cand, str(exc)))
    return accepted, rejected


def expected_size(grid: Optional[Grid] = None, enable_two_wl: bool = False) -> int:
    """Closed-form count of accepted configs, independent of :func:`validate`."""
    grid = grid or Grid()
    total = 0
    rest = len(grid.iterations) * len(grid.hashes) * len(grid.reprs) * len(grid.optimisers)
    for algo in grid.algorithms:
        if algo == "2-wl" and not enable_two_wl:
            continue
        prunings = [p for p in grid.prunings if not (algo in ("iwl", "niwl") and p == IMF)]
        total += len(prunings) * rest
    return total


def parse_config_key(key: str) -> ModelConfig:
    """Inverse of ``ModelConfig.key``."""
    parts = key.split("_")
    if len(parts) != 6 or not parts[1].startswith("L"):
        raise ConfigError(f"malformed config key {key!r}")
    algo, it, pruning, hash_mode, rep, optimiser = parts
    return ModelConfig(algo, int(it[1:]), pruning, hash_mode, rep, optimiser)


def iter_keys(configs: Iterable[ModelConfig]) -> list[str]:
    return [c.key for c in configs]
