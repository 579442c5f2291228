"""Colour refinement feature generators: WL, iWL/niWL, 2-WL and 2-LWL.

All algorithms share one lazily built injective hash, :class:`ColourTable`,
mapping canonical keys to dense colour ids in first-seen order:

* ``("f", feature, individualised)`` -- initial node colour
* ``("p", feature_a, feature_b, labels)`` -- initial pair colour (2-WL / 2-LWL)
* ``(own_colour, summary)`` -- refined colour; ``summary`` is a sorted tuple of
  ``(neighbour_colour, edge_label)`` pairs for the WL family and of colour pairs
  for the pair algorithms.

Once frozen, a table maps unknown keys to :data:`UNSEEN`. Unseen colours keep
propagating (any key containing one is itself unseen) but never reach the output.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .ilg import LabelledGraph

WL = "wl"
IWL = "iwl"
NIWL = "niwl"
LWL2 = "2-lwl"
WL2 = "2-wl"
ALGORITHMS = (WL, IWL, NIWL, LWL2, WL2)
NODE_ALGORITHMS = (WL, IWL, NIWL)
PAIR_ALGORITHMS = (LWL2, WL2)

MULTISET = "mset"
SET = "set"
HASH_MODES = (MULTISET, SET)

UNSEEN = -1
TABLE_VERSION = 1
DEFAULT_PAIR_CAP = 40_000

_ALGO_ALIASES = {a: a for a in ALGORITHMS}
_ALGO_ALIASES.update({"2wl": WL2, "2lwl": LWL2, "1-wl": WL})
_HASH_ALIASES = {"mset": MULTISET, "multiset": MULTISET, "set": SET}


class ColourTableError(ValueError):
    """A table used with an algorithm, mode or phase it was not built for."""


class PairMemoryError(MemoryError):
    """Refusal to run a pair algorithm on a graph with too many node pairs."""

    def __init__(self, pairs: int, cap: int):
        self.pairs = pairs
        self.cap = cap
        super().__init__(f"{pairs} node pairs exceed the configured cap of {cap}")


@dataclass(frozen=True)
class KernelConfig:
    algorithm: str = WL
    iterations: int = 1
    hash_mode: str = SET

    def __post_init__(self):
        algo = _ALGO_ALIASES.get(str(self.algorithm).lower())
        if algo is None:
            raise ValueError(f"unknown WL algorithm {self.algorithm!r}")
        mode = _HASH_ALIASES.get(str(self.hash_mode).lower())
        if mode is None:
            raise ValueError(f"unknown hash mode {self.hash_mode!r}")
        if int(self.iterations) < 0:
            raise ValueError("iterations must be >= 0")
        object.__setattr__(self, "algorithm", algo)
        object.__setattr__(self, "hash_mode", mode)
        object.__setattr__(self, "iterations", int(self.iterations))

    @property
    def normalise(self) -> bool:
        return self.algorithm == NIWL


class ColourTable:
    def __init__(self, config: KernelConfig):
        self.config = config
        self._ids: dict = {}
        self._keys: list = []
        self._depth: list[int] = []
        self.frozen = False

    def __len__(self) -> int:
        return len(self._keys)

    def freeze(self) -> "ColourTable":
        self.frozen = True
        return self

    def lookup(self, key, depth: int, allocate: bool) -> int:
        c = self._ids.get(key)
        if c is None:
            if not allocate:
                return UNSEEN
            c = len(self._keys)
            self._ids[key] = c
            self._keys.append(key)
            self._depth.append(depth)
        return c

    def key(self, colour: int):
        return self._keys[colour]

    def depth(self, colour: int) -> int:
        return self._depth[colour]

    def dependencies(self, colour: int) -> frozenset:
        """Colours appearing in the key that produced ``colour``."""
        key = self._keys[colour]
        if isinstance(key[0], str):
            return frozenset()
        own, summary = key
        if self.config.algorithm in NODE_ALGORITHMS:
            return frozenset([own, *(c for c, _ in summary)])
        return frozenset([own, *(c for pair in summary for c in pair)])

    def check(self, algorithms: Sequence[str], learning: bool, iterations=None, hash_mode=None):
        cfg = self.config
        if cfg.algorithm not in algorithms:
            raise ColourTableError(f"table built for {cfg.algorithm}, not {'/'.join(algorithms)}")
        if iterations is not None and int(iterations) != cfg.iterations:
            raise ColourTableError(f"table built for L={cfg.iterations}, not L={iterations}")
        if hash_mode is not None and _HASH_ALIASES.get(hash_mode) != cfg.hash_mode:
            raise ColourTableError(f"table built for hash mode {cfg.hash_mode}, not {hash_mode}")
        if learning and self.frozen:
            raise ColourTableError("cannot learn colours with a frozen table")

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        features, pair_inits, entries = [], [], []
        for colour, key in enumerate(self._keys):
            if key[0] == "f":
                features.append([key[1], int(key[2]), colour])
            elif key[0] == "p":
                pair_inits.append([key[1], key[2], list(key[3]), colour])
            else:
                entries.append([key[0], [list(p) for p in key[1]], colour])
        return {
            "version": TABLE_VERSION,
            "algorithm": self.config.algorithm,
            "iterations": self.config.iterations,
            "hash": self.config.hash_mode,
            "features": features,
            "pair_inits": pair_inits,
            "entries": entries,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ColourTable":
        if data.get("version") != TABLE_VERSION:
            raise ColourTableError(f"unsupported colour table version {data.get('version')!r}")
        table = cls(KernelConfig(data["algorithm"], data["iterations"], data["hash"]))
        keyed = {}
        for feature, ind, colour in data["features"]:
            keyed[colour] = ("f", feature, bool(ind))
        for fa, fb, labels, colour in data["pair_inits"]:
            keyed[colour] = ("p", fa, fb, tuple(labels))
        for own, summary, colour in data["entries"]:
            keyed[colour] = (own, tuple(tuple(p) for p in summary))
        if sorted(keyed) != list(range(len(keyed))):
            raise ColourTableError("colour ids are not contiguous")
        for colour in range(len(keyed)):
            key = keyed[colour]
            depth = 0 if isinstance(key[0], str) else table._depth[key[0]] + 1
            table.lookup(key, depth, allocate=True)
        return table.freeze()

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=True)

    @classmethod
    def loads(cls, text: str) -> "ColourTable":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FeatureIndex:
    """Ordered colour vocabulary; position ``i`` of an embedding counts ``colours[i]``."""

    colours: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_pos", {c: i for i, c in enumerate(self.colours)})

    def __len__(self) -> int:
        return len(self.colours)

    def position(self, colour: int) -> Optional[int]:
        return self._pos.get(colour)

    def subset(self, keep: Iterable[int]) -> "FeatureIndex":
        keep = set(keep)
        return FeatureIndex(tuple(c for c in self.colours if c in keep))


@dataclass(frozen=True, eq=False)
class Embedding:
    """Colour counts over a FeatureIndex; the value of entry ``i`` is ``counts[i] / denominator``."""

    counts: np.ndarray
    denominator: int = 1

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return len(self) == len(other) and bool(
            np.array_equal(self.counts * other.denominator, other.counts * self.denominator))

    def as_fractions(self) -> list[Fraction]:
        return [Fraction(int(c), self.denominator) for c in self.counts]

    def as_float(self) -> np.ndarray:
        return self.counts.astype(np.float64) / self.denominator


# --------------------------------------------------------------------------
# refinement


def _summarise(items: list, hash_mode: str) -> tuple:
    if hash_mode == SET:
        return tuple(sorted(set(items)))
    items.sort()
    return tuple(items)


def wl_colourings(g: LabelledGraph, table: ColourTable, iterations: int, hash_mode: str,
                  allocate: bool, individualised: Optional[int] = None) -> list[list[int]]:
    """Per-iteration node colours ``[c^0, c^1, ..., c^L]`` of (individualised) WL."""
    lookup = table.lookup
    colours = [lookup(("f", f, v == individualised), 0, allocate) for v, f in enumerate(g.features)]
    rounds = [colours]
    adjacency = g.adjacency
    for depth in range(1, iterations + 1):
        prev = colours
        colours = [
            lookup((prev[v], _summarise([(prev[u], lab) for u, lab in nbrs], hash_mode)), depth, allocate)
            for v, nbrs in enumerate(adjacency)
        ]
        rounds.append(colours)
    return rounds


def _count(rounds: Iterable[Iterable[int]], into: Optional[Counter] = None) -> Counter:
    out = Counter() if into is None else into
    for colours in rounds:
        out.update(colours)
    out.pop(UNSEEN, None)
    return out


def wl_refine(g: LabelledGraph, table: ColourTable, iterations=None, hash_mode=None,
              learning: bool = False) -> Counter:
    """Multiset of all node colours over iterations 0..L."""
    table.check((WL,), learning, iterations, hash_mode)
    cfg = table.config
    return _count(wl_colourings(g, table, cfg.iterations, cfg.hash_mode, learning))


def iwl_refine(g: LabelledGraph, table: ColourTable, iterations=None, normalise=None,
               learning: bool = False):
    """WL rerun once per node with that node individualised.

    Returns raw counts, or ``Fraction`` counts divided by |V| when normalising.
    """
    table.check((IWL, NIWL), learning, iterations)
    cfg = table.config
    if normalise is None:
        normalise = cfg.normalise
    out: Counter = Counter()
    for w in range(g.num_nodes):
        _count(wl_colourings(g, table, cfg.iterations, cfg.hash_mode, learning, individualised=w), out)
    if normalise and g.num_nodes:
        return {c: Fraction(k, g.num_nodes) for c, k in out.items()}
    return out


def _pair_labels(g: LabelledGraph) -> dict:
    labels: dict = {}
    for v, nbrs in enumerate(g.adjacency):
        for u, lab in nbrs:
            labels.setdefault((v, u), []).append(lab)
    return {k: tuple(sorted(v)) for k, v in labels.items()}


def _check_pairs(n_pairs: int, cap: int):
    if n_pairs > cap:
        raise PairMemoryError(n_pairs, cap)


def two_wl_refine(g: LabelledGraph, table: ColourTable, iterations=None, learning: bool = False,
                  pair_cap: int = DEFAULT_PAIR_CAP) -> Counter:
    """Folklore 2-WL over ordered node pairs; ILG edges are taken symmetrically."""
    table.check((WL2,), learning, iterations)
    cfg = table.config
    n = g.num_nodes
    _check_pairs(n * n, pair_cap)
    labels = _pair_labels(g)
    lookup = table.lookup
    feats = g.features
    c = [[lookup(("p", feats[v], feats[u], labels.get((v, u), ())), 0, learning) for u in range(n)]
         for v in range(n)]
    out = _count(c)
    for depth in range(1, cfg.iterations + 1):
        prev = c
        c = [[lookup((prev[v][u], _summarise([(prev[w][u], prev[v][w]) for w in range(n)], cfg.hash_mode)),
                     depth, learning) for u in range(n)] for v in range(n)]
        _count(c, out)
    return out


def two_lwl_refine(g: LabelledGraph, table: ColourTable, iterations=None, learning: bool = False,
                   pair_cap: int = DEFAULT_PAIR_CAP) -> Counter:
    """Local 2-WL over unordered node 2-sets with neighbours drawn from N(v) | N(u)."""
    table.check((LWL2,), learning, iterations)
    cfg = table.config
    n = g.num_nodes
    _check_pairs(n * (n - 1) // 2, pair_cap)
    labels = _pair_labels(g)
    nbrs = [frozenset(u for u, _ in adj) for adj in g.adjacency]
    feats = g.features
    pairs = [(v, u) for v in range(n) for u in range(v + 1, n)]
    lookup = table.lookup
    c = {}
    for v, u in pairs:
        fa, fb = sorted((feats[v], feats[u]))
        c[v, u] = lookup(("p", fa, fb, labels.get((v, u), ())), 0, learning)
    out = _count([c.values()])

    def colour_of(a, b):
        return c[(a, b) if a < b else (b, a)]

    for depth in range(1, cfg.iterations + 1):
        new = {}
        for v, u in pairs:
            # the neighbour 2-sets {w,u}, {v,w} only exist for w outside {v,u}
            items = []
            for w in (nbrs[v] | nbrs[u]) - {v, u}:
                a, b = colour_of(w, u), colour_of(v, w)
                items.append((a, b) if a <= b else (b, a))
            new[v, u] = lookup((c[v, u], _summarise(items, cfg.hash_mode)), depth, learning)
        c = new
        _count([c.values()], out)
    return out


def refine(g: LabelledGraph, table: ColourTable, learning: bool = False, pair_cap: int = DEFAULT_PAIR_CAP):
    """Dispatch on the table's algorithm."""
    algo = table.config.algorithm
    if algo == WL:
        return wl_refine(g, table, learning=learning)
    if algo in (IWL, NIWL):
        return iwl_refine(g, table, learning=learning, normalise=False)
    if algo == WL2:
        return two_wl_refine(g, table, learning=learning, pair_cap=pair_cap)
    return two_lwl_refine(g, table, learning=learning, pair_cap=pair_cap)


def collect_colours(graphs: Iterable[LabelledGraph], config: KernelConfig,
                    pair_cap: int = DEFAULT_PAIR_CAP) -> tuple[ColourTable, FeatureIndex]:
    """Learn a table on training graphs; the index lists every output colour, by id."""
    table = ColourTable(config)
    seen: set = set()
    for g in graphs:
        seen.update(refine(g, table, learning=True, pair_cap=pair_cap))
    table.freeze()
    return table, FeatureIndex(tuple(sorted(seen)))


def embed(g: LabelledGraph, table: ColourTable, index: FeatureIndex, config: Optional[KernelConfig] = None,
          pair_cap: int = DEFAULT_PAIR_CAP) -> Embedding:
    """Count vector of ``g``'s colours over ``index``; colours outside it are ignored."""
    if config is not None and config != table.config:
        raise ColourTableError(f"config {config} does not match table config {table.config}")
    if not table.frozen:
        raise ColourTableError("embedding requires a frozen table")
    counts = np.zeros(len(index), dtype=np.int64)
    pos = index.position
    for colour, k in refine(g, table, pair_cap=pair_cap).items():
        i = pos(colour)
        if i is not None:
            counts[i] = k
    denominator = g.num_nodes if table.config.normalise and g.num_nodes else 1
    return Embedding(counts, denominator)
