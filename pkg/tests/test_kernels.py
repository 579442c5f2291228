import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlfeatures.ilg import LabelledGraph
from wlfeatures.kernels import (UNSEEN, ColourTable, ColourTableError, KernelConfig, PairMemoryError,
                                collect_colours, embed, iwl_refine, refine, wl_colourings)

from conftest import cycle, random_graph

ALGOS = ["wl", "iwl", "niwl", "2-lwl", "2-wl"]


def star(k):
    return LabelledGraph.from_edges(["x"] * (k + 1), [(0, i) for i in range(1, k + 1)])


def test_wl_is_colour_refinement_on_path():
    g = LabelledGraph.from_edges(["x"] * 3, [(0, 1), (1, 2)])
    table = ColourTable(KernelConfig("wl", 2, "mset"))
    rounds = wl_colourings(g, table, 2, "mset", allocate=True)
    assert len(set(rounds[0])) == 1
    assert rounds[1][0] == rounds[1][2] != rounds[1][1]


def test_colour_ids_are_dense_and_deterministic():
    graphs = [random_graph(random.Random(s), 10) for s in range(5)]
    t1, i1 = collect_colours(graphs, KernelConfig("wl", 3, "mset"))
    t2, i2 = collect_colours(graphs, KernelConfig("wl", 3, "mset"))
    assert t1.dumps() == t2.dumps() and i1 == i2
    assert i1.colours == tuple(range(len(t1)))


def test_table_round_trip():
    graphs = [random_graph(random.Random(s), 10) for s in range(5)]
    for algo in ALGOS:
        table, index = collect_colours(graphs, KernelConfig(algo, 2, "set"))
        back = ColourTable.loads(table.dumps())
        assert back.dumps() == table.dumps()
        g = random_graph(random.Random(99), 10)
        assert embed(g, back, index) == embed(g, table, index)


def test_table_rejects_other_config():
    table, index = collect_colours([star(2)], KernelConfig("wl", 1, "set"))
    with pytest.raises(ColourTableError):
        embed(star(2), table, index, KernelConfig("wl", 2, "set"))
    with pytest.raises(ColourTableError):
        iwl_refine(star(2), table)


def test_embedding_requires_frozen_table():
    table = ColourTable(KernelConfig("wl", 1, "set"))
    with pytest.raises(ColourTableError):
        embed(star(2), table, collect_colours([star(2)], KernelConfig())[1])


def test_unseen_colours_are_dropped():
    table, index = collect_colours([star(1)], KernelConfig("wl", 1, "mset"))
    e = embed(LabelledGraph.from_edges(["y", "y"], [(0, 1)]), table, index)
    assert e.counts.sum() == 0
    assert UNSEEN not in refine(star(3), table)


def test_niwl_is_iwl_divided_by_nodes():
    g = random_graph(random.Random(3), 10)
    ti, ii = collect_colours([g], KernelConfig("iwl", 2, "mset"))
    tn, inn = collect_colours([g], KernelConfig("niwl", 2, "mset"))
    a, b = embed(g, ti, ii), embed(g, tn, inn)
    assert b.denominator == g.num_nodes
    assert [x / g.num_nodes for x in a.as_fractions()] == b.as_fractions()
    assert sum(b.as_fractions()) == Fraction(g.num_nodes * 3)  # |V| runs x (L+1) iterations


def test_pair_cap():
    with pytest.raises(PairMemoryError):
        collect_colours([LabelledGraph.from_edges(["x"] * 40, [])], KernelConfig("2-wl", 1), pair_cap=100)


def test_dependencies_point_to_lower_depth():
    graphs = [random_graph(random.Random(s), 12) for s in range(4)]
    for algo in ["wl", "2-lwl", "2-wl"]:
        table, index = collect_colours(graphs, KernelConfig(algo, 3, "mset"))
        for c in index.colours:
            assert all(table.depth(d) == table.depth(c) - 1 for d in table.dependencies(c))


def test_set_hash_collapses_multiplicity():
    table, index = collect_colours([star(2), star(5)], KernelConfig("wl", 1, "set"))
    c2 = refine(star(2), table)
    c5 = refine(star(5), table)
    assert set(c2) == set(c5)


def test_two_lwl_and_two_wl_see_triangles():
    g = LabelledGraph.from_edges(["x"] * 6, cycle(3) + cycle(3, 3))
    h = LabelledGraph.from_edges(["x"] * 6, cycle(6))
    for algo in ["2-wl", "2-lwl"]:
        table, index = collect_colours([g, h], KernelConfig(algo, 1, "mset"))
        assert embed(g, table, index) != embed(h, table, index)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(ALGOS), st.sampled_from(["mset", "set"]))
def test_embedding_counts_total(seed, algo, mode):
    g = random_graph(random.Random(seed), 8)
    L = 2
    table, index = collect_colours([g], KernelConfig(algo, L, mode))
    e = embed(g, table, index)
    n = g.num_nodes
    per_round = {"wl": n, "iwl": n * n, "niwl": n * n, "2-lwl": n * (n - 1) // 2, "2-wl": n * n}[algo]
    assert sum(e.as_fractions()) * e.denominator == per_round * (L + 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_refinement_is_monotone_in_iterations(seed):
    # a partition at L+1 refines the one at L: equal colours at L+1 imply equal at L
    g = random_graph(random.Random(seed), 15)
    table = ColourTable(KernelConfig("wl", 4, "mset"))
    rounds = wl_colourings(g, table, 4, "mset", allocate=True)
    for prev, cur in zip(rounds, rounds[1:]):
        for u in range(g.num_nodes):
            for v in range(g.num_nodes):
                if cur[u] == cur[v]:
                    assert prev[u] == prev[v]


def test_float_view_matches_fractions():
    g = random_graph(random.Random(1), 9)
    table, index = collect_colours([g], KernelConfig("niwl", 1, "mset"))
    e = embed(g, table, index)
    assert np.allclose(e.as_float(), [float(x) for x in e.as_fractions()])
