import random
from collections import Counter

from hypothesis import given, settings, strategies as st

from wlfeatures.ilg import (COMPLETE, PARTIAL, ILGBuilder, LabelledGraph, build_ilg, feature_alphabet_size,
                            normalise_repr)
from wlfeatures.pddl import detect_static_predicates, ground_actions, load_task, successors

from conftest import DATA, random_graph


def test_three_blocks_ilg(three_blocks):
    g = build_ilg(three_blocks)
    assert g.num_nodes == 3 + 8
    assert g.features[:3] == ("object",) * 3
    feats = dict(zip(g.names, g.features))
    assert feats["(on b a)"] == "on:ug"
    assert feats["(ontable a)"] == "ontable:ag"
    assert feats["(ontable c)"] == "ontable:ug"
    assert feats["(on c b)"] == "on:ap"
    assert feats["(handempty)"] == "handempty:ap"
    assert len(g.edges) == 9
    names = g.names
    on_ba = names.index("(on b a)")
    assert sorted((names[v], lab) for u, v, lab in g.edges if u == on_ba) == [("a", 2), ("b", 1)]


def test_goal_atoms_always_present(three_blocks):
    ground = ground_actions(three_blocks)
    builder = ILGBuilder(three_blocks)
    for _, s in successors(three_blocks.init, ground):
        g = builder.build(s)
        for atom in three_blocks.goal:
            status = g.features[g.names.index(str(atom))]
            assert status == ("on:ag" if atom in s and atom.predicate == "on" else status)
            assert status.endswith(":ag") == (atom in s)


def test_partial_drops_static_non_goal_atoms():
    task = load_task(DATA / "corridor" / "domain.pddl", DATA / "corridor" / "p01.pddl")
    statics = detect_static_predicates(task.domain)
    full = build_ilg(task, repr=COMPLETE, statics=statics)
    part = build_ilg(task, repr="part", statics=statics)
    dropped = [n for n in full.names if n not in part.names]
    assert dropped and all(n.split()[0].strip("(") in statics for n in dropped)
    assert part.num_nodes < full.num_nodes


def test_repr_aliases():
    assert normalise_repr("part") == PARTIAL and normalise_repr("cmpl") == COMPLETE


def test_alphabet_bound_on_fixture_states(three_blocks):
    ground = ground_actions(three_blocks)
    seen = set()
    frontier = [three_blocks.init]
    visited = {three_blocks.init}
    builder = ILGBuilder(three_blocks)
    while frontier:
        s = frontier.pop()
        seen.update(builder.build(s).features)
        for _, t in successors(s, ground):
            if t not in visited:
                visited.add(t)
                frontier.append(t)
    assert len(seen) <= feature_alphabet_size(three_blocks.domain)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_text_round_trip(seed):
    g = random_graph(random.Random(seed), max_nodes=12)
    h = LabelledGraph.from_text(g.to_text())
    assert h.features == g.features and h.edges == g.edges


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_permuted_preserves_structure(seed):
    rng = random.Random(seed)
    g = random_graph(rng, max_nodes=12)
    perm = list(range(g.num_nodes))
    rng.shuffle(perm)
    h = g.permuted(perm)
    assert Counter(h.features) == Counter(g.features)
    assert Counter(lab for *_, lab in h.edges) == Counter(lab for *_, lab in g.edges)
    for v in range(g.num_nodes):
        assert len(h.adjacency[perm[v]]) == len(g.adjacency[v])
