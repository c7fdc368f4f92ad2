import cmath
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from isingzeros.graph import (EMPTY, BoundaryCondition, GraphError, build_graph, complete_graph, cycle_graph,
                              petersen_graph, random_bounded_degree_graph, random_tree, star_graph)
from isingzeros.partition import (CapExceededError, IndeterminateRatioError, ModelParams, ratio_direct,
                                  ratio_tree)
from isingzeros.sawtree import build_saw_tree, ratio_via_saw, saw_fold
from isingzeros.sphere import chordal_distance

from conftest import GOLDEN
from oracles import brute_ratio, sphere_dist


def test_k3_golden():
    T = build_saw_tree(complete_graph(3), 0)
    assert T.dumps() + "\n" == (GOLDEN / "k3_saw.json").read_text()
    # (0,1,2,0): closing edge (2,0) ranks above the starting edge (0,1) at 0
    assert T.tau.get(3) == 0 and T.walks[3] == (0, 1, 2, 0)
    assert T.tau.get(6) == 1 and T.walks[6] == (0, 2, 1, 0)
    assert T.tree.n == 7 and T.tree.is_tree()


def test_four_cycle_closing_leaves_disagree():
    T = build_saw_tree(cycle_graph(4), 0)
    closing = [T.tau.get(i) for i, w in enumerate(T.walks) if len(w) > 1 and w[-1] in w[:-1]]
    assert sorted(closing) == [0, 1]


def test_tree_is_its_own_saw_tree(rng):
    for _ in range(20):
        G = random_tree(rng.randint(1, 12), rng, max_degree=4)
        v = rng.randrange(G.n)
        T = build_saw_tree(G, v)
        assert T.tree.n == G.n and len(T.tau) == 0
        assert sorted(w[-1] for w in T.walks) == list(range(G.n))
        p = ModelParams(rng.uniform(0.1, 2), cmath.exp(1j * rng.uniform(-3, 3)))
        assert chordal_distance(ratio_via_saw(G, v, p), ratio_tree(G, EMPTY, v, p)) < 1e-12


def test_saw_tree_structure(rng):
    for _ in range(30):
        G = random_bounded_degree_graph(rng.randint(1, 8), 3, rng, connected=True)
        T = build_saw_tree(G, 0)
        assert T.walks[0] == (0,)
        for a, c in T.tree.edges:
            parent, child = (a, c) if len(T.walks[a]) < len(T.walks[c]) else (c, a)
            assert T.walks[child][:-1] == T.walks[parent]
        for i, w in enumerate(T.walks):
            assert T.tree.degree(i) <= G.degree(w[-1])
            closes = len(set(w)) < len(w)
            if closes:
                assert len(set(w[:-1])) == len(w) - 1 and i in T.tau
            else:
                assert i not in T.tau
        assert build_saw_tree(G, 0).dumps() == T.dumps()


def test_boundary_inherited_by_walks():
    G = build_graph(4, [(0, 1), (1, 2), (2, 0), (2, 3)])
    T = build_saw_tree(G, 0, sigma=BoundaryCondition({3: 1}))
    ends = [i for i, w in enumerate(T.walks) if w[-1] == 3]
    assert ends and all(T.tau.get(i) == 1 for i in ends)


def test_validation():
    with pytest.raises(GraphError, match="connected"):
        build_saw_tree(build_graph(3, [(0, 1)]), 0)
    with pytest.raises(GraphError, match="not a leaf"):
        build_saw_tree(complete_graph(3), 0, sigma=BoundaryCondition({1: 0}))
    with pytest.raises(GraphError, match="root"):
        build_saw_tree(star_graph(2), 1, sigma=BoundaryCondition({1: 0}))
    with pytest.raises(CapExceededError):
        build_saw_tree(petersen_graph(), 0, max_nodes=100)


def test_k3_ratio():
    p = ModelParams(0.5, 1, 2)
    assert abs(ratio_via_saw(complete_graph(3), 0, p) - ratio_direct(complete_graph(3), EMPTY, 0, p)) < 1e-12


def test_petersen_ratio():
    p = ModelParams(0.6, cmath.exp(0.3j), 2)
    assert chordal_distance(ratio_via_saw(petersen_graph(), 0, p), ratio_direct(petersen_graph(), EMPTY, 0, p)) < 1e-9
    T = build_saw_tree(petersen_graph(), 0)
    tree_ratio = ratio_tree(T.tree, T.tau, 0, T.params_for(p))
    assert chordal_distance(tree_ratio, ratio_direct(petersen_graph(), EMPTY, 0, p)) < 1e-9


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2 ** 32 - 1))
def test_saw_identity_random(n, seed):
    rng = random.Random(seed)
    d = rng.choice([2, 3])
    G = random_bounded_degree_graph(n, d + 1, rng, connected=True)
    v = rng.randrange(n)
    leaves = [u for u in G.leaves() if u != v]
    sigma = BoundaryCondition({u: rng.randint(0, 1) for u in rng.sample(leaves, rng.randint(0, len(leaves)))})
    b = rng.choice([rng.uniform(0.05, 0.95), rng.uniform(1.05, 2)])
    fields = {u: cmath.exp(1j * rng.uniform(-math.pi, math.pi)) for u in range(n)}
    p = ModelParams(b, 1, d, fields=fields)
    try:
        want = brute_ratio(n, G.edges, b, [fields[u] for u in range(n)], v, sigma.assignments)
        if want is None:
            return
        got = ratio_via_saw(G, v, p, sigma)
    except IndeterminateRatioError:
        return
    assert sphere_dist(got, want) < 1e-9


def test_fold_counts_nodes():
    sizes = []
    saw_fold(complete_graph(4), 0, lambda walk, spin, kids: sizes.append(len(walk)) or 0)
    assert len(sizes) == build_saw_tree(complete_graph(4), 0).tree.n
