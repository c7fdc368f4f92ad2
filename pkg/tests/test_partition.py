import cmath
import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingzeros.graph import (EMPTY, BoundaryCondition, build_graph, cayley_tree, complete_graph, disjoint_union,
                              path_graph, petersen_graph, random_bounded_degree_graph, random_tree, star_graph)
from isingzeros.partition import (CapExceededError, IndeterminateRatioError, ModelParams, PhysicalParams,
                                  XiPolynomial, merge_pairs, physical_to_model, ratio_direct, ratio_tree,
                                  tree_xi_polynomial, xi_polynomial, z_exact)
from isingzeros.sphere import chordal_distance, is_inf

from oracles import brute_coeffs, brute_ratio, brute_z, f_map, sphere_dist

K1 = build_graph(1, [])
K2 = complete_graph(2)


def unit(rng):
    return cmath.exp(1j * rng.uniform(-math.pi, math.pi))


# -- worked examples --------------------------------------------------------------

def test_z_exact_examples():
    xi, b = 0.3 + 0.7j, 0.4
    assert z_exact(K1, ModelParams(b, xi)) == pytest.approx(1 + xi)
    assert z_exact(K2, ModelParams(b, xi)) == pytest.approx(1 + 2 * b * xi + xi ** 2)
    assert z_exact(K1, ModelParams(b, xi), BoundaryCondition({0: 1})) == pytest.approx(xi)
    assert z_exact(K2, ModelParams(b, xi), EMPTY.fix(0, 0).fix(0, 1)) == 0


def test_xi_polynomial_examples():
    b = 0.37
    assert np.allclose(xi_polynomial(K2, b).coeffs, [1, 2 * b, 1])
    assert np.allclose(xi_polynomial(complete_graph(3), b).coeffs, [1, 3 * b * b, 3 * b * b, 1])
    star = cayley_tree(1, 2).graph
    assert np.allclose(xi_polynomial(star, b).coeffs, [1, b * b + 2 * b, b * b + 2 * b, 1])


def test_ratio_direct_examples():
    xi, b = 0.6 - 0.2j, 0.3
    assert ratio_direct(K1, EMPTY, 0, ModelParams(b, xi)) == pytest.approx(xi)
    assert ratio_direct(K2, EMPTY, 0, ModelParams(b, xi)) == pytest.approx(xi * (b + xi) / (1 + b * xi))
    assert ratio_direct(K2, BoundaryCondition({1: 0}), 0, ModelParams(b, xi)) == pytest.approx(xi * b)
    # fields at fixed vertices cancel, so they may be zero
    p = ModelParams(b, xi, fields={1: 0})
    assert ratio_direct(K2, BoundaryCondition({1: 1}), 0, p) == pytest.approx(xi / b)


def test_ratio_infinite_and_indeterminate():
    # xi = -1/b makes Z_{v=0} of K2 with the other end free vanish: 1 + b xi = 0
    b = 0.5
    assert is_inf(ratio_direct(K2, EMPTY, 0, ModelParams(b, -1 / b)))
    # a zero field at the root kills the numerator, xi_1 = -1/b the denominator
    with pytest.raises(IndeterminateRatioError):
        ratio_direct(K2, EMPTY, 0, ModelParams(b, 1, fields={0: 0, 1: -1 / b}))


def test_physical_mapping():
    assert physical_to_model(PhysicalParams(1.0, 0.0, 2.0)).xi == 1
    assert physical_to_model(PhysicalParams(1.0, 0.3, 2.0)).b < 1
    assert physical_to_model(PhysicalParams(-1.0, 0.3, 2.0)).b > 1
    with pytest.raises(ValueError):
        PhysicalParams(1, 0, 0)
    # the spin sum over sigma in {+1,-1}^V equals prefactor * Z_G(xi, b)
    G = petersen_graph()
    J, h, T = 0.7, -0.3, 1.9
    m = physical_to_model(PhysicalParams(J, h, T))
    spin_sum = 0.0
    for s in itertools.product((1, -1), repeat=G.n):
        spin_sum += math.exp((J * sum(s[u] * s[v] for u, v in G.edges) + h * sum(s)) / T)
    assert m.prefactor(G) * z_exact(G, ModelParams(m.b, m.xi)).real == pytest.approx(spin_sum, rel=1e-12)


def test_cap():
    with pytest.raises(CapExceededError, match="25"):
        xi_polynomial(path_graph(25), 0.5)
    with pytest.raises(CapExceededError):
        z_exact(path_graph(30), ModelParams(0.5), cap=24)
    # fixed vertices do not count against the cap
    tau = BoundaryCondition({v: 0 for v in range(6)})
    assert z_exact(path_graph(28), ModelParams(0.5, 0.1), tau, cap=24) != 0


def test_xipolynomial_json():
    P = xi_polynomial(complete_graph(4), 0.25)
    Q = XiPolynomial.from_json(P.to_json())
    assert np.array_equal(P.coeffs, Q.coeffs) and P.b == Q.b and Q.degree == 4


# -- oracle equivalence ----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_polynomial_matches_oracle(n, seed):
    rng = random.Random(seed)
    G = random_bounded_degree_graph(n, 4, rng)
    b = rng.uniform(0.05, 2.5)
    P = xi_polynomial(G, b)
    assert np.allclose(P.coeffs, brute_coeffs(G.n, G.edges, b), rtol=1e-12, atol=0)
    assert np.all(P.coeffs > 0)
    assert P.coeffs[0] == 1 and P.coeffs[-1] == 1
    assert np.array_equal(P.cut_counts, P.cut_counts[::-1])  # palindromic histogram
    assert np.allclose(P.coeffs, P.coeffs[::-1], rtol=1e-12)
    xi = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
    z = z_exact(G, ModelParams(b, xi))
    assert abs(P(xi) - z) <= 1e-10 * max(1, abs(z)) * np.sum(P.coeffs * abs(xi) ** np.arange(P.degree + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2 ** 32 - 1))
def test_multivariate_z_matches_oracle(n, seed):
    rng = random.Random(seed)
    G = random_bounded_degree_graph(n, 3, rng)
    b = rng.uniform(0.05, 2.5)
    fields = {v: complex(rng.gauss(0, 1), rng.gauss(0, 1)) for v in range(n)}
    r = rng.choice([0.0, 0.5, 1.0, 3.0])
    tau = {v: rng.randint(0, 1) for v in rng.sample(range(n), rng.randint(0, n))}
    z = z_exact(G, ModelParams(b, 1, fields=fields, scale=r), BoundaryCondition(tau))
    expect = brute_z(n, G.edges, b, [r * fields[v] for v in range(n)], tau)
    assert z == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_decomposition_and_multiplicativity(rng):
    for _ in range(20):
        G = random_bounded_degree_graph(rng.randint(2, 10), 3, rng)
        p = ModelParams(rng.uniform(0.1, 2), unit(rng))
        v = rng.randrange(G.n)
        whole = z_exact(G, p)
        assert whole == pytest.approx(z_exact(G, p, EMPTY.fix(v, 0)) + z_exact(G, p, EMPTY.fix(v, 1)), rel=1e-12)
        H = random_bounded_degree_graph(rng.randint(1, 8), 3, rng)
        assert z_exact(disjoint_union(G, H), p) == pytest.approx(whole * z_exact(H, p), rel=1e-12)


def test_tree_xi_polynomial_matches_enumeration(rng):
    for _ in range(20):
        T = random_tree(rng.randint(1, 14), rng, max_degree=4)
        b = rng.uniform(0.1, 2)
        assert np.allclose(tree_xi_polynomial(T, b).coeffs, xi_polynomial(T, b).coeffs, rtol=1e-12)
    forest = disjoint_union(path_graph(3), star_graph(3))
    assert np.allclose(tree_xi_polynomial(forest, 0.4).coeffs, xi_polynomial(forest, 0.4).coeffs)


# -- ratios ----------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_ratio_tree_matches_direct(n, seed):
    rng = random.Random(seed)
    T = random_tree(n, rng, max_degree=4)
    v = rng.randrange(n)
    leaves = [u for u in T.leaves() if u != v]
    tau = BoundaryCondition({u: rng.randint(0, 1) for u in rng.sample(leaves, min(len(leaves), 2))})
    fields = {u: unit(rng) for u in range(n)}
    p = ModelParams(rng.uniform(0.05, 2.5), 1, fields=fields)
    try:
        want = ratio_direct(T, tau, v, p)
    except IndeterminateRatioError:
        return
    got = ratio_tree(T, tau, v, p)
    assert chordal_distance(got, want) < 1e-10
    oracle = brute_ratio(n, T.edges, p.b, [fields[u] for u in range(n)], v, tau.assignments)
    assert sphere_dist(got, oracle) < 1e-10


def test_ratio_tree_nine_vertices_two_boundary_leaves(rng):
    for _ in range(30):
        T = random_tree(9, rng)
        leaves = T.leaves()
        v = next(u for u in range(9) if u not in leaves[:2])
        tau = BoundaryCondition({leaves[0]: rng.randint(0, 1), leaves[1]: rng.randint(0, 1)})
        p = ModelParams(rng.uniform(0.1, 0.9), unit(rng))
        want = ratio_direct(T, tau, v, p)
        assert abs(ratio_tree(T, tau, v, p) - want) <= 1e-12 * abs(want)


@pytest.mark.parametrize("d", [2, 3])
def test_cayley_ratio_is_orbit_of_xi(d, rng):
    for k in range(0, 5):
        xi, b = unit(rng), rng.uniform(0.4, 0.9)
        R = xi
        for _ in range(k):
            R = f_map(R, xi, b, d)
        T = cayley_tree(k, d)
        assert chordal_distance(ratio_tree(T.graph, EMPTY, 0, ModelParams(b, xi, d)), R) < 1e-10


def test_merge_pairs_snaps_and_raises():
    assert merge_pairs(1, 1, [], 0.5) == (1, 0)
    assert merge_pairs(5, 0, [], 0.5) == (0, 1)
    # child pair (1, -b) makes b p + q vanish: infinite ratio, snapped exactly
    p, q = merge_pairs(1, None, [(1, -0.5)], 0.5)
    assert q == 0
    with pytest.raises(IndeterminateRatioError, match="subtree rooted at 7"):
        merge_pairs(0, None, [(1, -0.5)], 0.5, where=7)


def test_ratio_tree_rejects_non_tree():
    from isingzeros.graph import GraphError
    with pytest.raises(GraphError):
        ratio_tree(complete_graph(3), EMPTY, 0, ModelParams(0.5))
