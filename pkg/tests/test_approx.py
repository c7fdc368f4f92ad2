import cmath
import json
import math
import random

import numpy as np
import pytest

from isingzeros.approx import ConformalMap, approx_partition, log_difference, log_z_coefficients
from isingzeros.dynamics import solve_parabolic
from isingzeros.graph import complete_graph, petersen_graph, random_bounded_degree_graph
from isingzeros.partition import ModelParams, xi_polynomial, z_exact


def test_log_series_single_vertex():
    l = log_z_coefficients([1, 1], 12).l_coeffs
    assert l[0] == 0
    assert np.allclose(l[1:], [(-1) ** (k + 1) / k for k in range(1, 13)], rtol=1e-15)


def test_log_series_k2():
    b = 0.35
    l = log_z_coefficients([1, 2 * b, 1], 2).l_coeffs
    assert l[1] == pytest.approx(2 * b) and l[2] == pytest.approx(1 - 2 * b * b)


def test_log_series_extended_precision_agrees():
    P = xi_polynomial(petersen_graph(), 0.5)
    a = log_z_coefficients(P, 40).l_coeffs
    b = log_z_coefficients(P, 40, dps=40).l_coeffs
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_log_series_reproduces_polynomial(rng):
    for _ in range(20):
        # at |xi| = 0.1 the tail after m = degree is about 10^-(degree+1)
        G = random_bounded_degree_graph(rng.randint(6, 10), 3, rng)
        P = xi_polynomial(G, rng.uniform(0.2, 0.9))
        series = log_z_coefficients(P, 200)
        xi = 0.5 * math.sqrt(rng.random()) * cmath.exp(1j * rng.uniform(-3, 3))
        assert abs(cmath.exp(series.evaluate(xi)) / P(xi) - 1) < 1e-8
        small = 0.1 * cmath.exp(1j * rng.uniform(-3, 3))
        assert abs(cmath.exp(series.evaluate(small, P.degree)) / P(small) - 1) < 1e-6


def test_log_series_rejects():
    with pytest.raises(ValueError):
        log_z_coefficients([0, 1], 3)
    with pytest.raises(ValueError):
        log_z_coefficients([1, 1], -1)


def test_conformal_map():
    th = solve_parabolic(2, 0.5).theta_b
    phi = ConformalMap(math.tan(th / 2))
    assert phi.psi(0) == pytest.approx(0, abs=1e-15)
    rng = random.Random(2)
    for _ in range(50):
        z = math.sqrt(rng.random()) * cmath.exp(1j * rng.uniform(-3, 3)) * 0.999
        assert phi.preimage(phi.psi(z)) == pytest.approx(z, abs=1e-9)
    # the boundary goes to the rays Re s = 1/2, |Im s| >= tau/2
    for t in np.linspace(0.1, 3.0, 20):
        s = phi.psi(cmath.exp(1j * t))
        assert s.real == pytest.approx(0.5, abs=1e-12) and abs(s.imag) >= phi.tau / 2 - 1e-12
    # the region |arg xi| < theta_b maps inside the disk
    for frac in (0.3, 0.9, 0.99):
        xi = cmath.exp(1j * frac * th)
        assert abs(phi.preimage(xi / (1 + xi))) < 1


def test_k2_example():
    th = solve_parabolic(2, 0.5).theta_b
    res = approx_partition(complete_graph(2), ModelParams(0.5, cmath.exp(0.3j * th), 2), 1e-3)
    assert res.status == "OK" and res.log_error < 1e-3 and res.achieved


@pytest.mark.parametrize("G", [complete_graph(4), petersen_graph()], ids=["K4", "Petersen"])
@pytest.mark.parametrize("eps", [1e-2, 1e-4])
def test_graphs_at_fraction_of_theta(G, eps):
    th = solve_parabolic(2, 0.5).theta_b
    for frac in (0.3, 0.9):
        res = approx_partition(G, ModelParams(0.5, cmath.exp(1j * frac * th), 2), eps)
        assert res.log_error < eps
        assert res.full_log_error < 1e-10
        assert abs(res.exact) > 0


def test_petersen_error_decays():
    G = petersen_graph()
    th = solve_parabolic(2, 0.5).theta_b
    xi = cmath.exp(0.6j * th)
    a = xi_polynomial(G, 0.5).coeffs
    phi = ConformalMap(math.tan(th / 2))
    z = phi.preimage(xi / (1 + xi))
    series = phi.log_coefficients(a, 300)
    exact = z_exact(G, ModelParams(0.5, xi, 2))
    errs = [log_difference(cmath.exp(series.evaluate(z, m)) * (1 + xi) ** 10, exact) for m in range(0, 301, 20)]
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]) if e1 > 1e-13)
    assert errs[-1] < 1e-10


def test_error_trend_randomized():
    rng = random.Random(11)
    good = total = 0
    for _ in range(40):
        G = random_bounded_degree_graph(rng.randint(2, 10), 3, rng)
        b = rng.uniform(0.4, 0.9)
        th = solve_parabolic(2, b).theta_b
        xi = cmath.exp(1j * rng.uniform(-0.9, 0.9) * th)
        a = xi_polynomial(G, b).coeffs
        phi = ConformalMap(math.tan(th / 2))
        z = phi.preimage(xi / (1 + xi))
        series = phi.log_coefficients(a, 60)
        exact = z_exact(G, ModelParams(b, xi, 2))
        err = lambda m: log_difference(cmath.exp(series.evaluate(z, m)) * (1 + xi) ** G.n, exact)
        for m in range(0, 55, 5):
            total += 1
            good += err(m + 5) <= err(m) + 1e-13
    assert good >= 0.9 * total


def test_out_of_domain():
    th = solve_parabolic(2, 0.5).theta_b
    assert approx_partition(complete_graph(4), ModelParams(0.2, 1, 2), 1e-3).status == "OUT_OF_DOMAIN"
    assert approx_partition(complete_graph(4), ModelParams(0.5, cmath.exp(1j * (th + 0.1)), 2), 1e-3).status \
        == "OUT_OF_DOMAIN"
    assert approx_partition(complete_graph(4), ModelParams(2.0, 1, 2), 1e-3).status == "OUT_OF_DOMAIN"
    with pytest.raises(ValueError):
        approx_partition(complete_graph(4), ModelParams(0.5, 1, 2), 0)


def test_report_json():
    res = approx_partition(complete_graph(4), ModelParams(0.5, 1, 2), 1e-4)
    obj = json.loads(res.dumps())
    assert set(obj) >= {"m_used", "approx", "exact", "log_error"}
    assert len(obj["approx"]) == 2 and obj["log_error"] < 1e-4
