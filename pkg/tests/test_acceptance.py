"""One test per acceptance criterion; conftest prints a PASS/FAIL line for each.

Golden numbers are printed to three decimals, so the tolerance is 2e-3
unless a tighter agreement between two of our own routes is required.
"""

from __future__ import annotations

import numpy as np
import pytest
from oracles import brute_kl, brute_marginal

from bninfo import (
    build_junction_tree,
    bundled_network,
    calibrate,
    compose_clgbn,
    compose_discrete,
    compose_gbn,
    decompose_clgbn,
    decompose_discrete,
    decompose_gbn,
    entropy_clgbn,
    entropy_discrete,
    entropy_gbn,
    entropy_mvn,
    extract_subnetworks,
    fit_mle,
    kl_clgbn,
    kl_discrete,
    kl_gbn_bounds,
    kl_gbn_empirical,
    kl_gbn_sparse,
    kl_mvn,
    kl_tables,
    mc_entropy,
    mc_kl,
    query_marginal,
    sample_network,
)
from bninfo.bench import loglog_slope, run_bench
from bninfo.generate import random_clg, random_discrete, random_discrete_pair, random_gbn, random_gbn_pair
from bninfo.kl import empirical_node_kl

TOL = 2e-3


def test_01_discrete_compose(nets):
    joint = compose_discrete(nets["dbn_B"])
    assert joint.prob(X1="a", X2="d", X3="f", X4="h") == pytest.approx(0.051, abs=TOL)


def test_02_discrete_entropy(nets):
    net = nets["dbn_B"]
    rep = entropy_discrete(net)
    assert rep.total == pytest.approx(2.440, abs=TOL)
    np.testing.assert_allclose([rep.per_node[n] for n in ("X1", "X2", "X3", "X4")], [0.691, 0.641, 0.536, 0.572], atol=TOL)
    p3 = query_marginal(calibrate(build_junction_tree(net)), ["X3"]).probabilities
    np.testing.assert_allclose(p3, [0.601, 0.399], atol=TOL)


def test_03_discrete_kl(nets):
    b, b2 = nets["dbn_B"], nets["dbn_B_prime"]
    local, joint = kl_discrete(b, b2).value, kl_tables(b, b2).value
    assert local == pytest.approx(0.687, abs=TOL)
    assert joint == pytest.approx(0.687, abs=TOL)
    assert abs(local - joint) <= 1e-9


def test_04_gbn_composition(nets):
    net = nets["gbn_B"]
    g = compose_gbn(net)
    assert (g["X3", "X3"], g["X3", "X4"], g["X1", "X3"]) == pytest.approx((10.916, 8.347, 1.440), abs=TOL)
    np.testing.assert_allclose([g.mean[g.variables.index(n)] for n in ("X1", "X2", "X4", "X3")],
                               [2.400, 1.800, 8.480, 12.276], atol=TOL)
    back = decompose_gbn(g, net.dag)
    betas = (back.locals["X4"].coefficients["X1"], back.locals["X4"].coefficients["X2"], back.locals["X3"].coefficients["X4"])
    assert betas == pytest.approx((1.5, 2.6, 1.2), abs=TOL)
    assert (back.locals["X4"].intercept, back.locals["X3"].intercept) == pytest.approx((0.2, 2.1), abs=TOL)


def test_05_gbn_entropy(nets):
    net = nets["gbn_B"]
    assert entropy_gbn(net).total == pytest.approx(5.304, abs=TOL)
    assert entropy_mvn(compose_gbn(net)) == pytest.approx(5.304, abs=TOL)


def test_06_gbn_kl(nets):
    b, b2 = nets["gbn_B"], nets["gbn_B_prime"]
    ga, gb = compose_gbn(b), compose_gbn(b2)
    sparse = kl_gbn_sparse(b, b2)
    values = [kl_mvn(ga, gb).value, kl_mvn(ga, gb, route="spectral").value, sparse.value]
    for v in values:
        assert v == pytest.approx(230.0846, abs=TOL)
    assert max(values) - min(values) <= 1e-8
    d = sparse.diagnostics
    assert d["trace"] == pytest.approx(57.087, abs=TOL)
    assert d["quadratic"] == pytest.approx(408.362, abs=TOL)
    vec = d["scaled_mean_difference"]
    np.testing.assert_allclose([vec[n] for n in ("X1", "X3", "X4", "X2")], [0, -11.056, -5.459, 16.010], atol=TOL)


def test_07_approximate_gbn_kl(nets):
    bounds, _ = kl_gbn_bounds(nets["gbn_B"], nets["gbn_B_prime"])
    assert (bounds.lower, bounds.upper, bounds.point_estimate) == pytest.approx((5.281, 337.207, 42.199), abs=TOL)
    rng = np.random.default_rng(7)
    for _ in range(100):
        b, b2 = random_gbn_pair(int(rng.integers(2, 30)), rng, max_parents=3)
        bd, _ = kl_gbn_bounds(b, b2)
        trace = kl_gbn_sparse(b, b2).diagnostics["trace"]
        assert bd.lower <= trace * (1 + 1e-12) + 1e-12 and trace <= bd.upper * (1 + 1e-12)


def test_08_empirical_gbn_kl(nets):
    terms = [
        empirical_node_kl(v, v2, s, 10)
        for v, v2, s in zip([0.558, 1.595, 1.142, 1.523], [0.558, 1.542, 6.051, 3.999], [0.0, 2.018, 54.434, 21.329])
    ]
    np.testing.assert_allclose(terms, [0.0, 0.066, 0.878, 0.440], atol=TOL)
    assert sum(terms) == pytest.approx(1.383, abs=TOL)
    assert kl_gbn_sparse(nets["gbn_fitted_B"], nets["gbn_fitted_B_prime"]).value == pytest.approx(1.692, abs=TOL)

    dag, dag2 = nets["gbn_fitted_B"].dag, nets["gbn_fitted_B_prime"].dag
    medians = []
    for n in (100, 1000):
        gaps = []
        for seed in range(20):
            data = sample_network(nets["gbn_B"], n, seed=seed).dataset()
            f1, f2 = fit_mle(dag, data), fit_mle(dag2, data)
            gaps.append(abs(kl_gbn_empirical(f1, f2).value - kl_gbn_sparse(f1.network, f2.network).value))
        medians.append(np.median(gaps))
    assert medians[1] < medians[0]


def test_09_clgbn_composition(nets):
    net = nets["clgbn_B"]
    mix = compose_clgbn(net)
    comp = mix.component_for({"X2": "c", "X3": "e"})
    direct = compose_gbn(extract_subnetworks(net).components[("c", "e")])
    np.testing.assert_allclose(comp.covariance, direct.covariance, atol=1e-12)
    printed = {"ace": 0.040, "bce": 0.036, "ade": 0.040, "bde": 0.084,
               "acf": 0.160, "bcf": 0.144, "adf": 0.160, "bdf": 0.336}
    for (x1, x2, x3), p in printed.items():
        assert mix.discrete_joint.prob(X1=x1, X2=x2, X3=x3) == pytest.approx(p, abs=TOL)
    rep = entropy_clgbn(net)
    assert rep.total == pytest.approx(5.203, abs=TOL)
    assert sum(rep.per_node[n] for n in net.discrete_names) == pytest.approx(1.817, abs=TOL)
    assert sum(rep.per_node[n] for n in net.continuous_names) == pytest.approx(3.386, abs=TOL)


def test_10_clgbn_kl(nets):
    b, b2 = nets["clgbn_B"], nets["clgbn_B_prime"]
    sparse, naive = kl_clgbn(b, b2, "sparse"), kl_clgbn(b, b2, "naive")
    assert sparse.value == pytest.approx(5.456, abs=TOL)
    assert sparse.diagnostics["discrete"] == pytest.approx(0.577, abs=TOL)
    assert sparse.diagnostics["continuous"] == pytest.approx(4.879, abs=TOL)
    assert len(naive.diagnostics["components"]) == 8 and len(sparse.diagnostics["components"]) == 4
    assert abs(naive.value - sparse.value) <= 1e-9
    comps = sparse.diagnostics["components"]
    np.testing.assert_allclose([c["weight"] for c in comps], [0.076, 0.304, 0.124, 0.496], atol=TOL)
    np.testing.assert_allclose([c["kl"] for c in comps], [1.721, 4.303, 2.504, 6.310], atol=TOL)


def _same_params(a, b):
    """Parameter equality up to the order parents are listed in."""
    for name in a.names:
        la, lb = a.locals[name], b.locals[name]
        if hasattr(la, "table"):
            arr = b.factor(name)
            perm = [0] + [1 + lb.parents.index(p) for p in la.parents]
            if not np.allclose(np.transpose(arr, perm), a.factor(name), atol=1e-9, rtol=0):
                return False
            continue
        ca = {frozenset(zip(getattr(la, "discrete_parents", ()), k)): g
              for k, g in getattr(la, "components", {(): la}).items()}
        cb = {frozenset(zip(getattr(lb, "discrete_parents", ()), k)): g
              for k, g in getattr(lb, "components", {(): lb}).items()}
        for key, g in ca.items():
            h = cb[key]
            pairs = [(g.intercept, h.intercept), (g.variance, h.variance)]
            pairs += [(g.coefficients[p], h.coefficients[p]) for p in g.coefficients]
            if any(abs(x - y) > 1e-9 for x, y in pairs):
                return False
    return True


def test_11_property_suites():
    rng = np.random.default_rng(11)
    for _ in range(50):
        net = random_discrete(int(rng.integers(1, 7)), rng)
        assert _same_params(net, decompose_discrete(compose_discrete(net), net.dag))
        g = random_gbn(int(rng.integers(1, 12)), rng)
        assert _same_params(g, decompose_gbn(compose_gbn(g), g.dag))
        c = random_clg(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng)
        assert _same_params(c, decompose_clgbn(compose_clgbn(c), c.dag))

    for _ in range(30):
        net = random_discrete(int(rng.integers(2, 7)), rng, max_levels=3)
        jt = calibrate(build_junction_tree(net))
        for name in net.names:
            got = query_marginal(jt, [name])
            for (lv,), p in brute_marginal(net, [name]).items():
                assert abs(got.prob(**{name: lv}) - p) <= 1e-9

    for _ in range(20):
        a, b = random_discrete_pair(4, rng)
        assert kl_discrete(a, b).value >= -1e-12
        assert kl_discrete(a, b).value == pytest.approx(brute_kl(a, b), abs=1e-9)
        assert kl_discrete(a, a).value == pytest.approx(0.0, abs=1e-12)
        g1, g2 = random_gbn_pair(6, rng)
        assert kl_gbn_sparse(g1, g2).value >= -1e-10
        assert kl_gbn_sparse(g1, g1).value == pytest.approx(0.0, abs=1e-10)

    for first, second, exact_h, exact_kl in (
        ("dbn_B", "dbn_B_prime", entropy_discrete, kl_discrete),
        ("gbn_B", "gbn_B_prime", entropy_gbn, kl_gbn_sparse),
        ("clgbn_B", "clgbn_B_prime", entropy_clgbn, kl_clgbn),
    ):
        b, b2 = bundled_network(first), bundled_network(second)
        h = mc_entropy(b, 50_000, seed=3)
        assert abs(h.value - exact_h(b).total) <= 3 * h.std_error
        k = mc_kl(b, b2, 50_000, seed=3)
        assert abs(k.value - exact_kl(b, b2).value) <= 3 * k.std_error


def test_12_scaling():
    sizes = [50, 100, 200, 400]
    glob = run_bench("kl-global", sizes, repetitions=15)
    sparse = run_bench("kl-sparse", sizes, repetitions=15)
    for g, s in zip(glob, sparse):
        if g.sizes["N"] >= 100:
            assert s.median < g.median, (g.sizes, s.median, g.median)
    approx = run_bench("kl-approx", [100, 200, 400, 800, 1600])
    assert loglog_slope(approx, "N") <= 2.5
    empirical = run_bench("kl-empirical", [1_000, 10_000, 100_000, 1_000_000])
    assert abs(loglog_slope(empirical, "n") - 1.0) <= 0.3
