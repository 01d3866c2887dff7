from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_kl, mvn_kl, mvn_moments_by_substitution

from bninfo import (
    Cpt,
    Network,
    Variable,
    compose_gbn,
    fit_mle,
    invert_lower_triangular,
    kl_clgbn,
    kl_discrete,
    kl_gbn_bounds,
    kl_gbn_empirical,
    kl_gbn_sparse,
    kl_mvn,
    kl_tables,
    sample_network,
    total_order,
)
from bninfo.generate import random_clg_pair, random_discrete_pair, random_gbn_pair
from bninfo.kl import IncompatibleNetworksError, empirical_node_kl

SEEDS = st.integers(0, 2**32 - 1)


def _all_gbn_routes(b, b2):
    ga, gb = compose_gbn(b), compose_gbn(b2)
    return {
        "direct": kl_mvn(ga, gb).value,
        "spectral": kl_mvn(ga, gb, route="spectral").value,
        "sparse": kl_gbn_sparse(b, b2).value,
    }


class TestDiscrete:
    def test_fixture_value(self, nets):
        rep = kl_discrete(nets["dbn_B"], nets["dbn_B_prime"])
        assert rep.value == pytest.approx(0.687, abs=2e-3)
        assert rep.value == pytest.approx(kl_tables(nets["dbn_B"], nets["dbn_B_prime"]).value, abs=1e-9)
        assert rep.value == pytest.approx(brute_kl(nets["dbn_B"], nets["dbn_B_prime"]), abs=1e-12)

    def test_fixture_cross_entropy_terms(self, nets):
        cross = kl_discrete(nets["dbn_B"], nets["dbn_B_prime"]).diagnostics["per_node_cross_entropy"]
        np.testing.assert_allclose([cross[n] for n in ("X1", "X2", "X3", "X4")], [0.795, 0.806, 0.944, 0.583], atol=2e-3)

    def test_asymmetric(self, nets):
        back = kl_discrete(nets["dbn_B_prime"], nets["dbn_B"]).value
        assert back == pytest.approx(brute_kl(nets["dbn_B_prime"], nets["dbn_B"]), abs=1e-12)
        assert abs(back - kl_discrete(nets["dbn_B"], nets["dbn_B_prime"]).value) > 1e-3

    def test_identity_is_zero(self, nets):
        assert kl_discrete(nets["dbn_B"], nets["dbn_B"]).value == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(SEEDS)
    def test_matches_joint_route(self, seed):
        b, b2 = random_discrete_pair(5, np.random.default_rng(seed), max_levels=3)
        local, joint = kl_discrete(b, b2).value, kl_tables(b, b2).value
        assert local >= -1e-12
        assert local == pytest.approx(joint, abs=1e-9)
        assert local == pytest.approx(brute_kl(b, b2), abs=1e-9)

    def test_absolute_continuity_violation(self):
        a = Variable.discrete("A", "ab")
        p = Network.from_locals([a], [Cpt("A", (), [[0.5], [0.5]])])
        q = Network.from_locals([a], [Cpt("A", (), [[1.0], [0.0]])])
        rep = kl_discrete(p, q)
        assert math.isinf(rep.value)
        assert rep.diagnostics["offending_cell"] == {"node": "A", "level": "b", "parents": {}}
        assert math.isinf(kl_tables(p, q).value)
        # the reverse direction is finite
        assert kl_discrete(q, p).value == pytest.approx(math.log(2))

    def test_different_variables_rejected(self, nets):
        with pytest.raises(IncompatibleNetworksError):
            kl_discrete(nets["dbn_B"], Network.from_locals([Variable.discrete("A", "ab")], [Cpt("A", (), [[0.5], [0.5]])]))


class TestGaussianExact:
    def test_fixture_all_routes(self, nets):
        values = _all_gbn_routes(nets["gbn_B"], nets["gbn_B_prime"])
        for v in values.values():
            assert v == pytest.approx(230.0846, abs=2e-3)
        assert max(values.values()) - min(values.values()) < 1e-8

    def test_fixture_diagnostics(self, nets):
        rep = kl_gbn_sparse(nets["gbn_B"], nets["gbn_B_prime"])
        assert rep.diagnostics["trace"] == pytest.approx(57.087, abs=2e-3)
        assert rep.diagnostics["quadratic"] == pytest.approx(408.362, abs=2e-3)
        vec = rep.diagnostics["scaled_mean_difference"]
        assert rep.diagnostics["order_b2"] == ["X1", "X3", "X4", "X2"]
        np.testing.assert_allclose([vec[n] for n in ("X1", "X3", "X4", "X2")], [0, -11.056, -5.459, 16.010], atol=2e-3)

    def test_fixture_against_textbook_formula(self, nets):
        mu0, s0 = mvn_moments_by_substitution(nets["gbn_B"])
        mu1, s1 = mvn_moments_by_substitution(nets["gbn_B_prime"])
        assert kl_gbn_sparse(nets["gbn_B"], nets["gbn_B_prime"]).value == pytest.approx(mvn_kl(mu0, s0, mu1, s1), rel=1e-10)

    def test_identity_is_zero(self, nets):
        for v in _all_gbn_routes(nets["gbn_B"], nets["gbn_B"]).values():
            assert v == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("seed", range(50))
    def test_routes_agree(self, seed):
        rng = np.random.default_rng(seed)
        b, b2 = random_gbn_pair(int(rng.integers(2, 16)), rng)
        values = _all_gbn_routes(b, b2)
        scale = max(1.0, abs(values["direct"]))
        assert max(values.values()) - min(values.values()) <= 1e-8 * scale
        assert values["direct"] >= -1e-10
        mu0, s0 = mvn_moments_by_substitution(b)
        mu1, s1 = mvn_moments_by_substitution(b2)
        assert values["sparse"] == pytest.approx(mvn_kl(mu0, s0, mu1, s1), rel=1e-7, abs=1e-9)

    def test_independent_of_topological_order(self):
        rng = np.random.default_rng(11)
        b, b2 = random_gbn_pair(8, rng, max_parents=1)
        base = kl_gbn_sparse(b, b2).value
        order = total_order(b.dag)
        # swap two adjacent nodes with no arc between them, if any
        for i in range(len(order) - 1):
            u, v = order[i], order[i + 1]
            if (u, v) not in b.dag.arcs:
                alt = order[:i] + [v, u] + order[i + 2:]
                assert kl_gbn_sparse(b, b2, order=alt).value == pytest.approx(base, abs=1e-10)
                break
        else:
            pytest.skip("no swappable pair")

    def test_asymmetric(self, nets):
        forward = kl_gbn_sparse(nets["gbn_B"], nets["gbn_B_prime"]).value
        backward = kl_gbn_sparse(nets["gbn_B_prime"], nets["gbn_B"]).value
        assert abs(forward - backward) > 1.0


class TestGaussianApproximate:
    def test_fixture_bounds(self, nets):
        bounds, rep = kl_gbn_bounds(nets["gbn_B"], nets["gbn_B_prime"])
        assert bounds.lower == pytest.approx(5.281, abs=2e-3)
        assert bounds.upper == pytest.approx(337.207, abs=2e-3)
        assert bounds.point_estimate == pytest.approx(42.199, abs=2e-3)
        assert not bounds.fallback
        assert rep.diagnostics["quadratic"] == pytest.approx(408.362, abs=2e-3)

    @pytest.mark.parametrize("block", range(4))
    def test_trace_sandwiched(self, block):
        """lower <= exact trace <= upper on 100 random sparse pairs (25 per block)."""
        rng = np.random.default_rng(1000 + block)
        for _ in range(25):
            b, b2 = random_gbn_pair(int(rng.integers(2, 30)), rng, max_parents=3)
            bounds, _ = kl_gbn_bounds(b, b2)
            trace = kl_gbn_sparse(b, b2).diagnostics["trace"]
            assert bounds.lower <= trace * (1 + 1e-12) + 1e-12
            assert trace <= bounds.upper * (1 + 1e-12)


class TestGaussianEmpirical:
    def test_terms_from_printed_inputs(self):
        n = 10
        var = [0.558, 1.595, 1.142, 1.523]
        var2 = [0.558, 1.542, 6.051, 3.999]
        norms = [0.0, 2.018, 54.434, 21.329]
        terms = [empirical_node_kl(v, v2, s, n) for v, v2, s in zip(var, var2, norms)]
        np.testing.assert_allclose(terms, [0.0, 0.066, 0.878, 0.440], atol=2e-3)
        assert sum(terms) == pytest.approx(1.383, abs=2e-3)

    def test_fitted_fixture_exact(self, nets):
        b, b2 = nets["gbn_fitted_B"], nets["gbn_fitted_B_prime"]
        assert kl_gbn_sparse(b, b2).value == pytest.approx(1.692, abs=2e-3)

    def test_fitted_and_residual_forms_agree(self, nets):
        data = sample_network(nets["gbn_B"], 200, seed=4).dataset()
        f1 = fit_mle(nets["gbn_fitted_B"].dag, data)
        f2 = fit_mle(nets["gbn_fitted_B_prime"].dag, data)
        a, b = kl_gbn_empirical(f1, f2), kl_gbn_empirical(f1, f2, use="residuals")
        assert a.value == pytest.approx(b.value, abs=1e-9)
        assert a.diagnostics["order"] == ["X1", "X2", "X4", "X3"]

    def test_gap_shrinks_with_sample_size(self, nets):
        """Median |empirical - exact| over 20 seeds decreases from n=100 to n=1000."""
        truth = nets["gbn_B"]
        dag, dag2 = nets["gbn_fitted_B"].dag, nets["gbn_fitted_B_prime"].dag
        medians = []
        for n in (100, 1000):
            gaps = []
            for seed in range(20):
                data = sample_network(truth, n, seed=seed).dataset()
                f1, f2 = fit_mle(dag, data), fit_mle(dag2, data)
                gaps.append(abs(kl_gbn_empirical(f1, f2).value - kl_gbn_sparse(f1.network, f2.network).value))
            medians.append(float(np.median(gaps)))
        assert medians[1] < medians[0]

    def test_sample_sizes_must_match(self, nets):
        d1 = sample_network(nets["gbn_B"], 50, seed=1).dataset()
        d2 = sample_network(nets["gbn_B"], 60, seed=1).dataset()
        with pytest.raises(IncompatibleNetworksError):
            kl_gbn_empirical(fit_mle(nets["gbn_B"].dag, d1), fit_mle(nets["gbn_B"].dag, d2))


class TestClg:
    def test_fixture_value_and_split(self, nets):
        rep = kl_clgbn(nets["clgbn_B"], nets["clgbn_B_prime"])
        assert rep.value == pytest.approx(5.456, abs=2e-3)
        assert rep.diagnostics["discrete"] == pytest.approx(0.577, abs=2e-3)
        assert rep.diagnostics["continuous"] == pytest.approx(4.879, abs=2e-3)

    def test_fixture_components(self, nets):
        rep = kl_clgbn(nets["clgbn_B"], nets["clgbn_B_prime"])
        comps = rep.diagnostics["components"]
        assert len(comps) == 4
        np.testing.assert_allclose([c["weight"] for c in comps], [0.076, 0.304, 0.124, 0.496], atol=2e-3)
        np.testing.assert_allclose([c["kl"] for c in comps], [1.721, 4.303, 2.504, 6.310], atol=2e-3)

    def test_fixture_naive_equals_sparse(self, nets):
        naive = kl_clgbn(nets["clgbn_B"], nets["clgbn_B_prime"], method="naive")
        sparse = kl_clgbn(nets["clgbn_B"], nets["clgbn_B_prime"], method="sparse")
        assert len(naive.diagnostics["components"]) == 8
        assert naive.value == pytest.approx(sparse.value, abs=1e-9)

    @pytest.mark.parametrize("seed", range(30))
    def test_random_naive_equals_sparse(self, seed):
        rng = np.random.default_rng(seed)
        b, b2 = random_clg_pair(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng)
        naive = kl_clgbn(b, b2, method="naive").value
        sparse = kl_clgbn(b, b2, method="sparse").value
        assert naive >= -1e-10
        assert naive == pytest.approx(sparse, abs=1e-9 * max(1.0, abs(naive)))

    def test_identity_is_zero(self, nets):
        assert kl_clgbn(nets["clgbn_B"], nets["clgbn_B"]).value == pytest.approx(0.0, abs=1e-10)


class TestTriangularInverse:
    def test_two_by_two(self):
        np.testing.assert_allclose(invert_lower_triangular(np.array([[2.0, 0], [1, 4]])), [[0.5, 0], [-0.125, 0.25]])

    def test_identity(self):
        np.testing.assert_array_equal(invert_lower_triangular(np.eye(5)), np.eye(5))

    def test_zero_diagonal(self):
        with pytest.raises(ZeroDivisionError):
            invert_lower_triangular(np.array([[1.0, 0], [1, 0]]))

    @settings(max_examples=40, deadline=None)
    @given(SEEDS, st.integers(1, 20))
    def test_against_numpy(self, seed, n):
        rng = np.random.default_rng(seed)
        c = np.tril(rng.normal(size=(n, n)))
        c[np.diag_indices(n)] = rng.uniform(0.5, 2.0, size=n)
        np.testing.assert_allclose(invert_lower_triangular(c) @ c, np.eye(n), atol=1e-8)
