from __future__ import annotations

import numpy as np
import pytest
from oracles import normal_equations

from bninfo import Dag, Dataset, Variable, fit_mle, sample_network, validate_network
from bninfo.fitting import FitError
from bninfo.generate import random_clg, random_discrete, random_gbn


def test_binary_frequencies():
    a = Variable.discrete("A", "ab")
    data = Dataset.from_columns([a], {"A": [0] * 6 + [1] * 4})
    fit = fit_mle(Dag((a,), frozenset()), data)
    np.testing.assert_allclose(fit.network.locals["A"].table[:, 0], [0.6, 0.4])


def test_gaussian_fixture_recovered_within_standard_errors(nets):
    truth = nets["gbn_B"]
    data = sample_network(truth, 1000, seed=11).dataset()
    fit = fit_mle(truth.dag, data)
    for child, parents in (("X4", ("X1", "X2")), ("X3", ("X4",))):
        x = np.column_stack([data[p] for p in parents])
        design = np.column_stack([np.ones(data.n), x])
        var = fit.summary.variance[child]
        se = np.sqrt(np.diag(var * np.linalg.inv(design.T @ design)))[1:]
        est = np.array([fit.network.locals[child].coefficients[p] for p in parents])
        true = np.array([truth.locals[child].coefficients[p] for p in parents])
        assert np.all(np.abs(est - true) <= 3 * se), (child, est, true, se)


def test_ols_matches_normal_equations(rng):
    names = ["Y", "P", "Q"]
    variables = [Variable.continuous(n) for n in names]
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=5)
    data = Dataset.from_columns(variables, {"Y": y, "P": x[:, 0], "Q": x[:, 1]})
    dag = Dag(tuple(variables), frozenset({("P", "Y"), ("Q", "Y")}))
    loc = fit_mle(dag, data).network.locals["Y"]
    ref = normal_equations(y, x)
    np.testing.assert_allclose([loc.intercept, loc.coefficients["P"], loc.coefficients["Q"]], ref, atol=1e-10)


def test_variance_uses_divisor_n(rng):
    x, y = Variable.continuous("X"), Variable.continuous("Y")
    xs = rng.normal(size=30)
    ys = 2 * xs + rng.normal(size=30)
    fit = fit_mle(Dag((x, y), frozenset({("X", "Y")})), Dataset.from_columns([x, y], {"X": xs, "Y": ys}))
    s = fit.summary
    np.testing.assert_allclose(s.variance["Y"], s.residuals["Y"] @ s.residuals["Y"] / 30, atol=1e-12)
    np.testing.assert_allclose(s.fitted["Y"] + s.residuals["Y"], ys, atol=1e-12)
    np.testing.assert_allclose(s.variance["X"], np.var(xs), atol=1e-12)


def test_unseen_parent_configuration_is_named():
    a, b = Variable.discrete("A", "ab"), Variable.discrete("B", "xy")
    data = Dataset.from_columns([a, b], {"A": [0, 0, 0], "B": [0, 1, 0]})
    with pytest.raises(FitError, match=r"'B'.*'A': 'b'"):
        fit_mle(Dag((a, b), frozenset({("A", "B")})), data)


def test_singular_design_names_node():
    x, z, y = (Variable.continuous(n) for n in "XZY")
    xs = np.arange(6.0)
    data = Dataset.from_columns([x, z, y], {"X": xs, "Z": 2 * xs, "Y": xs ** 2})
    with pytest.raises(FitError, match="'Y'"):
        fit_mle(Dag((x, z, y), frozenset({("X", "Y"), ("Z", "Y")})), data)


def test_dataset_rejects_bad_levels():
    a = Variable.discrete("A", "ab")
    with pytest.raises(ValueError):
        Dataset.from_columns([a], {"A": [0, 2]})
    with pytest.raises(ValueError):
        Dataset.from_columns([a], {"A": []})


@pytest.mark.parametrize("family", ["discrete", "gaussian", "clg"])
def test_fitted_networks_validate(family):
    rng = np.random.default_rng(5)
    fitted = 0
    for _ in range(8):
        net = {"discrete": lambda: random_discrete(5, rng), "gaussian": lambda: random_gbn(5, rng),
               "clg": lambda: random_clg(3, 3, rng)}[family]()
        data = sample_network(net, 4000, seed=int(rng.integers(1000))).dataset()
        try:
            fit = fit_mle(net.dag, data, net.kind)
        except FitError:
            continue  # an unobserved parent configuration: outside the property's precondition
        fitted += 1
        assert validate_network(fit.network).ok
        if family == "discrete":
            for cpt in fit.network.locals.values():
                np.testing.assert_allclose(cpt.table.sum(axis=0), 1.0, atol=1e-12)
    assert fitted >= 5


def test_clg_fit_per_configuration(nets):
    truth = nets["clgbn_B"]
    data = sample_network(truth, 20000, seed=2).dataset()
    fit = fit_mle(truth.dag, data).network
    for cfg, comp in truth.locals["X5"].components.items():
        est = fit.locals["X5"].components[cfg]
        assert est.intercept == pytest.approx(comp.intercept, abs=0.1)
        assert est.variance == pytest.approx(comp.variance, rel=0.1)


def test_error_decreases_with_sample_size(nets):
    """Median absolute coefficient error over 20 replicates shrinks with n."""
    truth = nets["gbn_B"]
    target = np.array([1.5, 2.6, 1.2])
    medians = []
    for n in (100, 1000, 10000):
        errs = []
        for rep in range(20):
            data = sample_network(truth, n, seed=1000 * n + rep).dataset()
            locs = fit_mle(truth.dag, data).network.locals
            est = np.array([locs["X4"].coefficients["X1"], locs["X4"].coefficients["X2"], locs["X3"].coefficients["X4"]])
            errs.append(np.abs(est - target).max())
        medians.append(np.median(errs))
    assert medians[0] > medians[1] > medians[2]
