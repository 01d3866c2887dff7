"""Kullback-Leibler divergence KL(b || b2) between networks of one family.

Conventions: natural logarithms, ``KL(P||Q) = E_P[log P - log Q]`` and
cross-entropy ``H(P, Q) = -E_P[log Q]``, so ``KL = H(P, Q) - H(P) >= 0``.

Routes
------
discrete        per-node cross-entropy terms from junction-tree marginals
exact-global    closed form on the composed means and covariances
spectral        same, with the second covariance inverted through eigh
exact-sparse    works on the ordered Cholesky factors, never forming a
                covariance matrix
bounds          replaces the trace term by the geometric mean of a lower
                and an upper bound (quadratic time)
empirical       per-node terms from fitted values and residual variances
clg-naive       discrete KL + expectation of Gaussian KLs over every
                discrete configuration
clg-sparse      same, over the configurations of the discrete parents of
                continuous nodes only
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .entropy import entropy_discrete, xlogx
from .fitting import FittedNetwork
from .globals import (
    GaussianGlobal,
    build_factor,
    compose_clgbn,
    compose_discrete,
)
from .junction import build_junction_tree, calibrate, query_marginal
from .linalg import SpectralFactor, cholesky
from .network import (
    Network,
    configurations,
    discrete_part,
    ensure_valid,
    extract_subnetworks,
    shared_total_order,
    total_order,
)


class IncompatibleNetworksError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KlReport:
    value: float
    method: str
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class TraceBounds:
    lower: float
    upper: float
    point_estimate: float
    fallback: bool = False


def _check_same_variables(b: Network, b2: Network):
    if set(b.names) != set(b2.names):
        raise IncompatibleNetworksError(
            f"networks have different nodes: {sorted(set(b.names) ^ set(b2.names))}"
        )
    for v in b.variables:
        w = b2.variable(v.name)
        if v.kind != w.kind or v.levels != w.levels:
            raise IncompatibleNetworksError(f"variable {v.name!r} differs between the networks")
    if b.kind != b2.kind:
        raise IncompatibleNetworksError(f"networks are of different kinds: {b.kind} vs {b2.kind}")


# --------------------------------------------------------------------------
# Discrete
# --------------------------------------------------------------------------


def kl_discrete(b: Network, b2: Network) -> KlReport:
    """Exact discrete KL from one junction tree over ``b``.

    For every node the joint of the node and its parents *in b2* is queried
    in ``b`` (each distinct query runs once) and matched against b2's CPT.
    An absolute-continuity violation yields ``inf`` and names the cell.
    """
    ensure_valid(b, "discrete")
    ensure_valid(b2, "discrete")
    _check_same_variables(b, b2)
    jt = calibrate(build_junction_tree(b))
    h = entropy_discrete(b, jt)
    cache: dict[tuple[str, ...], np.ndarray] = {}
    cross: dict[str, float] = {}
    offending = None
    for name in b.names:
        family = (name,) + b2.parents(name)
        if family not in cache:
            cache[family] = query_marginal(jt, family).probabilities
        joint = cache[family].reshape(b.variable(name).cardinality, -1)
        q = b2.locals[name].table
        bad = (joint > 0) & (q <= 0)
        if bad.any():
            k, j = map(int, np.argwhere(bad)[0])
            pcards = b.cards(b2.parents(name))
            cfg = np.unravel_index(j, pcards) if pcards else ()
            offending = offending or {
                "node": name,
                "level": b.variable(name).levels[k],
                "parents": {p: b.variable(p).levels[i] for p, i in zip(b2.parents(name), cfg)},
            }
            cross[name] = float("inf")
            continue
        with np.errstate(divide="ignore"):
            logq = np.where(joint > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        cross[name] = float(-(joint * logq).sum())
    total_cross = float(sum(cross.values()))
    value = total_cross - h.total
    diag = {
        "entropy": h.total,
        "cross_entropy": total_cross,
        "per_node_entropy": dict(h.per_node),
        "per_node_cross_entropy": cross,
        "queries": len(cache),
    }
    if offending:
        diag["offending_cell"] = offending
        value = float("inf")
    return KlReport(value, "discrete", diag)


def kl_tables(b: Network, b2: Network) -> KlReport:
    """Brute-force discrete KL summed over the two composed joint tables."""
    _check_same_variables(b, b2)
    p = compose_discrete(b)
    q = compose_discrete(b2).marginal(p.names).probabilities
    p = p.probabilities
    if np.any((p > 0) & (q <= 0)):
        return KlReport(float("inf"), "discrete-joint", {})
    with np.errstate(divide="ignore"):
        logq = np.where(p > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
    h = -float(xlogx(p).sum())
    cross = -float((p * logq).sum())
    return KlReport(cross - h, "discrete-joint", {"entropy": h, "cross_entropy": cross})


# --------------------------------------------------------------------------
# Gaussian: global routes
# --------------------------------------------------------------------------


def kl_mvn(a: GaussianGlobal, b: GaussianGlobal, route: str = "direct") -> KlReport:
    """Closed-form KL between two multivariate normals.

    ``route="direct"`` uses Cholesky solves; ``route="spectral"`` inverts
    the second covariance and takes its determinant from the
    eigendecomposition.
    """
    if set(a.variables) != set(b.variables):
        raise IncompatibleNetworksError("Gaussians are over different variables")
    b = b.reorder(a.variables)
    n = len(a.variables)
    diff = b.mean - a.mean
    if route == "direct":
        lb = cholesky(b.covariance)
        la = cholesky(a.covariance)
        logdet_a = 2.0 * float(np.sum(np.log(np.diag(la))))
        logdet_b = 2.0 * float(np.sum(np.log(np.diag(lb))))
        w = np.linalg.solve(lb, la)
        trace = float(np.sum(w * w))
        z = np.linalg.solve(lb, diff)
        quad = float(z @ z)
        method = "exact-global"
        extra = {}
    elif route == "spectral":
        sb = SpectralFactor.of(b.covariance)
        sa = SpectralFactor.of(a.covariance)
        inv_b = sb.inverse()
        logdet_a, logdet_b = sa.logdet(), sb.logdet()
        trace = float(np.sum(inv_b * a.covariance))
        quad = float(diff @ inv_b @ diff)
        method = "spectral"
        extra = {"eigenvalues": sa.eigenvalues.tolist(), "eigenvalues_b2": sb.eigenvalues.tolist()}
    else:
        raise ValueError(f"unknown route {route!r}")
    logratio = logdet_b - logdet_a
    value = 0.5 * (trace + quad - n + logratio)
    diag = {
        "trace": trace,
        "quadratic": quad,
        "log_det_ratio": logratio,
        "det": float(np.exp(logdet_a)),
        "det_b2": float(np.exp(logdet_b)),
        "n": n,
        **extra,
    }
    return KlReport(value, method, diag)


# --------------------------------------------------------------------------
# Gaussian: factor routes
# --------------------------------------------------------------------------


def _inverse_times(b2: Network, order2: Sequence[str], rows: np.ndarray) -> np.ndarray:
    """``C2^-1 @ rows`` using the local regressions of ``b2`` (rows in order2)."""
    pos = {n: i for i, n in enumerate(order2)}
    out = np.empty_like(rows)
    for i, name in enumerate(order2):
        loc = b2.locals[name]
        if loc.coefficients:
            idx = [pos[p] for p in loc.coefficients]
            beta = np.fromiter(loc.coefficients.values(), float, len(idx))
            out[i] = (rows[i] - beta @ rows[idx]) / np.sqrt(loc.variance)
        else:
            out[i] = rows[i] / np.sqrt(loc.variance)
    return out


def _mean_in_order(net: Network, order: Sequence[str]) -> np.ndarray:
    """Marginal means by forward substitution through the regressions."""
    pos = {n: i for i, n in enumerate(order)}
    mean = np.zeros(len(order))
    for i, name in enumerate(order):
        loc = net.locals[name]
        mean[i] = loc.intercept + sum(b * mean[pos[p]] for p, b in loc.coefficients.items())
    return mean


def _gaussian_pair(b: Network, b2: Network):
    ensure_valid(b, "gaussian")
    ensure_valid(b2, "gaussian")
    _check_same_variables(b, b2)


def kl_gbn_sparse(b: Network, b2: Network, order: Sequence[str] | None = None) -> KlReport:
    """Exact Gaussian KL from the ordered Cholesky factors.

    ``b``'s factor rows are permuted into ``b2``'s topological order and
    multiplied by the inverse of ``b2``'s factor, which is read directly off
    its regressions (one non-zero per node and per arc).  Determinants are
    products of diagonals.  ``order`` optionally fixes ``b``'s topological
    order; the value does not depend on it.
    """
    _gaussian_pair(b, b2)
    factor, mean = build_factor(b, order)
    order2 = tuple(total_order(b2.dag))
    pos = {n: i for i, n in enumerate(factor.order)}
    idx = [pos[n] for n in order2]
    c_star = factor.matrix[idx]
    mu_star = mean[idx]
    mean2 = _mean_in_order(b2, order2)
    # the mean difference rides along as one extra column
    both = _inverse_times(b2, order2, np.column_stack([c_star, mean2 - mu_star]))
    a, v = both[:, :-1], both[:, -1]
    frob = float(np.sum(a * a))
    quad = float(v @ v)
    logdet = factor.logdet()
    logdet2 = float(sum(np.log(b2.locals[n].variance) for n in order2))
    n = len(order2)
    value = 0.5 * (frob + quad - n + logdet2 - logdet)
    diag = {
        "trace": frob,
        "quadratic": quad,
        "log_det_ratio": logdet2 - logdet,
        "order": list(factor.order),
        "order_b2": list(order2),
        "scaled_mean_difference": dict(zip(order2, v.tolist())),
        "n": n,
    }
    return KlReport(value, "exact-sparse", diag)


def kl_gbn_bounds(b: Network, b2: Network) -> tuple[TraceBounds, KlReport]:
    """Approximate Gaussian KL with the trace term replaced by a bound estimate.

    lower = N + log det(b) - log det(b2), upper = ||C2^-1||_F^2 ||C||_F^2.
    The point estimate is their geometric mean; when the lower bound is not
    positive the upper bound is used instead and ``fallback`` is set.
    """
    _gaussian_pair(b, b2)
    order2 = tuple(total_order(b2.dag))
    n = len(order2)
    factor, mean = build_factor(b)
    mean2 = _mean_in_order(b2, order2)
    pos = {nm: i for i, nm in enumerate(factor.order)}
    mu_star = mean[[pos[nm] for nm in order2]]
    v = _inverse_times(b2, order2, (mean2 - mu_star)[:, None])[:, 0]
    quad = float(v @ v)

    inv_frob = sum(
        (1.0 + sum(c * c for c in b2.locals[nm].coefficients.values())) / b2.locals[nm].variance for nm in order2
    )
    c_frob = float(np.sum(factor.matrix**2))
    logdet = factor.logdet()
    logdet2 = float(sum(np.log(b2.locals[nm].variance) for nm in order2))
    lower = n + logdet - logdet2
    upper = inv_frob * c_frob
    fallback = lower <= 0
    point = upper if fallback else float(np.sqrt(lower * upper))
    bounds = TraceBounds(lower, upper, point, fallback)
    value = 0.5 * (point + quad - n + logdet2 - logdet)
    diag = {
        "lower": lower,
        "upper": upper,
        "point_estimate": point,
        "fallback": fallback,
        "quadratic": quad,
        "log_det_ratio": logdet2 - logdet,
        "inverse_frobenius": inv_frob,
        "factor_frobenius": c_frob,
        "n": n,
    }
    return bounds, KlReport(value, "bounds", diag)


# --------------------------------------------------------------------------
# Gaussian: empirical route
# --------------------------------------------------------------------------


def empirical_node_kl(var: float, var2: float, sq_norm: float, n: int) -> float:
    """One node's contribution: variance mismatch plus fitted-value distance."""
    return 0.5 * (np.log(var2 / var) + var / var2 - 1.0) + sq_norm / (2.0 * n * var2)


def kl_gbn_empirical(fb: FittedNetwork, fb2: FittedNetwork, use: str = "fitted") -> KlReport:
    """Data-driven KL between two Gaussian networks fitted to the same data.

    ``use="residuals"`` takes the distance between residuals instead of
    fitted values; both give the same number since the observed column is
    common to the two fits.
    """
    b, b2 = fb.network, fb2.network
    _gaussian_pair(b, b2)
    order = shared_total_order(b.dag, b2.dag)
    s, s2 = fb.summary, fb2.summary
    if s.n != s2.n:
        raise IncompatibleNetworksError(f"fits use different sample sizes: {s.n} vs {s2.n}")
    source = {"fitted": (s.fitted, s2.fitted), "residuals": (s.residuals, s2.residuals)}[use]
    diff = np.stack([source[0][name] for name in order]) - np.stack([source[1][name] for name in order])
    sq = np.einsum("ij,ij->i", diff, diff)
    var = np.array([s.variance[name] for name in order])
    var2 = np.array([s2.variance[name] for name in order])
    per = empirical_node_kl(var, var2, sq, s.n)
    terms = dict(zip(order, per.tolist()))
    norms = dict(zip(order, sq.tolist()))
    value = float(sum(terms.values()))
    diag = {"order": list(order), "per_node": terms, "squared_distance": norms, "n": s.n}
    return KlReport(value, "empirical", diag)


# --------------------------------------------------------------------------
# Conditional linear Gaussian
# --------------------------------------------------------------------------


def kl_clgbn(b: Network, b2: Network, method: str = "sparse") -> KlReport:
    """KL between CLG networks: discrete part plus expected Gaussian KL.

    ``method="naive"`` averages over every configuration of the discrete
    nodes using the composed mixtures; ``method="sparse"`` averages only
    over configurations of the discrete parents of continuous nodes in
    either network, weighting by junction-tree marginals of ``b``.
    """
    ensure_valid(b, "clg")
    ensure_valid(b2, "clg")
    _check_same_variables(b, b2)
    db, db2 = discrete_part(b), discrete_part(b2)
    if db.names:
        disc = kl_discrete(db, db2)
    else:
        disc = KlReport(0.0, "discrete", {})
    if not np.isfinite(disc.value):
        return KlReport(float("inf"), f"clg-{method}", {"discrete": disc.value, **disc.diagnostics})

    components = []
    if method == "naive":
        mix, mix2 = compose_clgbn(b), compose_clgbn(b2)
        variables = mix.discrete_joint.variables
        for cfg, w in zip(configurations(variables), mix.discrete_joint.probabilities.ravel()):
            if w <= 0:
                continue
            assign = dict(zip(mix.discrete_joint.names, cfg))
            k = kl_mvn(mix.component_for(assign), mix2.component_for(assign)).value
            components.append((cfg, float(w), k))
        key_names = mix.discrete_joint.names
    elif method == "sparse":
        keys = set(b.delta_union()) | set(b2.delta_union())
        key_names = tuple(n for n in b.names if n in keys)
        if key_names:
            jt = calibrate(build_junction_tree(db))
            weights = query_marginal(jt, key_names)
            wlist = zip(configurations(weights.variables), weights.probabilities.ravel())
        else:
            wlist = [((), 1.0)]
        sub, sub2 = extract_subnetworks(b, key_names), extract_subnetworks(b2, key_names)
        for cfg, w in wlist:
            if w <= 0:
                continue
            k = kl_gbn_sparse(sub.components[cfg], sub2.components[cfg]).value
            components.append((cfg, float(w), k))
    else:
        raise ValueError(f"unknown method {method!r}")

    cont = float(sum(w * k for _, w, k in components))
    diag = {
        "discrete": disc.value,
        "continuous": cont,
        "configuration_nodes": list(key_names),
        "components": [{"configuration": list(c), "weight": w, "kl": k} for c, w, k in components],
    }
    return KlReport(disc.value + cont, f"clg-{method}", diag)
