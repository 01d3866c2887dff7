"""Shannon entropy (in nats) of discrete, Gaussian and CLG networks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .globals import GaussianGlobal, JointTable
from .junction import JunctionTree, build_junction_tree, calibrate, query_marginal
from .linalg import logdet_pd
from .network import ClgLocal, Network, configurations, discrete_part, ensure_valid

LOG_2PI = float(np.log(2 * np.pi))


@dataclass(frozen=True, eq=False)
class EntropyReport:
    total: float
    per_node: Mapping[str, float]
    parent_config_probs: Mapping[str, Mapping[tuple[str, ...], float]] = field(default_factory=dict)

    def __float__(self):
        return self.total


def xlogx(p: np.ndarray) -> np.ndarray:
    """Elementwise ``p * log(p)`` with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def gaussian_entropy(variance: float) -> float:
    return float(0.5 * (LOG_2PI + np.log(variance)) + 0.5)


def _config_probs(table: JointTable) -> dict[tuple[str, ...], float]:
    return {cfg: float(p) for cfg, p in zip(configurations(table.variables), table.probabilities.ravel())}


def parent_marginal(jt: JunctionTree, names: tuple[str, ...]) -> JointTable:
    if not names:
        return JointTable((), np.ones(()))
    return query_marginal(jt, names)


def entropy_discrete(net: Network, jt: JunctionTree | None = None) -> EntropyReport:
    """Sum over nodes of the expected conditional entropy of each CPT column.

    Parent configuration probabilities come from a calibrated junction tree.
    """
    ensure_valid(net)
    if net.kind != "discrete":
        net = discrete_part(net)
    if jt is None:
        jt = calibrate(build_junction_tree(net))
    per_node, probs = {}, {}
    for name in net.names:
        parents = net.parents(name)
        pj = parent_marginal(jt, parents)
        col_h = -xlogx(net.locals[name].table).sum(axis=0)
        per_node[name] = float(pj.probabilities.ravel() @ col_h)
        probs[name] = _config_probs(pj)
    return EntropyReport(float(sum(per_node.values())), per_node, probs)


def entropy_gbn(net: Network) -> EntropyReport:
    """Gaussian network entropy: one closed-form term per node."""
    ensure_valid(net, "gaussian")
    per_node = {n: gaussian_entropy(net.locals[n].variance) for n in net.names}
    return EntropyReport(float(sum(per_node.values())), per_node, {})


def entropy_mvn(glob: GaussianGlobal) -> float:
    n = len(glob.variables)
    return 0.5 * n * (1.0 + LOG_2PI) + 0.5 * logdet_pd(glob.covariance)


def entropy_clgbn(net: Network) -> EntropyReport:
    """Discrete part through the junction tree, continuous nodes weighted
    by the probability of their discrete parent configurations."""
    ensure_valid(net, "clg")
    disc = discrete_part(net)
    report = entropy_discrete(disc) if disc.names else EntropyReport(0.0, {}, {})
    per_node = dict(report.per_node)
    probs = dict(report.parent_config_probs)
    jt = calibrate(build_junction_tree(disc)) if disc.names else None
    for name in net.continuous_names:
        loc: ClgLocal = net.locals[name]
        if not loc.discrete_parents:
            per_node[name] = gaussian_entropy(loc.components[()].variance)
            continue
        pj = query_marginal(jt, loc.discrete_parents)
        weights = _config_probs(pj)
        per_node[name] = float(sum(w * gaussian_entropy(loc.components[cfg].variance) for cfg, w in weights.items()))
        probs[name] = weights
    ordered = {n: per_node[n] for n in net.names}
    return EntropyReport(float(sum(ordered.values())), ordered, probs)
