"""Ancestral sampling and Monte Carlo estimates of entropy and KL.

Reproducibility: particles are produced in fixed-size blocks, block ``k``
drawing from a Philox counter-based generator keyed by
``SeedSequence([seed, k])``.  The rows therefore depend only on
``(network, m, seed)`` and never on how many workers share the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .fitting import Dataset
from .network import ClgLocal, Cpt, Network, Variable, configurations, ensure_valid, total_order

BLOCK_SIZE = 8192
GENERATOR_ID = f"numpy-Philox4x32-10/SeedSequence([seed, block])/block={BLOCK_SIZE}"
LOG_2PI = float(np.log(2 * np.pi))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    columns: tuple[Variable, ...]
    data: Mapping[str, np.ndarray]
    seed: int
    generator_id: str = GENERATOR_ID

    @property
    def m(self) -> int:
        return len(next(iter(self.data.values())))

    def dataset(self) -> Dataset:
        return Dataset(self.columns, dict(self.data))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    m: int
    infinite: bool = False

    def __float__(self):
        return self.value


def _codes(net: Network, parents, data, size) -> np.ndarray:
    if not parents:
        return np.zeros(size, dtype=np.int64)
    return np.ravel_multi_index([data[p] for p in parents], net.cards(parents))


def _clg_arrays(loc: ClgLocal, net: Network):
    """Intercepts, coefficient matrix and variances indexed by parent code."""
    cfgs = list(configurations([net.variable(p) for p in loc.discrete_parents]))
    comps = [loc.components[c] for c in cfgs]
    intercept = np.array([c.intercept for c in comps])
    coefs = np.array([[c.coefficients[p] for p in loc.continuous_parents] for c in comps]).reshape(len(comps), -1)
    variance = np.array([c.variance for c in comps])
    return intercept, coefs, variance


def _conditional_mean(net: Network, name: str, data, size):
    """Per-row regression mean and variance of a continuous node."""
    loc = net.locals[name]
    if isinstance(loc, ClgLocal):
        intercept, coefs, variance = _clg_arrays(loc, net)
        code = _codes(net, loc.discrete_parents, data, size)
        mean = intercept[code].copy()
        for k, p in enumerate(loc.continuous_parents):
            mean += coefs[code, k] * data[p]
        return mean, variance[code]
    mean = np.full(size, loc.intercept)
    for p, b in loc.coefficients.items():
        mean += b * data[p]
    return mean, np.full(size, loc.variance)


def _sample_block(net: Network, order, size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    data: dict[str, np.ndarray] = {}
    for name in order:
        var = net.variable(name)
        loc = net.locals[name]
        if isinstance(loc, Cpt):
            probs = loc.table[:, _codes(net, loc.parents, data, size)]
            cum = np.cumsum(probs, axis=0)
            u = rng.random(size)
            data[name] = np.minimum((u[None, :] >= cum).sum(axis=0), var.cardinality - 1).astype(np.int64)
        else:
            mean, variance = _conditional_mean(net, name, data, size)
            data[name] = mean + np.sqrt(variance) * rng.standard_normal(size)
    return data


def sample_network(net: Network, m: int, seed: int = 0, workers: int = 1) -> SampleBatch:
    """Draw ``m`` particles by ancestral sampling.

    Discrete nodes use the inverse CDF of the CPT column picked by the
    sampled parents; continuous nodes a normal draw around their regression
    mean (CLG components selected by the discrete parents).
    """
    ensure_valid(net)
    if m < 1:
        raise ValueError("m must be at least 1")
    order = total_order(net.dag)
    sizes = [min(BLOCK_SIZE, m - s) for s in range(0, m, BLOCK_SIZE)]

    def run(k: int):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), k])))
        return _sample_block(net, order, sizes[k], rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(k) for k in range(len(sizes))]
    data = {n: np.concatenate([b[n] for b in blocks]) for n in net.names}
    return SampleBatch(net.variables, data, int(seed))


def log_density(net: Network, data: Mapping[str, np.ndarray]) -> np.ndarray:
    """Per-row log probability (mass times density) via the local factorisation."""
    size = len(next(iter(data.values())))
    out = np.zeros(size)
    for name in net.names:
        loc = net.locals[name]
        x = data[name]
        if isinstance(loc, Cpt):
            p = loc.table[x, _codes(net, loc.parents, data, size)]
            with np.errstate(divide="ignore"):
                out += np.log(p)
        else:
            mean, variance = _conditional_mean(net, name, data, size)
            r = x - mean
            out += -0.5 * (LOG_2PI + np.log(variance) + r * r / variance)
    return out


def _summarize(terms: np.ndarray) -> McEstimate:
    m = len(terms)
    if not np.all(np.isfinite(terms)):
        return McEstimate(float("inf"), float("inf"), m, True)
    se = float(np.std(terms, ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return McEstimate(float(np.mean(terms)), se, m)


def mc_entropy(net: Network, m: int, seed: int = 0, workers: int = 1) -> McEstimate:
    batch = sample_network(net, m, seed, workers)
    return _summarize(-log_density(net, batch.data))


def mc_kl(b: Network, b2: Network, m: int, seed: int = 0, workers: int = 1) -> McEstimate:
    """Average log-ratio over particles drawn from ``b``.

    A particle with zero mass under ``b2`` makes the estimate infinite and
    sets ``infinite``.
    """
    if set(b.names) != set(b2.names) or b.kind != b2.kind:
        raise ValueError("networks must share variables and family")
    batch = sample_network(b, m, seed, workers)
    return _summarize(log_density(b, batch.data) - log_density(b2, batch.data))
