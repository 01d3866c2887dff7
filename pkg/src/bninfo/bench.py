"""Timing harness for the scaling behaviour of the KL routes.

Each size point generates fresh random sparse networks (at most three
parents per node), times one operation a number of times on a single
thread, and keeps the median.  Conclusions are drawn from log-log slopes
and orderings, never from absolute times.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .fitting import Dataset, fit_mle
from .generate import random_gbn, random_gbn_pair
from .globals import compose_gbn
from .kl import kl_gbn_bounds, kl_gbn_empirical, kl_gbn_sparse, kl_mvn
from .network import Dag
from .sampling import sample_network

MIN_REPETITIONS = 5


@dataclass(frozen=True)
class BenchRecord:
    operation: str
    sizes: dict
    times: tuple[float, ...]
    repetitions: int
    median: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "median", float(np.median(self.times)))

    def to_dict(self) -> dict:
        return asdict(self)


def _pair_kl_global(a, b):
    return kl_mvn(compose_gbn(a), compose_gbn(b))


def _node_setup(n_nodes: int, rng) -> tuple[tuple, dict]:
    a, b = random_gbn_pair(n_nodes, rng, max_parents=3)
    arcs = len(a.dag.arcs) + len(b.dag.arcs)
    return (a, b), {"N": n_nodes, "arcs": arcs}


NODE_OPERATIONS: dict[str, Callable] = {
    "kl-global": _pair_kl_global,
    "kl-sparse": kl_gbn_sparse,
    "kl-approx": kl_gbn_bounds,
}


def _empirical_setup(n_rows: int, rng, n_nodes: int = 10) -> tuple[tuple, dict]:
    truth = random_gbn(n_nodes, rng, max_parents=3)
    data = sample_network(truth, n_rows, seed=int(rng.integers(2**31))).dataset()
    other = random_gbn(n_nodes, rng, max_parents=3, names=list(truth.names))
    fa = fit_mle(truth.dag, data)
    fb = fit_mle(Dag(truth.dag.nodes, truth.dag.arcs & other.dag.arcs), data)
    return (fa, fb), {"N": n_nodes, "n": n_rows}


OPERATIONS = tuple(NODE_OPERATIONS) + ("kl-empirical",)


def time_call(fn: Callable, args: Sequence, repetitions: int) -> list[float]:
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return times


def run_bench(
    operation: str,
    sizes: Sequence[int],
    repetitions: int = MIN_REPETITIONS,
    seed: int = 0,
    warmup: int = 1,
) -> list[BenchRecord]:
    """Time ``operation`` at each size; returns one record per size.

    Sizes are node counts for the ``kl-global``/``kl-sparse``/``kl-approx``
    operations and row counts for ``kl-empirical`` (ten nodes).
    """
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"at least {MIN_REPETITIONS} repetitions are required")
    if operation not in OPERATIONS:
        raise ValueError(f"unknown operation {operation!r}; choose from {OPERATIONS}")
    records = []
    with threadpool_limits(limits=1):
        for size in sizes:
            records.append(_bench_one(operation, int(size), repetitions, seed, warmup))
    return records


def _bench_one(operation: str, size: int, repetitions: int, seed: int, warmup: int) -> BenchRecord:
    rng = np.random.default_rng([seed, size])
    if operation == "kl-empirical":
        args, dims = _empirical_setup(size, rng)
        fn = kl_gbn_empirical
    else:
        args, dims = _node_setup(size, rng)
        fn = NODE_OPERATIONS[operation]
    time_call(fn, args, warmup)
    return BenchRecord(operation, dims, tuple(time_call(fn, args, repetitions)), repetitions)


def loglog_slope(records: Sequence[BenchRecord], key: str) -> float:
    """Least-squares slope of log(median time) against log(size[key])."""
    x = np.log([r.sizes[key] for r in records])
    y = np.log([r.median for r in records])
    return float(np.polyfit(x, y, 1)[0])


def compare(first: Sequence[BenchRecord], second: Sequence[BenchRecord], key: str = "N") -> list[dict]:
    """Side-by-side medians of two operations on the same size grid."""
    return [
        {key: a.sizes[key], a.operation: a.median, b.operation: b.median, "ratio": b.median / a.median}
        for a, b in zip(first, second)
    ]
