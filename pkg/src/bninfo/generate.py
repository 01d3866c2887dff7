"""Random valid networks for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .network import ClgLocal, Cpt, Dag, GaussianLocal, Network, Variable, configurations

LEVEL_NAMES = "abcdefghijklmnopqrstuvwxyz"


def _names(n: int, prefix: str = "V", start: int = 0) -> list[str]:
    width = len(str(start + n))
    return [f"{prefix}{i:0{width}d}" for i in range(start, start + n)]


def random_parents(rng: np.random.Generator, n: int, max_parents: int, density: float = 0.5) -> list[list[int]]:
    """Parent index lists for a DAG whose topological order is 0..n-1."""
    out = []
    for i in range(n):
        k = min(i, int(rng.binomial(max_parents, density)))
        out.append(sorted(rng.choice(i, size=k, replace=False).tolist()) if k else [])
    return out


def _shuffled(rng, names):
    """Node list in random order, so node order differs from topological order."""
    perm = rng.permutation(len(names))
    return [names[i] for i in perm]


def random_gbn(
    n: int,
    rng: np.random.Generator,
    max_parents: int = 3,
    names: list[str] | None = None,
    parents: list[list[int]] | None = None,
    shuffle: bool = True,
) -> Network:
    """Gaussian network with at most ``max_parents`` parents per node."""
    names = names or _names(n)
    parents = parents if parents is not None else random_parents(rng, n, max_parents)
    locs = []
    for i, pa in enumerate(parents):
        coefs = {names[p]: float(rng.uniform(0.2, 1.0) * rng.choice([-1, 1])) for p in pa}
        locs.append(GaussianLocal(names[i], float(rng.normal(0, 2)), coefs, float(rng.uniform(0.3, 2.0))))
    variables = [Variable.continuous(v) for v in (_shuffled(rng, names) if shuffle else names)]
    return Network.from_locals(variables, locs, kind="gaussian")


def random_gbn_pair(n: int, rng: np.random.Generator, max_parents: int = 3) -> tuple[Network, Network]:
    """Two Gaussian networks over the same nodes with independent structures."""
    names = _names(n)
    a = random_gbn(n, rng, max_parents, names=list(names))
    order = list(rng.permutation(n))
    b = random_gbn(n, rng, max_parents, names=[names[i] for i in order])
    return a, Network(Dag(a.dag.nodes, b.dag.arcs), "gaussian", b.locals)


def _random_cpt(rng, child: Variable, parents: list[Variable], zero_prob: float = 0.0) -> Cpt:
    q = int(np.prod([p.cardinality for p in parents])) if parents else 1
    table = rng.dirichlet(np.ones(child.cardinality), size=q).T
    if zero_prob:
        mask = rng.random(table.shape) < zero_prob
        mask[rng.integers(child.cardinality, size=q), np.arange(q)] = False
        table = np.where(mask, 0.0, table)
        table /= table.sum(axis=0)
    return Cpt(child.name, tuple(p.name for p in parents), table)


def random_discrete(
    n: int,
    rng: np.random.Generator,
    max_parents: int = 3,
    max_levels: int = 3,
    zero_prob: float = 0.0,
    names: list[str] | None = None,
) -> Network:
    names = names or _names(n, "D")
    variables = [
        Variable.discrete(nm, LEVEL_NAMES[: int(rng.integers(2, max_levels + 1))]) for nm in names
    ]
    return random_discrete_over(variables, rng, max_parents, zero_prob)


def random_discrete_over(
    variables: list[Variable], rng: np.random.Generator, max_parents: int = 3, zero_prob: float = 0.0
) -> Network:
    """Random structure and CPTs over exactly ``variables`` (node order kept)."""
    m = len(variables)
    order = rng.permutation(m)
    parents = random_parents(rng, m, max_parents)
    locs = [
        _random_cpt(rng, variables[order[i]], [variables[order[p]] for p in pa], zero_prob)
        for i, pa in enumerate(parents)
    ]
    return Network.from_locals(variables, locs, kind="discrete")


def random_discrete_pair(n: int, rng: np.random.Generator, **kw) -> tuple[Network, Network]:
    a = random_discrete(n, rng, **kw)
    kw.pop("max_levels", None)
    return a, random_discrete_over(list(a.variables), rng, **kw)


def random_clg(
    m: int,
    g: int,
    rng: np.random.Generator,
    max_parents: int = 2,
    max_levels: int = 2,
    discrete: Network | None = None,
) -> Network:
    """CLG network with ``m`` discrete and ``g`` continuous nodes."""
    disc = discrete or random_discrete(m, rng, max_parents=max_parents, max_levels=max_levels)
    dvars = list(disc.variables)
    cnames = _names(g, "G")
    cparents = random_parents(rng, g, max_parents)
    locs = list(disc.locals.values())
    for i, pa in enumerate(cparents):
        k = int(rng.integers(0, min(m, max_parents) + 1))
        dpar = sorted(rng.choice(m, size=k, replace=False).tolist()) if k else []
        dp = [dvars[j] for j in dpar]
        cp = tuple(cnames[p] for p in pa)
        comps = {}
        for cfg in configurations(dp):
            coefs = {c: float(rng.uniform(-1.0, 1.0)) for c in cp}
            comps[cfg] = GaussianLocal(cnames[i], float(rng.normal(0, 2)), coefs, float(rng.uniform(0.2, 2.0)))
        locs.append(ClgLocal(cnames[i], tuple(v.name for v in dp), cp, comps))
    variables = dvars + [Variable.continuous(c) for c in cnames]
    return Network.from_locals(variables, locs, kind="clg")


def random_clg_pair(m: int, g: int, rng: np.random.Generator, **kw) -> tuple[Network, Network]:
    """Two CLG networks over the same variables with independent structures."""
    a = random_clg(m, g, rng, **kw)
    disc = random_discrete_over([a.variable(n) for n in a.discrete_names], rng, kw.get("max_parents", 2))
    return a, random_clg(m, g, rng, discrete=disc, **kw)
