"""Junction trees for discrete networks: construction, calibration, queries.

Potentials are dense numpy arrays whose axes follow the clique's node
tuple.  Products and marginals go through ``np.einsum`` with integer axis
labels (the node's position in the network), so no reshaping bookkeeping
is needed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .globals import JointTable
from .network import Network, discrete_part, ensure_valid

DEFAULT_MAX_WIDTH = 25


class TreeWidthError(RuntimeError):
    pass


def moralize(net: Network) -> dict[str, set[str]]:
    """Undirected moral graph as an adjacency map."""
    adj = {n: set() for n in net.names}
    for child in net.names:
        pa = net.dag.parents(child)
        for p in pa:
            adj[p].add(child)
            adj[child].add(p)
        for a, b in itertools.combinations(pa, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _fill_in(adj: Mapping[str, set[str]], v: str) -> int:
    nb = sorted(adj[v])
    return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])


def min_fill_cliques(adj: Mapping[str, set[str]]) -> tuple[list[str], list[frozenset[str]]]:
    """Eliminate nodes by minimum fill (ties: ascending name).

    Returns the elimination order and the maximal cliques of the resulting
    chordal graph, in the order they first appear.
    """
    work = {k: set(v) for k, v in adj.items()}
    order, cliques = [], []
    while work:
        v = min(work, key=lambda n: (_fill_in(work, n), n))
        nb = work.pop(v)
        for a, b in itertools.combinations(nb, 2):
            work[a].add(b)
            work[b].add(a)
        for a in nb:
            work[a].discard(v)
        order.append(v)
        clique = frozenset(nb | {v})
        if not any(clique <= c for c in cliques):
            cliques = [c for c in cliques if not c <= clique] + [clique]
    return order, cliques


@dataclass(frozen=True, eq=False)
class Separator:
    cliques: tuple[int, int]
    nodes: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class JunctionTree:
    """Clique tree with one potential per clique.

    Potentials are unnormalised factor products before calibration and
    clique marginals (of the joint restricted to any entered evidence)
    afterwards.
    """

    network: Network
    cliques: tuple[tuple[str, ...], ...]
    separators: tuple[Separator, ...]
    potentials: tuple[np.ndarray, ...]
    calibrated: bool = False
    evidence: Mapping[str, str] = field(default_factory=dict)
    _axis: Mapping[str, int] = field(default_factory=dict, repr=False)

    @property
    def width(self) -> int:
        return max((len(c) for c in self.cliques), default=0)

    def neighbours(self, i: int) -> list[int]:
        out = []
        for s in self.separators:
            a, b = s.cliques
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def separator_potential(self, sep: Separator) -> np.ndarray:
        a = sep.cliques[0]
        return _marginalize(self.potentials[a], self.cliques[a], sep.nodes, self._axis)

    def clique_marginal(self, i: int) -> JointTable:
        net = self.network
        return JointTable(tuple(net.variable(n) for n in self.cliques[i]), self.potentials[i])


def _ids(names: Iterable[str], axis: Mapping[str, int]) -> list[int]:
    return [axis[n] for n in names]


def _marginalize(pot: np.ndarray, scope: Sequence[str], keep: Sequence[str], axis) -> np.ndarray:
    return np.einsum(pot, _ids(scope, axis), _ids(keep, axis))


def _product(factors: Sequence[tuple[np.ndarray, Sequence[str]]], out: Sequence[str], axis) -> np.ndarray:
    operands = []
    for arr, scope in factors:
        operands += [arr, _ids(scope, axis)]
    return np.einsum(*operands, _ids(out, axis), optimize=len(factors) > 2)


def build_junction_tree(net: Network, max_width: int = DEFAULT_MAX_WIDTH) -> JunctionTree:
    """Moralise, triangulate by min-fill, and connect the maximal cliques.

    The cliques are joined by a maximum-weight spanning tree on separator
    size (Kruskal, ties broken by the lexicographic clique-index pair; empty
    separators join disconnected components).  Each CPT is multiplied into
    the first clique containing its family.
    """
    ensure_valid(net)
    if net.kind != "discrete":
        net = discrete_part(net)
    axis = {n: i for i, n in enumerate(net.names)}
    _, raw = min_fill_cliques(moralize(net))
    cliques = [tuple(sorted(c, key=axis.__getitem__)) for c in raw]
    cliques.sort(key=lambda c: [axis[n] for n in c])
    width = max((len(c) for c in cliques), default=0)
    if width > max_width:
        raise TreeWidthError(f"junction tree width {width} exceeds the cap of {max_width}")

    candidates = sorted(
        ((-len(set(a) & set(b)), i, j) for (i, a), (j, b) in itertools.combinations(enumerate(cliques), 2)),
    )
    parent = list(range(len(cliques)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seps = []
    for neg, i, j in candidates:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent[ri] = rj
        shared = tuple(n for n in cliques[i] if n in cliques[j])
        seps.append(Separator((i, j), shared))

    pots = [np.ones(net.cards(c)) for c in cliques]
    for name in net.names:
        family = {name, *net.parents(name)}
        k = next(i for i, c in enumerate(cliques) if family <= set(c))
        scope = (name,) + net.parents(name)
        pots[k] = _product([(pots[k], cliques[k]), (net.factor(name), scope)], cliques[k], axis)
    return JunctionTree(net, tuple(cliques), tuple(seps), tuple(pots), False, {}, axis)


def _schedule(jt: JunctionTree, root: int = 0) -> list[tuple[int, int]]:
    """Edges (child, parent) in post-order from ``root``; used for collect."""
    order, seen, stack = [], {root}, [(root, None)]
    while stack:
        node, par = stack.pop()
        order.append((node, par))
        for nb in jt.neighbours(node):
            if nb not in seen:
                seen.add(nb)
                stack.append((nb, node))
    return [(c, p) for c, p in reversed(order) if p is not None]


def _separator(jt: JunctionTree, a: int, b: int) -> tuple[str, ...]:
    for s in jt.separators:
        if s.cliques in ((a, b), (b, a)):
            return s.nodes
    raise KeyError((a, b))


def _apply_evidence(jt: JunctionTree, evidence: Mapping[str, str]) -> list[np.ndarray]:
    net = jt.network
    pots = [p.copy() for p in jt.potentials]
    for name, level in evidence.items():
        var = net.variable(name)
        mask = np.zeros(var.cardinality)
        mask[var.index(level)] = 1.0
        k = next(i for i, c in enumerate(jt.cliques) if name in c)
        pots[k] = _product([(pots[k], jt.cliques[k]), (mask, (name,))], jt.cliques[k], jt._axis)
    return pots


def _initial(jt: JunctionTree) -> JunctionTree:
    """Rebuild the uncalibrated potentials (factor products only)."""
    if not jt.calibrated:
        return jt
    return build_junction_tree(jt.network)


def calibrate(jt: JunctionTree, evidence: Mapping[str, str] | None = None, normalize: bool = True) -> JunctionTree:
    """Two-pass sum-product calibration (collect to clique 0, then distribute).

    With ``evidence`` the inconsistent entries are zeroed first.  When
    ``normalize`` is true each clique potential is rescaled into a
    conditional marginal given the evidence; otherwise it holds the joint
    with the evidence, whose total mass is the evidence probability.
    """
    base = _initial(jt)
    axis = base._axis
    pots = _apply_evidence(base, evidence or {})
    cliques = base.cliques
    schedule = _schedule(base)
    messages: dict[tuple[int, int], np.ndarray] = {}

    def send(src: int, dst: int):
        sep = _separator(base, src, dst)
        factors = [(pots[src], cliques[src])]
        for nb in base.neighbours(src):
            if nb != dst:
                factors.append((messages[(nb, src)], _separator(base, nb, src)))
        messages[(src, dst)] = _product(factors, sep, axis)

    for child, par in schedule:
        send(child, par)
    for child, par in reversed(schedule):
        send(par, child)

    beliefs = []
    for i, c in enumerate(cliques):
        factors = [(pots[i], c)] + [(messages[(nb, i)], _separator(base, nb, i)) for nb in base.neighbours(i)]
        beliefs.append(_product(factors, c, axis))
    if normalize:
        mass = [b.sum() for b in beliefs]
        if any(m <= 0 for m in mass):
            raise ZeroDivisionError(f"evidence {dict(evidence or {})} has zero probability")
        beliefs = [b / m for b, m in zip(beliefs, mass)]
    return replace(base, potentials=tuple(beliefs), calibrated=True, evidence=dict(evidence or {}))


def query_marginal(jt: JunctionTree, names: Sequence[str]) -> JointTable:
    """Exact marginal over ``names`` (axes in the order given).

    Within one clique the answer is a sum over the clique's potential.
    Otherwise a pivot set (the queried nodes outside the clique covering
    most of the query) is enumerated: each configuration is entered as
    evidence, the tree is recalibrated, and the unnormalised clique mass is
    written into the matching slice of the result.
    """
    if not jt.calibrated:
        jt = calibrate(jt)
    net = jt.network
    names = tuple(names)
    unknown = [n for n in names if n not in net.dag]
    if unknown:
        raise KeyError(f"unknown nodes {unknown}")
    if len(set(names)) != len(names):
        raise ValueError("duplicate query nodes")
    axis = jt._axis
    variables = tuple(net.variable(n) for n in names)
    want = set(names)
    best = max(range(len(jt.cliques)), key=lambda i: (len(want & set(jt.cliques[i])), -len(jt.cliques[i]), -i))
    host = jt.cliques[best]
    if want <= set(host):
        return JointTable(variables, _marginalize(jt.potentials[best], host, names, axis))

    pivot = tuple(n for n in names if n not in host)
    inside = tuple(n for n in names if n in host)
    out = np.zeros(net.cards(pivot + inside))
    pivot_vars = [net.variable(n) for n in pivot]
    base = build_junction_tree(net)
    for idx in itertools.product(*(range(v.cardinality) for v in pivot_vars)):
        ev = dict(jt.evidence)
        ev.update({v.name: v.levels[i] for v, i in zip(pivot_vars, idx)})
        cal = calibrate(base, ev, normalize=False)
        out[idx] = _marginalize(cal.potentials[best], host, inside, axis)
    if jt.evidence:
        out = out / out.sum()
    order = [(pivot + inside).index(n) for n in names]
    return JointTable(variables, np.transpose(out, order))
