"""Composition of global distributions from local ones, and the reverse.

Discrete networks compose into a dense :class:`JointTable`, Gaussian
networks into a :class:`GaussianGlobal` (built through the ordered
Cholesky factor :class:`CholeskyFactor`), and CLG networks into a
:class:`MixtureGlobal`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .linalg import cholesky, invert_lower_triangular
from .network import (
    ClgLocal,
    Cpt,
    Dag,
    GaussianLocal,
    Network,
    Variable,
    configurations,
    discrete_part,
    ensure_valid,
    extract_subnetworks,
    total_order,
)

DEFAULT_MAX_CELLS = 2**24


class GlobalTooLargeError(MemoryError):
    pass


class DecompositionError(ValueError):
    pass


# --------------------------------------------------------------------------
# Discrete
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointTable:
    """Dense joint probability table, one axis per variable."""

    variables: tuple[Variable, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        p = np.asarray(self.probabilities, dtype=float)
        shape = tuple(v.cardinality for v in self.variables)
        if p.shape != shape:
            p = p.reshape(shape)
        object.__setattr__(self, "probabilities", p)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def prob(self, **assignment: str) -> float:
        """Probability of one full configuration given by level labels."""
        idx = tuple(v.index(assignment[v.name]) for v in self.variables)
        return float(self.probabilities[idx])

    def marginal(self, names: Sequence[str]) -> "JointTable":
        """Marginal table over ``names`` with axes in the requested order."""
        pos = [self.names.index(n) for n in names]
        drop = tuple(i for i in range(len(self.variables)) if i not in pos)
        summed = self.probabilities.sum(axis=drop)
        kept = sorted(pos)
        perm = [kept.index(i) for i in pos]
        return JointTable(tuple(self.variables[i] for i in pos), np.transpose(summed, perm))

    def entropy(self) -> float:
        p = self.probabilities[self.probabilities > 0]
        return float(-np.sum(p * np.log(p)))


def _factor_product(net: Network, names: Sequence[str]) -> np.ndarray:
    pos = {n: i for i, n in enumerate(names)}
    operands = []
    for n in names:
        cpt = net.locals[n]
        operands += [net.factor(n), [pos[n]] + [pos[p] for p in cpt.parents]]
    return np.einsum(*operands, list(range(len(names))), optimize=True)


def compose_discrete(net: Network, max_cells: int = DEFAULT_MAX_CELLS) -> JointTable:
    """Multiply all CPTs into the dense joint table (node order axes)."""
    ensure_valid(net)
    names = net.discrete_names
    cells = int(np.prod(net.cards(names), dtype=float))
    if cells > max_cells:
        raise GlobalTooLargeError(f"global table too large: {cells} cells exceeds the cap of {max_cells}")
    sub = net if net.kind == "discrete" else discrete_part(net)
    table = _factor_product(sub, names) if names else np.ones(())
    return JointTable(tuple(net.variable(n) for n in names), table)


def cpt_from_marginal(child: Variable, parents: Sequence[Variable], marg: np.ndarray) -> Cpt:
    """Normalise a ``(child, *parents)`` marginal into a CPT."""
    r = child.cardinality
    flat = marg.reshape(r, -1)
    totals = flat.sum(axis=0)
    bad = np.flatnonzero(totals <= 0)
    if bad.size:
        cfg = np.unravel_index(int(bad[0]), [p.cardinality for p in parents])
        labels = {p.name: p.levels[i] for p, i in zip(parents, cfg)}
        raise DecompositionError(f"node {child.name!r}: parent configuration {labels} has zero probability")
    return Cpt(child.name, tuple(p.name for p in parents), flat / totals)


def decompose_discrete(joint: JointTable, dag: Dag) -> Network:
    """Read one CPT per node of ``dag`` off the joint table."""
    if set(joint.names) != set(dag.names):
        raise ValueError("joint table and DAG are over different variables")
    for v in dag.nodes:
        if joint.variables[joint.names.index(v.name)] != v:
            raise ValueError(f"variable {v.name!r} differs between joint and DAG")
    locs = []
    for v in dag.nodes:
        parents = dag.parents(v.name)
        marg = joint.marginal((v.name,) + parents).probabilities
        locs.append(cpt_from_marginal(v, [dag.variable(p) for p in parents], marg))
    return Network(dag, "discrete", {c.child: c for c in locs})


# --------------------------------------------------------------------------
# Gaussian
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular factor in ``order`` coordinates.

    ``permutation[k]`` is the row of ``matrix`` holding the k-th node in
    the original node order, so ``M[np.ix_(p, p)]`` moves any matrix in
    factor coordinates back to the original order.
    """

    order: tuple[str, ...]
    matrix: np.ndarray
    permutation: np.ndarray

    def covariance(self) -> np.ndarray:
        """Covariance in the original node order."""
        sigma = self.matrix @ self.matrix.T
        p = self.permutation
        return sigma[np.ix_(p, p)]

    def logdet(self) -> float:
        """log det of the covariance: twice the log of the diagonal product."""
        return 2.0 * float(np.sum(np.log(np.diag(self.matrix))))


@dataclass(frozen=True, eq=False)
class GaussianGlobal:
    variables: tuple[str, ...]
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))

    def reorder(self, names: Sequence[str]) -> "GaussianGlobal":
        idx = [self.variables.index(n) for n in names]
        return GaussianGlobal(tuple(names), self.mean[idx], self.covariance[np.ix_(idx, idx)])

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.covariance[self.variables.index(a), self.variables.index(b)])


def _order_for(net: Network, order: Sequence[str] | None) -> tuple[str, ...]:
    if order is None:
        return tuple(total_order(net.dag))
    order = tuple(order)
    if sorted(order) != sorted(net.names):
        raise ValueError("order must be a permutation of the network's nodes")
    pos = {n: i for i, n in enumerate(order)}
    for u, v in net.dag.arcs:
        if pos[u] > pos[v]:
            raise ValueError(f"order places {v!r} before its parent {u!r}")
    return order


def build_factor(net: Network, order: Sequence[str] | None = None) -> tuple[CholeskyFactor, np.ndarray]:
    """Ordered Cholesky factor of a Gaussian network and its mean vector.

    Rows are filled following a topological order: the diagonal holds the
    node's standard deviation and the off-diagonal part is the coefficient
    weighted sum of the parents' rows.  Returns the factor and the mean in
    factor order.
    """
    order = _order_for(net, order)
    pos = {n: i for i, n in enumerate(order)}
    size = len(order)
    c = np.zeros((size, size))
    mean = np.zeros(size)
    for i, name in enumerate(order):
        loc: GaussianLocal = net.locals[name]
        if loc.coefficients:
            idx = [pos[p] for p in loc.coefficients]
            beta = np.fromiter(loc.coefficients.values(), float, len(idx))
            c[i, :i] = beta @ c[idx, :i]
            mean[i] = loc.intercept + beta @ mean[idx]
        else:
            mean[i] = loc.intercept
        c[i, i] = np.sqrt(loc.variance)
    perm = np.array([pos[n] for n in net.names])
    return CholeskyFactor(order, c, perm), mean


def build_inverse_factor(net: Network, order: Sequence[str] | None = None) -> CholeskyFactor:
    """Inverse of the ordered factor, read directly off the local regressions.

    The standardised noise of node ``i`` is ``(x_i - mu_i - beta_i x_pa) /
    sigma_i``, so row ``i`` of the inverse is ``(e_i - beta_i) / sigma_i``.
    Only as many entries as nodes plus arcs are non-zero.
    """
    order = _order_for(net, order)
    pos = {n: i for i, n in enumerate(order)}
    size = len(order)
    inv = np.zeros((size, size))
    for i, name in enumerate(order):
        loc: GaussianLocal = net.locals[name]
        sd = np.sqrt(loc.variance)
        inv[i, i] = 1.0 / sd
        for p, b in loc.coefficients.items():
            inv[i, pos[p]] = -b / sd
    perm = np.array([pos[n] for n in net.names])
    return CholeskyFactor(order, inv, perm)


def compose_gbn(net: Network, order: Sequence[str] | None = None) -> GaussianGlobal:
    ensure_valid(net, "gaussian")
    factor, mean = build_factor(net, order)
    return GaussianGlobal(net.names, mean[factor.permutation], factor.covariance())


def regression_matrix(glob: GaussianGlobal, order: Sequence[str]) -> np.ndarray:
    """Coefficient matrix ``I - diag(C) C^-1`` of the factor in ``order``.

    Entry ``[i, j]`` (factor coordinates) is the coefficient of the j-th
    node when regressing the i-th node on all its predecessors.
    """
    g = glob.reorder(order)
    c = cholesky(g.covariance)
    return np.eye(len(order)) - np.diag(np.diag(c)) @ invert_lower_triangular(c)


def _regress(mean: np.ndarray, cov: np.ndarray, child: int, parents: Sequence[int]):
    parents = list(parents)
    if parents:
        s_pp = cov[np.ix_(parents, parents)]
        s_pc = cov[parents, child]
        beta = np.linalg.solve(s_pp, s_pc)
        var = cov[child, child] - s_pc @ beta
        intercept = mean[child] - beta @ mean[parents]
    else:
        beta = np.zeros(0)
        var = cov[child, child]
        intercept = mean[child]
    return float(intercept), beta, float(var)


def decompose_gbn(glob: GaussianGlobal, dag: Dag) -> Network:
    """Linear-Gaussian locals of ``dag`` from a mean and covariance.

    Each node is regressed on its listed parents using the population
    moments.  When ``dag`` is an I-map this is exactly the reading of the
    Cholesky regression matrix; otherwise it is the closest network with
    this structure (the moment-matching projection).
    """
    if set(glob.variables) != set(dag.names):
        raise ValueError("global distribution and DAG are over different variables")
    cholesky(glob.covariance)
    g = glob.reorder(dag.names)
    total_order(dag)
    locs = {}
    for i, name in enumerate(dag.names):
        parents = dag.parents(name)
        intercept, beta, var = _regress(g.mean, g.covariance, i, [dag.position(p) for p in parents])
        locs[name] = GaussianLocal(name, intercept, dict(zip(parents, beta)), var)
    return Network(dag, "gaussian", locs)


# --------------------------------------------------------------------------
# Conditional linear Gaussian
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixtureGlobal:
    """Gaussian mixture: discrete joint plus one Gaussian per identifying configuration."""

    discrete_joint: JointTable
    identifying_set: tuple[str, ...]
    components: Mapping[tuple[str, ...], GaussianGlobal]

    def component_for(self, assignment: Mapping[str, str]) -> GaussianGlobal:
        return self.components[tuple(assignment[n] for n in self.identifying_set)]

    def weights(self) -> dict[tuple[str, ...], float]:
        """Probability mass carried by each component."""
        if not self.identifying_set:
            return {(): 1.0}
        marg = self.discrete_joint.marginal(self.identifying_set)
        return {cfg: float(p) for cfg, p in zip(configurations(marg.variables), marg.probabilities.ravel())}


def compose_clgbn(net: Network, max_cells: int = DEFAULT_MAX_CELLS) -> MixtureGlobal:
    ensure_valid(net, "clg")
    joint = compose_discrete(net, max_cells=max_cells)
    subs = extract_subnetworks(net)
    comps = {cfg: compose_gbn(g) for cfg, g in subs.components.items()}
    return MixtureGlobal(joint, subs.identifying_set, comps)


def decompose_clgbn(mix: MixtureGlobal, dag: Dag) -> Network:
    """Locals of a CLG ``dag`` from a mixture global.

    When a node's discrete parents do not pin down a single component the
    matching components are merged by moment matching before regressing.
    """
    joint = mix.discrete_joint
    disc_names = joint.names
    ident = mix.identifying_set
    locs: dict[str, object] = {}
    for v in dag.nodes:
        name = v.name
        parents = dag.parents(name)
        if v.is_discrete:
            pv = [dag.variable(p) for p in parents]
            if any(not p.is_discrete for p in pv):
                raise ValueError(f"discrete node {name!r} has a continuous parent")
            marg = joint.marginal((name,) + parents).probabilities
            locs[name] = cpt_from_marginal(v, pv, marg)
            continue
        dpar = tuple(p for p in parents if dag.variable(p).is_discrete)
        cpar = tuple(p for p in parents if not dag.variable(p).is_discrete)
        union = tuple(n for n in disc_names if n in set(dpar) | set(ident))
        weights = joint.marginal(union).probabilities if union else np.ones(())
        uvars = [joint.variables[disc_names.index(n)] for n in union]
        cols = (name,) + cpar
        comps = {}
        for delta in configurations([dag.variable(p) for p in dpar]):
            fix = dict(zip(dpar, delta))
            total, m1, m2 = 0.0, 0.0, 0.0
            for ucfg, w in zip(configurations(uvars), weights.ravel()):
                assign = dict(zip(union, ucfg))
                if any(assign[k] != fix[k] for k in dpar) or w <= 0:
                    continue
                g = mix.component_for(assign).reorder(cols)
                total += w
                m1 = m1 + w * g.mean
                m2 = m2 + w * (g.covariance + np.outer(g.mean, g.mean))
            if total <= 0:
                raise DecompositionError(f"node {name!r}: parent configuration {fix} has zero probability")
            mean = m1 / total
            cov = m2 / total - np.outer(mean, mean)
            intercept, beta, var = _regress(mean, cov, 0, range(1, len(cols)))
            comps[delta] = GaussianLocal(name, intercept, dict(zip(cpar, beta)), var)
        locs[name] = ClgLocal(name, dpar, cpar, comps)
    return Network(dag, "clg", locs)
