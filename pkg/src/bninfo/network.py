"""Network data model: variables, DAGs, local distributions and orderings.

Three families are supported:

* ``discrete``: every node is categorical with a conditional probability
  table (CPT).
* ``gaussian``: every node is a linear regression on its parents with
  normal noise.
* ``clg``: conditional linear Gaussian; discrete nodes have discrete
  parents only and CPTs, continuous nodes carry one linear regression per
  configuration of their discrete parents.

CPT layout: ``table`` has one row per child level and one column per parent
configuration.  Columns are enumerated mixed-radix with the first listed
parent varying slowest, i.e. the C-order ravel of the parent level indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"
KINDS = ("discrete", "gaussian", "clg")

PROBABILITY_TOL = 1e-9


class CycleError(ValueError):
    """Raised when a graph that must be acyclic contains a cycle."""

    def __init__(self, message: str, cycle: Sequence[str] = ()):
        super().__init__(message)
        self.cycle = list(cycle)


class IncompatibleOrderError(CycleError):
    """Two DAGs admit no shared total node ordering."""


class NetworkError(ValueError):
    """A network failed validation; ``report`` lists every violation."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(str(report))
        self.report = report


# --------------------------------------------------------------------------
# Variables and graphs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = CONTINUOUS
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(x) for x in self.levels))

    @classmethod
    def discrete(cls, name: str, levels: Iterable[str]) -> "Variable":
        return cls(name, DISCRETE, tuple(levels))

    @classmethod
    def continuous(cls, name: str) -> "Variable":
        return cls(name, CONTINUOUS)

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    @property
    def cardinality(self) -> int:
        return len(self.levels)

    def index(self, level: str) -> int:
        return self.levels.index(level)


@dataclass(frozen=True)
class Dag:
    """Nodes plus a set of ``(parent, child)`` arcs.

    The node tuple fixes the "original" node order used for global
    distributions; ``parents`` lists parents in that order.
    """

    nodes: tuple[Variable, ...]
    arcs: frozenset[tuple[str, str]] = frozenset()
    _parents: dict = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)
    _levels: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        arcs = frozenset((str(u), str(v)) for u, v in self.arcs)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "arcs", arcs)
        index = {v.name: i for i, v in enumerate(nodes)}
        parents: dict[str, list[str]] = {v.name: [] for v in nodes}
        for u, v in arcs:
            if v in parents:
                parents[v].append(u)
        for v in parents:
            parents[v].sort(key=lambda p: (index.get(p, len(index)), p))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_parents", {k: tuple(v) for k, v in parents.items()})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.nodes)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def variable(self, name: str) -> Variable:
        try:
            return self.nodes[self._index[name]]
        except KeyError:
            raise KeyError(f"unknown node {name!r}") from None

    def position(self, name: str) -> int:
        return self._index[name]

    def parents(self, name: str) -> tuple[str, ...]:
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(sorted((v for u, v in self.arcs if u == name), key=self.position))

    def subgraph(self, names: Iterable[str]) -> "Dag":
        """Spanning subgraph over ``names`` (node order preserved)."""
        keep = set(names)
        nodes = tuple(v for v in self.nodes if v.name in keep)
        arcs = frozenset((u, v) for u, v in self.arcs if u in keep and v in keep)
        return Dag(nodes, arcs)

    def union(self, other: "Dag") -> "Dag":
        return Dag(self.nodes, self.arcs | other.arcs)

    def find_cycle(self) -> list[str] | None:
        """Return the nodes of one directed cycle, or None if acyclic."""
        succ: dict[str, list[str]] = {n: [] for n in self.names}
        for u, v in sorted(self.arcs):
            if u in succ and v in succ:
                succ[u].append(v)
        state = dict.fromkeys(succ, 0)
        for root in sorted(succ):
            if state[root]:
                continue
            stack = [(root, iter(succ[root]))]
            path = [root]
            state[root] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    path.pop()
                    state[node] = 2
                elif state[nxt] == 1:
                    return path[path.index(nxt):]
                elif state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(succ[nxt])))
                    path.append(nxt)
        return None


def partial_order(dag: Dag) -> list[list[str]]:
    """Group nodes by depth (longest path from a root), names sorted per group.

    Raises
    ------
    CycleError
        If the graph is not acyclic.
    """
    if dag._levels is not None:
        return [list(g) for g in dag._levels]
    cycle = dag.find_cycle()
    if cycle is not None:
        raise CycleError(f"cycle detected through node {cycle[0]!r}: {' -> '.join(cycle)}", cycle)
    remaining = {n: set(p for p in dag.parents(n) if p in dag) for n in dag.names}
    level = 0
    groups = []
    while remaining:
        ready = sorted(n for n, ps in remaining.items() if not ps)
        groups.append(ready)
        for n in ready:
            del remaining[n]
        for ps in remaining.values():
            ps.difference_update(ready)
        level += 1
    object.__setattr__(dag, "_levels", [tuple(g) for g in groups])
    return groups


def total_order(dag: Dag) -> list[str]:
    """Deterministic topological order: by depth, then ascending name."""
    return [n for group in partial_order(dag) for n in group]


def shared_total_order(dag_a: Dag, dag_b: Dag) -> list[str]:
    """A total order compatible with both DAGs (topological order of the arc union)."""
    if set(dag_a.names) != set(dag_b.names):
        raise ValueError("DAGs are defined over different node sets")
    try:
        return total_order(dag_a.union(dag_b))
    except CycleError as exc:
        raise IncompatibleOrderError(f"incompatible orderings: {exc}", exc.cycle) from None


# --------------------------------------------------------------------------
# Local distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional probability table, ``r_child x q`` (see module docstring)."""

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim == 1:
            table = table[:, None]
        table.setflags(write=False)
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", table)

    def column(self, config: Sequence[int], parent_cards: Sequence[int]) -> np.ndarray:
        if not self.parents:
            return self.table[:, 0]
        return self.table[:, np.ravel_multi_index(tuple(config), tuple(parent_cards))]

    def __eq__(self, other):
        return (
            isinstance(other, Cpt)
            and self.child == other.child
            and self.parents == other.parents
            and self.table.shape == other.table.shape
            and bool(np.all(self.table == other.table))
        )


@dataclass(frozen=True)
class GaussianLocal:
    """``child = intercept + sum(coefficients[p] * p) + N(0, variance)``."""

    child: str
    intercept: float
    coefficients: Mapping[str, float]
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "coefficients", {str(k): float(v) for k, v in self.coefficients.items()})

    @property
    def parents(self) -> tuple[str, ...]:
        return tuple(self.coefficients)


@dataclass(frozen=True)
class ClgLocal:
    """One :class:`GaussianLocal` per configuration of the discrete parents.

    ``components`` is keyed by tuples of level labels, ordered like
    ``discrete_parents``; a node without discrete parents has the single
    key ``()``.
    """

    child: str
    discrete_parents: tuple[str, ...]
    continuous_parents: tuple[str, ...]
    components: Mapping[tuple[str, ...], GaussianLocal]

    def __post_init__(self):
        object.__setattr__(self, "discrete_parents", tuple(self.discrete_parents))
        object.__setattr__(self, "continuous_parents", tuple(self.continuous_parents))
        object.__setattr__(
            self, "components", {tuple(str(x) for x in k): v for k, v in self.components.items()}
        )

    @property
    def parents(self) -> tuple[str, ...]:
        return self.discrete_parents + self.continuous_parents

    def component(self, config: Mapping[str, str]) -> GaussianLocal:
        """Regression selected by a (super)set of discrete assignments."""
        return self.components[tuple(config[p] for p in self.discrete_parents)]


Local = Union[Cpt, GaussianLocal, ClgLocal]


def configurations(variables: Sequence[Variable]) -> Iterator[tuple[str, ...]]:
    """All level-label tuples over ``variables``, first variable slowest."""
    return itertools.product(*(v.levels for v in variables))


# --------------------------------------------------------------------------
# Network
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Network:
    dag: Dag
    kind: str
    locals: Mapping[str, Local]
    _report: object = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def from_locals(
        cls, variables: Sequence[Variable], locals: Iterable[Local], kind: str | None = None
    ) -> "Network":
        """Build a network whose arcs are read off the local distributions.

        ``kind`` is inferred when omitted.  In CLG networks continuous nodes
        given as :class:`GaussianLocal` are wrapped into a one-component
        :class:`ClgLocal`.
        """
        variables = tuple(variables)
        locals = list(locals)
        if kind is None:
            kinds = {v.kind for v in variables}
            kind = "discrete" if kinds == {DISCRETE} else "gaussian" if kinds <= {CONTINUOUS} else "clg"
        if kind == "clg":
            locals = [
                ClgLocal(loc.child, (), loc.parents, {(): loc}) if isinstance(loc, GaussianLocal) else loc
                for loc in locals
            ]
        arcs = frozenset((p, loc.child) for loc in locals for p in loc.parents)
        return cls(Dag(variables, arcs), kind, {loc.child: loc for loc in locals})

    @property
    def names(self) -> tuple[str, ...]:
        return self.dag.names

    @property
    def variables(self) -> tuple[Variable, ...]:
        return self.dag.nodes

    def variable(self, name: str) -> Variable:
        return self.dag.variable(name)

    def parents(self, name: str) -> tuple[str, ...]:
        return self.locals[name].parents

    @property
    def discrete_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.dag.nodes if v.is_discrete)

    @property
    def continuous_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.dag.nodes if not v.is_discrete)

    def cards(self, names: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.variable(n).cardinality for n in names)

    def factor(self, name: str) -> np.ndarray:
        """CPT of ``name`` as an array with axes ``(child, *parents)``."""
        cpt = self.locals[name]
        return cpt.table.reshape(self.cards((name,) + cpt.parents))

    def delta_union(self) -> tuple[str, ...]:
        """Discrete parents of continuous nodes, in node order."""
        found = set()
        for n in self.continuous_names:
            loc = self.locals[n]
            if isinstance(loc, ClgLocal):
                found.update(loc.discrete_parents)
        return tuple(n for n in self.names if n in found)

    def __repr__(self):
        return f"Network(kind={self.kind!r}, nodes={list(self.names)}, arcs={sorted(self.dag.arcs)})"


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


class Violation(NamedTuple):
    rule: str
    node: str | None
    message: str

    def __str__(self):
        where = f" [{self.node}]" if self.node else ""
        return f"{self.rule}{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def _check_gaussian(loc: GaussianLocal, expected: Sequence[str], node: str, out: list):
    if not np.isfinite(loc.variance) or loc.variance <= 0:
        out.append(Violation("variance", node, f"variance must be > 0, got {loc.variance}"))
    if set(loc.coefficients) != set(expected):
        out.append(
            Violation(
                "coefficients", node,
                f"coefficient keys {sorted(loc.coefficients)} != continuous parents {sorted(expected)}",
            )
        )
    if not all(np.isfinite(list(loc.coefficients.values()) + [loc.intercept])):
        out.append(Violation("coefficients", node, "non-finite regression parameter"))


def validate_network(net: Network) -> ValidationReport:
    """Check every structural and parametric invariant; never raises."""
    out: list[Violation] = []
    dag = net.dag
    names = [v.name for v in dag.nodes]
    seen = set()
    for v in dag.nodes:
        if v.name in seen:
            out.append(Violation("duplicate-name", v.name, "node names must be unique"))
        seen.add(v.name)
        if v.kind not in (DISCRETE, CONTINUOUS):
            out.append(Violation("kind", v.name, f"unknown variable kind {v.kind!r}"))
        if v.is_discrete:
            if len(v.levels) < 2:
                out.append(Violation("levels", v.name, "discrete variables need at least 2 levels"))
            if len(set(v.levels)) != len(v.levels):
                out.append(Violation("levels", v.name, "level labels must be unique"))
        elif v.levels:
            out.append(Violation("levels", v.name, "continuous variables have no levels"))

    if net.kind not in KINDS:
        out.append(Violation("kind", None, f"unknown network kind {net.kind!r}"))
    for u, v in sorted(dag.arcs):
        if u == v:
            out.append(Violation("self-loop", u, "arc from a node to itself"))
        for end in (u, v):
            if end not in seen:
                out.append(Violation("arc-reference", end, f"arc ({u}, {v}) references an unknown node"))
    if not any(x.rule in ("self-loop", "arc-reference") for x in out):
        cycle = dag.find_cycle()
        if cycle:
            out.append(Violation("cycle", cycle[0], "directed cycle " + " -> ".join(cycle + cycle[:1])))

    kinds = {v.kind for v in dag.nodes}
    if net.kind == "discrete" and kinds - {DISCRETE}:
        out.append(Violation("kind", None, "discrete networks must contain only discrete nodes"))
    if net.kind == "gaussian" and kinds - {CONTINUOUS}:
        out.append(Violation("kind", None, "gaussian networks must contain only continuous nodes"))

    for name in names:
        if name not in net.locals:
            out.append(Violation("missing-local", name, "no local distribution"))
    for name in net.locals:
        if name not in seen:
            out.append(Violation("missing-local", name, "local distribution for an unknown node"))

    for v in dag.nodes:
        loc = net.locals.get(v.name)
        if loc is None:
            continue
        if getattr(loc, "child", v.name) != v.name:
            out.append(Violation("local-child", v.name, f"local distribution is for {loc.child!r}"))
        dag_parents = set(dag.parents(v.name))
        if set(loc.parents) != dag_parents or len(set(loc.parents)) != len(loc.parents):
            out.append(
                Violation("parents-mismatch", v.name, f"local parents {list(loc.parents)} != DAG parents {sorted(dag_parents)}")
            )
            continue
        if any(p not in seen for p in loc.parents):
            continue
        if v.is_discrete:
            if not isinstance(loc, Cpt):
                out.append(Violation("local-type", v.name, "discrete nodes need a CPT"))
                continue
            bad = [p for p in loc.parents if not dag.variable(p).is_discrete]
            if bad:
                out.append(Violation("discrete-parent", v.name, f"discrete node has continuous parents {bad}"))
                continue
            q = int(np.prod([dag.variable(p).cardinality for p in loc.parents]))
            if loc.table.shape != (v.cardinality, q):
                out.append(Violation("cpt-shape", v.name, f"table shape {loc.table.shape} != ({v.cardinality}, {q})"))
                continue
            t = loc.table
            if not np.all(np.isfinite(t)) or t.min(initial=0) < 0 or t.max(initial=0) > 1:
                out.append(Violation("cpt-range", v.name, "probabilities must lie in [0, 1]"))
            sums = t.sum(axis=0)
            if np.any(np.abs(sums - 1) > PROBABILITY_TOL):
                j = int(np.argmax(np.abs(sums - 1)))
                out.append(Violation("cpt-column-sum", v.name, f"column {j} sums to {sums[j]!r}"))
        elif net.kind == "gaussian":
            if not isinstance(loc, GaussianLocal):
                out.append(Violation("local-type", v.name, "gaussian nodes need a GaussianLocal"))
                continue
            _check_gaussian(loc, loc.parents, v.name, out)
        else:
            if not isinstance(loc, ClgLocal):
                out.append(Violation("local-type", v.name, "continuous CLG nodes need a ClgLocal"))
                continue
            if any(not dag.variable(p).is_discrete for p in loc.discrete_parents) or any(
                dag.variable(p).is_discrete for p in loc.continuous_parents
            ):
                out.append(Violation("parent-kind", v.name, "discrete/continuous parent lists mix kinds"))
                continue
            expected = set(configurations([dag.variable(p) for p in loc.discrete_parents]))
            if set(loc.components) != expected:
                out.append(
                    Violation("components", v.name, f"components cover {len(loc.components)} of {len(expected)} configurations")
                )
            for comp in loc.components.values():
                _check_gaussian(comp, loc.continuous_parents, v.name, out)
    return ValidationReport(tuple(out))


def ensure_valid(net: Network, kind: str | None = None) -> Network:
    """Raise :class:`NetworkError` unless ``net`` is valid (and of ``kind``).

    Networks are immutable, so the report is computed once per object.
    """
    report = net._report
    if report is None:
        report = validate_network(net)
        object.__setattr__(net, "_report", report)
    if not report.ok:
        raise NetworkError(report)
    if kind is not None and net.kind != kind:
        raise NetworkError(ValidationReport((Violation("kind", None, f"expected a {kind} network, got {net.kind}"),)))
    return net


# --------------------------------------------------------------------------
# Subnetworks
# --------------------------------------------------------------------------


class Subnetworks(NamedTuple):
    discrete: Network
    identifying_set: tuple[str, ...]
    components: dict[tuple[str, ...], Network]


def discrete_part(net: Network) -> Network:
    """Spanning subnetwork over the discrete nodes with the original CPTs."""
    names = net.discrete_names
    return Network(net.dag.subgraph(names), "discrete", {n: net.locals[n] for n in names})


def component_network(net: Network, assignment: Mapping[str, str]) -> Network:
    """GBN over the continuous nodes selected by a discrete assignment."""
    names = net.continuous_names
    locs = {n: net.locals[n].component(assignment) for n in names}
    return Network(net.dag.subgraph(names), "gaussian", locs)


def extract_subnetworks(net: Network, subset: Iterable[str] | None = None) -> Subnetworks:
    """Split a CLG network into its discrete part and per-configuration GBNs.

    Parameters
    ----------
    net : Network
        A valid ``clg`` network.
    subset : iterable of str, optional
        Discrete nodes whose configurations index the components.  Must
        contain the discrete parents of every continuous node; defaults to
        exactly that set.
    """
    ensure_valid(net, "clg")
    delta = net.delta_union()
    if subset is None:
        subset = delta
    subset = set(subset)
    if not subset <= set(net.discrete_names):
        raise ValueError(f"subset {sorted(subset - set(net.discrete_names))} is not a set of discrete nodes")
    if not set(delta) <= subset:
        raise ValueError(f"subset must contain the discrete parents of continuous nodes {list(delta)}")
    ordered = tuple(n for n in net.names if n in subset)
    variables = [net.variable(n) for n in ordered]
    comps = {cfg: component_network(net, dict(zip(ordered, cfg))) for cfg in configurations(variables)}
    return Subnetworks(discrete_part(net), ordered, comps)
