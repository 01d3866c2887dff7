"""Maximum-likelihood parameter fitting for all three network families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .network import (
    ClgLocal,
    Cpt,
    Dag,
    GaussianLocal,
    Network,
    Variable,
    configurations,
)


class FitError(ValueError):
    """Raised when the data cannot support a maximum-likelihood fit."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented data; discrete columns hold integer level indices.

    Examples
    --------
    >>> ds = Dataset.from_columns([Variable.discrete("A", "ab")], {"A": [0, 1, 0]})
    >>> ds.n
    3
    """

    columns: tuple[Variable, ...]
    data: Mapping[str, np.ndarray]

    def __post_init__(self):
        cols = tuple(self.columns)
        data = {}
        n = None
        for v in cols:
            if v.name not in self.data:
                raise ValueError(f"missing column {v.name!r}")
            raw = np.asarray(self.data[v.name])
            arr = raw.astype(np.int64) if v.is_discrete else raw.astype(float)
            if arr.ndim != 1:
                raise ValueError(f"column {v.name!r} must be one-dimensional")
            if v.is_discrete and (np.any(arr != raw) or arr.size and (arr.min() < 0 or arr.max() >= v.cardinality)):
                raise ValueError(f"column {v.name!r} holds invalid level indices")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ValueError("all columns must have the same length")
            arr.setflags(write=False)
            data[v.name] = arr
        if not n:
            raise ValueError("a dataset needs at least one row")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_columns(cls, columns: Sequence[Variable], data: Mapping[str, Sequence]) -> "Dataset":
        return cls(tuple(columns), dict(data))

    @property
    def n(self) -> int:
        return len(next(iter(self.data.values())))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.columns)

    def variable(self, name: str) -> Variable:
        for v in self.columns:
            if v.name == name:
                return v
        raise KeyError(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]


@dataclass(frozen=True, eq=False)
class FitSummary:
    """Per-node fitted values, residuals and ML residual variances.

    For CLG nodes the variance is the per-configuration map; for Gaussian
    nodes it is a scalar.  Discrete nodes are not listed.
    """

    fitted: Mapping[str, np.ndarray]
    residuals: Mapping[str, np.ndarray]
    variance: Mapping[str, object]
    n: int


@dataclass(frozen=True, eq=False)
class FittedNetwork:
    network: Network
    summary: FitSummary


def _ols(y: np.ndarray, X: np.ndarray, node: str) -> tuple[np.ndarray, np.ndarray]:
    """Least squares with an intercept column; returns (coef, fitted)."""
    design = np.column_stack([np.ones(len(y)), X]) if X.size else np.ones((len(y), 1))
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitError(f"singular regression design for node {node!r}")
    return coef, design @ coef


def _gaussian_local(node: str, parents: Sequence[str], y: np.ndarray, X: np.ndarray):
    coef, fitted = _ols(y, X, node)
    resid = y - fitted
    variance = float(resid @ resid) / len(y)
    if variance <= 0:
        raise FitError(f"zero residual variance for node {node!r}")
    local = GaussianLocal(node, coef[0], dict(zip(parents, coef[1:])), variance)
    return local, fitted, resid


def fit_mle(dag: Dag, data: Dataset, kind: str | None = None) -> FittedNetwork:
    """Fit every local distribution of ``dag`` by maximum likelihood.

    Discrete CPT columns are relative frequencies; continuous nodes are
    ordinary least squares on their continuous parents (one regression per
    discrete parent configuration in CLG networks), with the residual
    variance divided by ``n``.

    Raises
    ------
    FitError
        For a discrete parent configuration with no observations (the
        message names node and configuration) or a rank-deficient design.
    """
    for v in dag.nodes:
        if v.name not in data.data:
            raise ValueError(f"dataset has no column {v.name!r}")
        if data.variable(v.name) != v:
            raise ValueError(f"dataset column {v.name!r} does not match the DAG variable")
    if kind is None:
        kinds = {v.kind for v in dag.nodes}
        kind = "discrete" if kinds == {"discrete"} else "gaussian" if kinds == {"continuous"} else "clg"

    n = data.n
    locals_ = {}
    fitted, resid, variance = {}, {}, {}
    for v in dag.nodes:
        name = v.name
        parents = dag.parents(name)
        disc = [p for p in parents if dag.variable(p).is_discrete]
        cont = [p for p in parents if not dag.variable(p).is_discrete]
        if v.is_discrete:
            cards = [dag.variable(p).cardinality for p in parents]
            q = int(np.prod(cards)) if parents else 1
            col = np.ravel_multi_index([data[p] for p in parents], cards) if parents else np.zeros(n, dtype=np.int64)
            counts = np.zeros((v.cardinality, q))
            np.add.at(counts, (data[name], col), 1.0)
            totals = counts.sum(axis=0)
            empty = np.flatnonzero(totals == 0)
            if empty.size:
                cfg = np.unravel_index(int(empty[0]), cards)
                labels = {p: dag.variable(p).levels[i] for p, i in zip(parents, cfg)}
                raise FitError(f"node {name!r}: no observations for parent configuration {labels}")
            locals_[name] = Cpt(name, parents, counts / totals)
            continue

        y = data[name]
        X = np.column_stack([data[p] for p in cont]) if cont else np.empty((n, 0))
        if kind == "gaussian" or (kind == "clg" and not disc):
            loc, fit, res = _gaussian_local(name, cont, y, X)
            locals_[name] = loc if kind == "gaussian" else ClgLocal(name, (), cont, {(): loc})
            fitted[name], resid[name], variance[name] = fit, res, loc.variance
            continue

        dvars = [dag.variable(p) for p in disc]
        codes = np.ravel_multi_index([data[p] for p in disc], [d.cardinality for d in dvars])
        fit = np.empty(n)
        res = np.empty(n)
        comps, var = {}, {}
        for j, cfg in enumerate(configurations(dvars)):
            rows = codes == j
            if not rows.any():
                raise FitError(f"node {name!r}: no observations for parent configuration {dict(zip(disc, cfg))}")
            loc, f, r = _gaussian_local(name, cont, y[rows], X[rows])
            comps[cfg] = loc
            var[cfg] = loc.variance
            fit[rows], res[rows] = f, r
        locals_[name] = ClgLocal(name, disc, cont, comps)
        fitted[name], resid[name], variance[name] = fit, res, var

    net = Network(dag, kind, locals_)
    return FittedNetwork(net, FitSummary(fitted, resid, variance, n))
