"""Model files (JSON, see docs/format.md) and delimited dataset files."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, TextIO

import numpy as np

from .fitting import Dataset
from .network import (
    ClgLocal,
    Cpt,
    Dag,
    GaussianLocal,
    Network,
    NetworkError,
    Variable,
    validate_network,
)

FORMAT_VERSION = "1.0"
CONFIG_SEPARATOR = ","


class FormatError(ValueError):
    """Malformed model or dataset file; ``where`` locates the problem."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _expect_keys(obj: Any, where: str, required: Iterable[str], optional: Iterable[str] = ()):
    if not isinstance(obj, dict):
        raise FormatError("expected an object", where)
    required, optional = set(required), set(optional)
    for key in obj:
        if key not in required | optional:
            raise FormatError(f"unknown field {key!r}", f"{where}.{key}" if where else key)
    for key in sorted(required):
        if key not in obj:
            raise FormatError(f"missing field {key!r}", where or "<root>")


def _number(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FormatError("expected a number", where)
    return float(x)


def _names(x: Any, where: str) -> tuple[str, ...]:
    if not isinstance(x, list) or not all(isinstance(s, str) for s in x):
        raise FormatError("expected a list of names", where)
    return tuple(x)


def _gaussian(obj: Any, child: str, where: str) -> GaussianLocal:
    _expect_keys(obj, where, ("intercept", "variance"), ("coefficients",))
    coefs = obj.get("coefficients", {})
    if not isinstance(coefs, dict):
        raise FormatError("expected an object", f"{where}.coefficients")
    return GaussianLocal(
        child,
        _number(obj["intercept"], f"{where}.intercept"),
        {k: _number(v, f"{where}.coefficients.{k}") for k, v in coefs.items()},
        _number(obj["variance"], f"{where}.variance"),
    )


def network_from_dict(doc: Any) -> Network:
    """Build a network from a parsed document; raises FormatError/NetworkError."""
    _expect_keys(doc, "", ("format_version", "kind", "nodes", "arcs", "locals"), ("description",))
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc['format_version']!r}", "format_version")
    kind = doc["kind"]
    if kind not in ("discrete", "gaussian", "clg"):
        raise FormatError(f"unknown kind {kind!r}", "kind")
    if not isinstance(doc["nodes"], list):
        raise FormatError("expected a list", "nodes")
    variables = []
    for i, node in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        _expect_keys(node, where, ("name", "kind"), ("levels",))
        if node["kind"] == "discrete":
            variables.append(Variable.discrete(node["name"], _names(node.get("levels", []), f"{where}.levels")))
        elif node["kind"] == "continuous":
            if "levels" in node:
                raise FormatError("continuous nodes have no levels", f"{where}.levels")
            variables.append(Variable.continuous(node["name"]))
        else:
            raise FormatError(f"unknown node kind {node['kind']!r}", f"{where}.kind")
    arcs = []
    for i, arc in enumerate(doc["arcs"] if isinstance(doc["arcs"], list) else [None]):
        if not (isinstance(arc, list) and len(arc) == 2 and all(isinstance(s, str) for s in arc)):
            raise FormatError("expected a [parent, child] pair", f"arcs[{i}]")
        arcs.append(tuple(arc))
    dag = Dag(tuple(variables), frozenset(arcs))
    kinds = {v.name: v.kind for v in variables}

    if not isinstance(doc["locals"], dict):
        raise FormatError("expected an object", "locals")
    locs = {}
    for name, obj in doc["locals"].items():
        where = f"locals.{name}"
        if kinds.get(name) == "discrete":
            _expect_keys(obj, where, ("parents", "cpt"))
            parents = _names(obj["parents"], f"{where}.parents")
            rows = obj["cpt"]
            try:
                table = np.array(rows, dtype=float)
            except (TypeError, ValueError):
                raise FormatError("expected a rectangular table of numbers", f"{where}.cpt") from None
            if table.ndim != 2:
                raise FormatError("expected a list of rows (one per level)", f"{where}.cpt")
            locs[name] = Cpt(name, parents, table)
        elif isinstance(obj, dict) and "components" in obj:
            _expect_keys(obj, where, ("discrete_parents", "components"), ("continuous_parents",))
            dpar = _names(obj["discrete_parents"], f"{where}.discrete_parents")
            cpar = _names(obj.get("continuous_parents", []), f"{where}.continuous_parents")
            comps = obj["components"]
            if not isinstance(comps, dict):
                raise FormatError("expected an object", f"{where}.components")
            parsed = {}
            for key, comp in comps.items():
                cfg = tuple(key.split(CONFIG_SEPARATOR)) if key else ()
                if len(cfg) != len(dpar):
                    raise FormatError(f"configuration {key!r} does not match discrete_parents", f"{where}.components")
                parsed[cfg] = _gaussian(comp, name, f"{where}.components.{key}")
            locs[name] = ClgLocal(name, dpar, cpar, parsed)
        else:
            g = _gaussian(obj, name, where)
            locs[name] = ClgLocal(name, (), g.parents, {(): g}) if kind == "clg" else g
    net = Network(dag, kind, locs)
    report = validate_network(net)
    if not report.ok:
        raise NetworkError(report)
    return net


def _gaussian_dict(loc: GaussianLocal) -> dict:
    return {"intercept": loc.intercept, "coefficients": dict(loc.coefficients), "variance": loc.variance}


def network_to_dict(net: Network, description: str | None = None) -> dict:
    doc: dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": net.kind}
    if description:
        doc["description"] = description
    doc["nodes"] = [
        {"name": v.name, "kind": v.kind, **({"levels": list(v.levels)} if v.is_discrete else {})}
        for v in net.variables
    ]
    pos = {n: i for i, n in enumerate(net.names)}
    doc["arcs"] = [list(a) for a in sorted(net.dag.arcs, key=lambda a: (pos[a[1]], pos[a[0]]))]
    locs = {}
    for name in net.names:
        loc = net.locals[name]
        if isinstance(loc, Cpt):
            locs[name] = {"parents": list(loc.parents), "cpt": loc.table.tolist()}
        elif isinstance(loc, GaussianLocal):
            locs[name] = _gaussian_dict(loc)
        elif not loc.discrete_parents:
            locs[name] = _gaussian_dict(loc.components[()])
        else:
            locs[name] = {
                "discrete_parents": list(loc.discrete_parents),
                "continuous_parents": list(loc.continuous_parents),
                "components": {CONFIG_SEPARATOR.join(k): _gaussian_dict(v) for k, v in loc.components.items()},
            }
    doc["locals"] = locs
    return doc


def _emit(obj: Any, indent: int) -> str:
    """JSON with scalar-only lists and small scalar objects kept on one line."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    scalar = (str, int, float, bool, type(None))
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("non-finite numbers cannot be written")
    if isinstance(obj, scalar):
        return json.dumps(obj)
    if isinstance(obj, list):
        if all(isinstance(x, scalar) for x in obj):
            return "[" + ", ".join(_emit(x, 0) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + _emit(x, indent + 1) for x in obj) + "\n" + pad + "]"
    if not obj:
        return "{}"
    flat = all(
        isinstance(v, scalar)
        or (isinstance(v, (list, dict)) and all(isinstance(x, scalar) for x in (v.values() if isinstance(v, dict) else v)))
        for v in obj.values()
    )
    if flat:
        line = "{" + ", ".join(f"{json.dumps(k)}: {_emit(v, 0)}" for k, v in obj.items()) + "}"
        if len(line) + len(inner) <= 88:
            return line
    parts = [f"{inner}{json.dumps(k)}: {_emit(v, indent + 1)}" for k, v in obj.items()]
    return "{\n" + ",\n".join(parts) + "\n" + pad + "}"


def dumps_network(net: Network, description: str | None = None) -> str:
    """Canonical text form; ``loads_network(dumps_network(n))`` equals ``n``."""
    return _emit(network_to_dict(net, description), 0) + "\n"


def loads_network(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return network_from_dict(doc)


def load_network(path: str | Path) -> Network:
    path = Path(path)
    try:
        return loads_network(path.read_text(encoding="utf-8"))
    except FormatError as exc:
        raise FormatError(str(exc), str(path)) from None


def save_network(net: Network, path: str | Path, description: str | None = None) -> None:
    Path(path).write_text(dumps_network(net, description), encoding="utf-8")


def load_description(path: str | Path) -> str | None:
    return json.loads(Path(path).read_text(encoding="utf-8")).get("description")


def bundled_network_path(name: str) -> Path:
    """Path of a network file shipped inside the package (``networks/``)."""
    return Path(str(resources.files("bninfo") / "networks" / f"{name}.net"))


def bundled_network(name: str) -> Network:
    return load_network(bundled_network_path(name))


# --------------------------------------------------------------------------
# Datasets
# --------------------------------------------------------------------------


def read_dataset(path: str | Path, variables: Iterable[Variable], delimiter: str = ",") -> Dataset:
    """Read a delimited file with a header row.

    Discrete cells hold level labels, continuous cells decimal numbers.
    Extra columns are ignored; missing ones are an error.
    """
    variables = list(variables)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty dataset file", str(path)) from None
        index = {h.strip(): i for i, h in enumerate(header)}
        missing = [v.name for v in variables if v.name not in index]
        if missing:
            raise FormatError(f"missing columns {missing}", f"{path}: line 1")
        cols: dict[str, list] = {v.name: [] for v in variables}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} cells, got {len(row)}", f"{path}: line {lineno}")
            for v in variables:
                cell = row[index[v.name]].strip()
                try:
                    cols[v.name].append(v.index(cell) if v.is_discrete else float(cell))
                except ValueError:
                    raise FormatError(f"bad value {cell!r} for column {v.name!r}", f"{path}: line {lineno}") from None
    return Dataset.from_columns(variables, cols)


def write_dataset(data: Dataset, path: str | Path | TextIO, delimiter: str = ",") -> None:
    """Write ``data`` with a header row to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_rows(data, path, delimiter)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(data, fh, delimiter)


def _write_rows(data: Dataset, fh: TextIO, delimiter: str) -> None:
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(data.names)
    cols = []
    for v in data.columns:
        arr = data[v.name]
        cols.append([v.levels[i] for i in arr] if v.is_discrete else [repr(float(x)) for x in arr])
    writer.writerows(zip(*cols))
