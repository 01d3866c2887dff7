"""Command-line interface: ``bninfo <command> ...`` (also ``python -m bninfo``).

Exit codes: 0 success, 2 invalid model or data file, 3 computation
error, 64 usage error.  An infinite KL is a result, reported as ``inf``
with exit code 0.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bench
from .entropy import entropy_clgbn, entropy_discrete, entropy_gbn
from .fitting import FitError, fit_mle
from .globals import (
    GaussianGlobal,
    JointTable,
    MixtureGlobal,
    compose_clgbn,
    compose_discrete,
    compose_gbn,
    decompose_clgbn,
    decompose_discrete,
    decompose_gbn,
)
from .io import FormatError, dumps_network, load_network, read_dataset, write_dataset
from .kl import (
    IncompatibleNetworksError,
    KlReport,
    kl_clgbn,
    kl_discrete,
    kl_gbn_bounds,
    kl_gbn_empirical,
    kl_gbn_sparse,
    kl_mvn,
)
from .network import Network, NetworkError, configurations, validate_network
from .sampling import GENERATOR_ID, mc_entropy, mc_kl, sample_network

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_USAGE = 0, 2, 3, 64
SEED_ENV = "BNINFO_SEED"
KL_METHODS = ("exact", "sparse", "spectral", "approx", "empirical", "mc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _plain(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _text_lines(obj: Any, prefix: str = "") -> list[str]:
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            key = f"{prefix}.{k}" if prefix else str(k)
            if isinstance(v, dict) or (isinstance(v, list) and v and isinstance(v[0], (dict, list))):
                lines += _text_lines(v, key)
            else:
                lines.append(f"{key}: {_fmt(v)}")
        return lines
    if isinstance(obj, list):
        lines = []
        for i, v in enumerate(obj):
            lines += _text_lines(v, f"{prefix}[{i}]") if isinstance(v, (dict, list)) else [f"{prefix}[{i}]: {_fmt(v)}"]
        return lines
    return [f"{prefix}: {_fmt(obj)}"]


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def emit(result: dict, mode: str, stream=None) -> None:
    stream = stream or sys.stdout
    result = _plain(result)
    if mode == "json":
        stream.write(json.dumps(result, indent=2) + "\n")
    else:
        stream.write("\n".join(_text_lines(result)) + "\n")


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _joint_dict(t: JointTable) -> dict:
    cells = {",".join(c): float(p) for c, p in zip(configurations(t.variables), t.probabilities.ravel())}
    return {"variables": list(t.names), "cells": cells}


def _gaussian_dict(g: GaussianGlobal) -> dict:
    return {"variables": list(g.variables), "mean": g.mean.tolist(), "covariance": g.covariance.tolist()}


def global_to_dict(net: Network, glob) -> dict:
    if isinstance(glob, JointTable):
        return {"kind": "discrete", "joint": _joint_dict(glob)}
    if isinstance(glob, GaussianGlobal):
        return {"kind": "gaussian", **_gaussian_dict(glob)}
    mix: MixtureGlobal = glob
    return {
        "kind": "clg",
        "joint": _joint_dict(mix.discrete_joint),
        "identifying_set": list(mix.identifying_set),
        "components": {",".join(k): _gaussian_dict(v) for k, v in mix.components.items()},
    }


def _compose(net: Network):
    return {"discrete": compose_discrete, "gaussian": compose_gbn, "clg": compose_clgbn}[net.kind](net)


def _report_dict(rep: KlReport) -> dict:
    return {"value": rep.value, "method": rep.method, "diagnostics": dict(rep.diagnostics)}


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_validate(args) -> tuple[dict, int]:
    try:
        net = load_network(args.network)
    except NetworkError as exc:
        return {
            "valid": False,
            "violations": [{"rule": v.rule, "node": v.node, "message": v.message} for v in exc.report.violations],
        }, EXIT_INVALID
    report = validate_network(net)
    return {"valid": report.ok, "kind": net.kind, "nodes": len(net.names), "arcs": len(net.dag.arcs)}, EXIT_OK


def cmd_compose(args):
    net = load_network(args.network)
    return global_to_dict(net, _compose(net)), EXIT_OK


def cmd_decompose(args):
    source = load_network(args.network)
    structure = load_network(args.structure) if args.structure else source
    glob = _compose(source)
    if source.kind != structure.kind:
        raise IncompatibleNetworksError("source and structure networks are of different kinds")
    fn = {"discrete": decompose_discrete, "gaussian": decompose_gbn, "clg": decompose_clgbn}[source.kind]
    net = fn(glob, structure.dag)
    text = dumps_network(net)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        return {"written": args.output, "kind": net.kind}, EXIT_OK
    sys.stdout.write(text)
    return None, EXIT_OK


def cmd_entropy(args):
    net = load_network(args.network)
    if args.method == "mc":
        est = mc_entropy(net, args.samples, _seed(args))
        return {"value": est.value, "method": "mc", "std_error": est.std_error, "samples": est.m,
                "generator": GENERATOR_ID}, EXIT_OK
    rep = {"discrete": entropy_discrete, "gaussian": entropy_gbn, "clg": entropy_clgbn}[net.kind](net)
    return {"value": rep.total, "method": "exact", "per_node": dict(rep.per_node)}, EXIT_OK


def cmd_kl(args):
    b, b2 = load_network(args.first), load_network(args.second)
    if b.kind != b2.kind:
        raise IncompatibleNetworksError(f"networks are of different kinds: {b.kind} vs {b2.kind}")
    method = args.method
    if method == "mc":
        est = mc_kl(b, b2, args.samples, _seed(args))
        return {"value": est.value, "method": "mc", "std_error": est.std_error, "samples": est.m,
                "infinite": est.infinite, "generator": GENERATOR_ID}, EXIT_OK
    if b.kind == "discrete":
        if method != "exact":
            raise UsageError(f"method {method!r} is not available for discrete networks (use exact or mc)")
        return _report_dict(kl_discrete(b, b2)), EXIT_OK
    if b.kind == "clg":
        if method not in ("exact", "sparse"):
            raise UsageError(f"method {method!r} is not available for CLG networks (use exact, sparse or mc)")
        return _report_dict(kl_clgbn(b, b2, "naive" if method == "exact" else "sparse")), EXIT_OK
    if method == "exact":
        return _report_dict(kl_mvn(compose_gbn(b), compose_gbn(b2))), EXIT_OK
    if method == "spectral":
        return _report_dict(kl_mvn(compose_gbn(b), compose_gbn(b2), route="spectral")), EXIT_OK
    if method == "sparse":
        return _report_dict(kl_gbn_sparse(b, b2)), EXIT_OK
    if method == "approx":
        bounds, rep = kl_gbn_bounds(b, b2)
        return _report_dict(rep), EXIT_OK
    if not args.data:
        raise UsageError("--data is required for --method empirical")
    data = read_dataset(args.data, b.variables)
    fa, fb = fit_mle(b.dag, data), fit_mle(b2.dag, data)
    out = _report_dict(kl_gbn_empirical(fa, fb))
    out["diagnostics"]["variance"] = {n: fa.summary.variance[n] for n in b.names}
    out["diagnostics"]["variance_b2"] = {n: fb.summary.variance[n] for n in b.names}
    return out, EXIT_OK


def cmd_learn(args):
    structure = load_network(args.structure)
    data = read_dataset(args.data, structure.variables)
    fitted = fit_mle(structure.dag, data, structure.kind).network
    text = dumps_network(fitted)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        return {"written": args.output, "rows": data.n}, EXIT_OK
    sys.stdout.write(text)
    return None, EXIT_OK


def cmd_sample(args):
    net = load_network(args.network)
    batch = sample_network(net, args.samples, _seed(args))
    if args.output:
        write_dataset(batch.dataset(), args.output)
        return {"written": args.output, "rows": batch.m, "seed": batch.seed, "generator": batch.generator_id}, EXIT_OK
    write_dataset(batch.dataset(), sys.stdout)
    return None, EXIT_OK


def cmd_bench(args):
    records = bench.run_bench(args.operation, args.sizes, args.repetitions, _seed(args))
    key = "n" if args.operation == "kl-empirical" else "N"
    out = {
        "operation": args.operation,
        "records": [r.to_dict() for r in records],
        "loglog_slope": bench.loglog_slope(records, key) if len(records) > 1 else None,
    }
    if args.output:
        Path(args.output).write_text(json.dumps(_plain(out), indent=2) + "\n", encoding="utf-8")
    return out, EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bninfo", description="Entropy and KL divergence for Bayesian networks.")
    p.add_argument("--emit", choices=("text", "json"), default="text", help="output format (default: text)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a model file")
    s.add_argument("network")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("compose", help="print the global distribution")
    s.add_argument("network")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("decompose", help="local distributions of the composed global under a structure")
    s.add_argument("network")
    s.add_argument("--structure", help="model file whose DAG is used (default: the input's own)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("entropy", help="Shannon entropy in nats")
    s.add_argument("network")
    s.add_argument("--method", choices=("exact", "mc"), default="exact")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("kl", help="KL divergence KL(first || second) in nats")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--method", choices=KL_METHODS, default="exact")
    s.add_argument("--data", help="delimited data file for --method empirical")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_kl)

    s = sub.add_parser("learn", help="fit the parameters of a structure by maximum likelihood")
    s.add_argument("structure", help="model file providing variables and DAG")
    s.add_argument("--data", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("sample", help="ancestral sampling to a delimited file")
    s.add_argument("network")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("bench", help="time an operation over a size grid")
    s.add_argument("--operation", choices=bench.OPERATIONS, required=True)
    s.add_argument("--sizes", type=int, nargs="+", required=True)
    s.add_argument("--repetitions", type=int, default=bench.MIN_REPETITIONS)
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bench)
    return p


def run_command(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        return _run(argv, stdout, stderr)


def _run(argv, stdout, stderr) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        result, code = args.func(args)
    except UsageError as exc:
        stderr.write(f"bninfo: error: {exc}\n")
        return EXIT_USAGE
    except (FormatError, NetworkError, FitError, IncompatibleNetworksError) as exc:
        stderr.write(f"bninfo: invalid input: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        stderr.write(f"bninfo: {exc}\n")
        return EXIT_INVALID
    except (ValueError, ArithmeticError, MemoryError, np.linalg.LinAlgError, RuntimeError) as exc:
        stderr.write(f"bninfo: computation failed: {exc}\n")
        return EXIT_COMPUTE
    if result is not None:
        if args.command in ("entropy", "kl", "compose"):
            result["timing_seconds"] = time.perf_counter() - started
        emit(result, args.emit, stdout)
    return code


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run_command(argv))
