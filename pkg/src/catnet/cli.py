"""Command-line front end.

Exit codes: 0 ok, 1 bad input, 2 infeasible, 3 greedy failure, 4 problem too
large, 5 verification failed, 6 q outside the prior.  JSON and CSV go to
``--out`` or stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from typing import Sequence

import numpy as np

from catnet import __version__
from catnet.cnot import (
    bench_to_csv,
    cnot_benchmark,
    disentangling_protocol,
    echoing_protocol,
    fit_exponents,
    greedy_protocol,
    optimal_ordering,
    protocol_cost,
)
from catnet.core import normalize, schedule_from_json, schedule_to_json
from catnet.errors import GreedyFailure, Infeasible, PriorViolation, TooLarge
from catnet.partition import optimal_partition
from catnet.rpe import mse_benchmark
from catnet.solver import DEFAULT_CAP, design_protocol
from catnet.verify import verify_report

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_GREEDY = 0, 1, 2, 3
EXIT_TOO_LARGE, EXIT_VERIFY, EXIT_PRIOR = 4, 5, 6


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


class RunManifest:
    """Provenance attached to every output."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.arguments = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
        self.seed = getattr(args, "seed", None)
        self.digests: dict[str, str] = {}
        self._start = time.perf_counter()

    def add_input(self, name: str, data: bytes):
        self.digests[name] = "sha256:" + hashlib.sha256(data).hexdigest()

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "version": __version__,
            "input_digests": self.digests,
            "wall_time_s": round(time.perf_counter() - self._start, 6),
        }


def _read_source(text: str, manifest: RunManifest, name: str) -> object:
    """Parse inline JSON, or read JSON from a file path."""
    if os.path.exists(text):
        with open(text, "rb") as fh:
            data = fh.read()
    else:
        data = text.encode()
    manifest.add_input(name, data)
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise InputError(f"{name}: not valid JSON ({exc})") from None


def _load_alpha(text: str, manifest: RunManifest):
    doc = _read_source(text, manifest, "alpha")
    if isinstance(doc, dict):
        if "alpha" not in doc:
            raise InputError("alpha document has no 'alpha' field")
        doc = doc["alpha"]
    if not isinstance(doc, list) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in doc):
        raise InputError("alpha must be a JSON array of numbers")
    try:
        return normalize(doc)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_protocol(path: str, manifest: RunManifest, strict: bool):
    doc = _read_source(path, manifest, "protocol")
    if not isinstance(doc, dict):
        raise InputError("protocol must be a JSON object")
    try:
        return schedule_from_json(doc, strict=strict)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"malformed protocol: {exc}") from None


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc: dict, out: str | None):
    _emit(json.dumps(doc, indent=2) + "\n", out)


def _parse_list(text: str | None):
    if text is None:
        return None
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        raise InputError(f"expected a JSON array, got {text!r}") from None
    if not isinstance(val, list):
        raise InputError(f"expected a JSON array, got {text!r}")
    return val


def cmd_design(args) -> int:
    m = RunManifest("design", args)
    fc = _load_alpha(args.alpha, m)
    objective = _parse_list(args.objective)
    try:
        if args.construction == "lp":
            s = design_protocol(fc, non_echoed=args.non_echoed, k=args.k, objective=objective,
                                cap=args.cap, total_time=args.total_time)
        else:
            build = {"greedy": lambda f: greedy_protocol(f)[0],
                     "disentangling": disentangling_protocol,
                     "echoing": echoing_protocol}[args.construction]
            s = build(fc).with_total_time(args.total_time)
            if args.k is not None and s.max_weight > args.k:
                raise InputError(f"{args.construction} construction needs weight {s.max_weight} > k={args.k}")
        if args.order != "none":
            s = optimal_ordering(s, args.order)
    except Infeasible as exc:
        cert = exc.certificate
        _emit_json({"infeasible": True, "k": args.k, "phase1_value": exc.phase1_value,
                    "certificate": None if cert is None else [float(v) for v in cert.y],
                    "manifest": m.to_json()}, args.out)
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except GreedyFailure as exc:
        _emit_json({"greedy_failure": True, "residuals": [float(v) for v in exc.residuals],
                    "manifest": m.to_json()}, args.out)
        print(f"greedy failure: {exc}", file=sys.stderr)
        return EXIT_GREEDY
    doc = schedule_to_json(s)
    c = protocol_cost(s)
    doc["construction"] = args.construction
    doc["order"] = args.order
    doc["cnot_cost"] = {"prep": c.prep, "intermediate": c.intermediate, "measurement": c.measurement}
    doc["manifest"] = m.to_json()
    _emit_json(doc, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    m = RunManifest("verify", args)
    s = _load_protocol(args.protocol, m, strict=False)
    t = s.total_time if args.t is None else args.t
    rep = verify_report(s, t=t, method=args.method, tol=args.tol)
    rep["manifest"] = m.to_json()
    _emit_json(rep, args.out)
    ok = rep["passed"] and rep["probe_form_ok"] is not False
    if not ok:
        print(f"verification failed: max row residual {max(rep['row_residuals']):.3g}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def _parse_stages(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(v) for v in text.split("-"))
            ks = list(range(lo, hi + 1))
        else:
            ks = [int(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"bad --stages {text!r}; use K, K1,K2,... or Kmin-Kmax") from None
    if not ks or min(ks) < 1:
        raise InputError("stage counts must be >= 1")
    return ks


def cmd_simulate(args) -> int:
    m = RunManifest("simulate", args)
    s = _load_protocol(args.protocol, m, strict=True)
    ks = _parse_stages(args.stages)
    if args.trials < 1 or args.q_range <= 0:
        raise InputError("need --trials >= 1 and --q-range > 0")
    nu = _parse_list(args.nu)
    curve = mse_benchmark(args.q, s.fc, ks, args.trials, args.seed, q_range=args.q_range,
                          q_min=args.q_min, nu=nu)
    summary = {"slope": None if np.isnan(curve.slope) else curve.slope, "all_within_bound": curve.all_within_bound,
               "configs": [c.to_json() for c in curve.configs], "manifest": m.to_json()}
    _emit(curve.to_csv(), args.out)
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        with open(args.out + ".json", "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return EXIT_OK if curve.all_within_bound else EXIT_VERIFY


def cmd_benchmark_cnot(args) -> int:
    m = RunManifest("benchmark-cnot", args)
    if not 1 <= args.d_min <= args.d_max or args.instances < 1:
        raise InputError("need 1 <= d-min <= d-max and instances >= 1")
    rows = cnot_benchmark(args.d_min, args.d_max, args.instances, args.seed,
                          workers=args.threads, greedy_retries=args.greedy_retries)
    exps = {k: (None if np.isnan(v) else v) for k, v in fit_exponents(rows).items()}
    summary = {"exponents": exps,
               "greedy_failures": sum(1 for r in rows if r["failed"]),
               "manifest": m.to_json()}
    _emit(bench_to_csv(rows), args.out)
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        with open(args.out + ".summary.json", "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_partition(args) -> int:
    m = RunManifest("partition", args)
    fc = _load_alpha(args.alpha, m)
    if args.k < 1:
        raise InputError("k must be >= 1")
    doc = optimal_partition(fc, args.k).to_json()
    doc["manifest"] = m.to_json()
    _emit_json(doc, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="catnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="optimal protocol for alpha")
    p.add_argument("--alpha", required=True, help="JSON array, or a file with an array or protocol")
    p.add_argument("--k", type=int, help="entanglement cap (default: the minimum)")
    p.add_argument("--non-echoed", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--construction", choices=["lp", "greedy", "disentangling", "echoing"], default="lp")
    p.add_argument("--order", choices=["none", "brute", "held-karp"], default="none")
    p.add_argument("--objective", help="JSON cost vector over the enumerated families (lp only)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="family-enumeration limit")
    p.add_argument("--total-time", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="check a protocol saturates the bound")
    p.add_argument("protocol")
    p.add_argument("--t", type=float)
    p.add_argument("--method", choices=["analytic", "generator", "fd", "all"], default="analytic")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo MSE of phase estimation")
    p.add_argument("protocol")
    p.add_argument("--q", type=float, help="true q (default: uniform over the prior per trial)")
    p.add_argument("--q-range", type=float, default=1.0)
    p.add_argument("--q-min", type=float, help="prior lower end (default: centered on 0)")
    p.add_argument("--stages", default="4-8", help="K, K1,K2,... or Kmin-Kmax")
    p.add_argument("--nu", help="JSON list of per-stage repetitions")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark-cnot", help="CNOT cost scaling of random-vertex and greedy protocols")
    p.add_argument("--d-min", type=int, default=3)
    p.add_argument("--d-max", type=int, default=10)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--greedy-retries", type=int, default=0,
                   help="redraw an instance up to this many times when greedy fails")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark_cnot)

    p = sub.add_parser("partition", help="optimal contiguous partition under an entanglement cap")
    p.add_argument("--alpha", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PriorViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRIOR
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
