"""Command-line entry point: ``pwsbl run|demo|certify|suite``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .certify import UNBOUNDED, certificate_distance_bound, certificate_gap_bound, wcert_search
from .harness import ConfigError, demo_config, load_config, run_experiment
from .problems import GENERATORS, Oracle, build_instance, instance_from_json


def _parse_instance(text):
    """A JSON file, inline JSON, or ``generator[:key=value,...]``."""
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        return instance_from_json(json.loads(path.read_text()))
    if text.lstrip().startswith("{"):
        return instance_from_json(json.loads(text))
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, _, value = item.partition("=")
        params[key.strip()] = json.loads(value)
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; known: {', '.join(sorted(GENERATORS))}")
    return build_instance(name, params)


def _parse_point(text):
    text = text.strip()
    if text.startswith("["):
        values = json.loads(text)
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    return np.array(values, dtype=float)


def _print_report(report, stream):
    for run in report.runs:
        gap = "n/a" if run.final_gap is None else f"{run.final_gap:.3e}"
        dist = "n/a" if run.final_dist is None else f"{run.final_dist:.3e}"
        hit = "" if run.calls_to_target is None else f", target after {run.calls_to_target} calls"
        print(f"{run.label:>14s}  [{run.status}] calls={run.oracle_calls} gap={gap} dist={dist}{hit}", file=stream)
    for a in report.assertions:
        print(f"  assert {a['kind']}: {'PASS' if a['passed'] else 'FAIL'} ({a['detail']})", file=stream)
    for label, path in sorted(report.paths.items()):
        print(f"  trace {label}: {path}", file=stream)


def _cmd_run(args, cfg):
    if args.tol is not None:
        cfg.tol = args.tol
    report = run_experiment(cfg, out_dir=args.out_dir, seed=args.seed)
    _print_report(report, sys.stdout)
    if args.check_assertions and not report.passed:
        return 1
    return 0


def cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return _cmd_run(args, cfg)


def cmd_demo(args):
    cfg = demo_config(args.out_dir or "runs", args.seed if args.seed is not None else 0)
    return _cmd_run(args, cfg)


def cmd_certify(args):
    if not args.delta > 0:
        print("error: --delta must be positive", file=sys.stderr)
        return 2
    try:
        instance = _parse_instance(args.instance)
        point = _parse_point(args.point)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if point.size != instance.n:
        print(f"error: point has {point.size} entries, instance dimension is {instance.n}", file=sys.stderr)
        return 2
    iota_max = UNBOUNDED if args.iota_max is None else args.iota_max
    oracle = Oracle(instance, args.perturbation_radius, args.seed or 0)
    cert = wcert_search(oracle, point, args.delta, args.m, iota_max, instance.region, args.tol if args.tol is not None else 1e-10)
    out = {"oracle_calls": oracle.calls}
    if cert is False:
        out["result"] = "false"
        out["meaning"] = "delta underestimates f(point) - f* for a convex objective"
    else:
        out["result"] = "certificate"
        out["certificate"] = cert.to_json()
        if args.mu is not None:
            out["gap_bound"] = certificate_gap_bound(cert, args.mu)
            db = certificate_distance_bound(cert, args.mu)
            out["distance_bound"] = db if math.isfinite(db) else "inf"
    text = json.dumps(out, indent=2)
    if args.out_dir:
        path = Path(args.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / "certificate.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_suite(args):
    from .acceptance import format_result, run_suite

    results = run_suite(args.only, seed=args.seed or 0, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    if args.out_dir:
        path = Path(args.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / "acceptance.txt").write_text("\n".join(format_result(r) for r in results) + "\n")
    return 1 if (args.check_assertions and failed) else 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the random seed")
    common.add_argument("--out-dir", default=None, help="directory for traces and summaries")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    common.add_argument("--assert", dest="check_assertions", action="store_true", help="exit with status 1 when an assertion fails")

    parser = argparse.ArgumentParser(prog="pwsbl", description="Bundle-level methods for piecewise smooth optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run an experiment config (JSON)")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo", parents=[common], help="bundle-level vs Polyak subgradient on the two-dimensional demo")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("certify", parents=[common], help="search for a W-stationarity certificate at a point")
    p.add_argument("instance", help="instance JSON file, inline JSON, or generator[:key=value,...]")
    p.add_argument("point", help="comma-separated coordinates or a JSON list")
    p.add_argument("--delta", type=float, required=True, help="assumed bound on f(point) - f*")
    p.add_argument("--m", type=int, default=8, help="number of search projections")
    p.add_argument("--iota-max", type=float, default=None, help="radius cap (default: none)")
    p.add_argument("--mu", type=float, default=None, help="growth modulus for gap and distance bounds")
    p.add_argument("--perturbation-radius", type=float, default=0.0)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    p.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers to run")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
