"""Experiment plumbing: configs, baselines, trace files and summaries."""

from __future__ import annotations

import csv
import hashlib
import inspect
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle import Trace, TraceRecord, detect_matching_pairs, run_bl
from .geometry import project_region
from .problems import GENERATORS, BudgetExhausted, Oracle, build_instance

__all__ = [
    "ALGORITHMS",
    "SCHEMA",
    "ConfigError",
    "ExperimentConfig",
    "RunSummary",
    "SummaryReport",
    "config_hash",
    "demo_config",
    "load_config",
    "polyak_subgradient",
    "run_experiment",
    "summarize_trace",
    "trace_to_jsonl",
]

SCHEMA = "pwsbl-config/1"
ALGORITHMS = ("bl", "apx_bl", "bl_mu", "ippm", "pf_bl_mu", "pf_ippm", "polyak_sgd")
ASSERTION_KINDS = ("reaches_dist", "fewer_calls", "final_gap", "status_ok")


def polyak_subgradient(instance, x0, max_iters, fstar=None, stop_dist=None, oracle=None):
    """Projected subgradient method with the Polyak step ``(f - f*) / |g|^2``.

    Stops on a zero gap or zero subgradient, once ``stop_dist`` is reached
    (if given), or after ``max_iters`` steps.
    """
    if fstar is None:
        gt = instance.ground_truth
        if gt is None or gt.fstar is None:
            raise ValueError("the Polyak step needs a known optimal value")
        fstar = gt.fstar
    if oracle is None:
        oracle = Oracle(instance)
    x = np.array(x0, dtype=float)
    trace = Trace(meta={"algorithm": "polyak_sgd", "fstar": fstar})
    for t in range(max_iters + 1):
        s = oracle(x)
        dist = instance.dist_to_solution(x)
        trace.append(TraceRecord(t, x.copy(), s.fx, dist, None, s.piece, 0.0, "step", oracle.calls), s)
        gap = s.fx - fstar
        g = s.cut.gradient
        g2 = float(g @ g)
        if gap <= 0.0 or g2 == 0.0 or t == max_iters:
            break
        if stop_dist is not None and dist is not None and dist <= stop_dist:
            break
        x = project_region(instance.region, x - (gap / g2) * g)
    trace.oracle_calls = oracle.calls
    return trace


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` is a dotted path."""

    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}{where}: {message}")


@dataclass
class AlgorithmSpec:
    name: str
    label: str
    m: int = 8
    mu: float | None = None
    rho: float | None = None
    eps: float = 1e-6
    perturbation_radius: float = 0.0
    max_iters: int = 1000

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class ExperimentConfig:
    problem: dict
    algorithms: list
    x0: list
    seed: int = 0
    budget: int | None = None
    out_dir: str = "runs"
    prefix: str = "run"
    tol: float = 1e-10
    stop_tol: float = 0.0
    target_dist: float | None = None
    assertions: list = field(default_factory=list)

    @staticmethod
    def from_dict(d, source_text=None):
        def fail(path, msg):
            raise ConfigError(path, msg, _line_of(source_text, path.split(".")[-1].split("[")[0]))

        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        if d.get("schema") != SCHEMA:
            fail("schema", f"expected {SCHEMA!r}, got {d.get('schema')!r}")
        known = {"schema", "name", "problem", "algorithms", "x0", "seed", "budget", "output", "tolerances", "target_dist", "assertions"}
        for key in d:
            if key not in known:
                fail(key, "unknown field")
        prob = d.get("problem")
        if not isinstance(prob, dict) or "generator" not in prob:
            fail("problem.generator", "missing generator name")
        gen = prob["generator"]
        if gen not in GENERATORS:
            fail("problem.generator", f"unknown generator {gen!r}; known: {sorted(GENERATORS)}")
        params = dict(prob.get("params", {}))
        if "seed" in prob:
            params["seed"] = prob["seed"]
        accepted = inspect.signature(GENERATORS[gen]).parameters
        for p in params:
            if p not in accepted:
                fail(f"problem.params.{p}", f"generator {gen!r} takes no parameter {p!r}")
        algs = d.get("algorithms")
        if not isinstance(algs, list) or not algs:
            fail("algorithms", "expected a non-empty list")
        specs = []
        labels = set()
        for i, a in enumerate(algs):
            base = f"algorithms[{i}]"
            if not isinstance(a, dict):
                fail(base, "expected an object")
            name = a.get("name")
            if name not in ALGORITHMS:
                fail(f"{base}.name", f"unknown algorithm {name!r}; known: {list(ALGORITHMS)}")
            extra = set(a) - {"name", "label", "m", "mu", "rho", "eps", "perturbation_radius", "max_iters"}
            if extra:
                fail(f"{base}.{sorted(extra)[0]}", "unknown field")
            spec = AlgorithmSpec(name, a.get("label", name))
            for key in ("m", "max_iters"):
                if key in a:
                    if not isinstance(a[key], int) or a[key] < 1:
                        fail(f"{base}.{key}", "must be a positive integer")
                    setattr(spec, key, a[key])
            for key in ("mu", "rho", "eps"):
                if key in a:
                    if not _is_positive(a[key]):
                        fail(f"{base}.{key}", "must be a positive number")
                    setattr(spec, key, float(a[key]))
            if "perturbation_radius" in a:
                r = a["perturbation_radius"]
                if not isinstance(r, (int, float)) or r < 0:
                    fail(f"{base}.perturbation_radius", "must be a non-negative number")
                spec.perturbation_radius = float(r)
            if spec.name == "apx_bl" and spec.perturbation_radius == 0:
                fail(f"{base}.perturbation_radius", "apx_bl needs a positive perturbation radius")
            if spec.label in labels:
                fail(f"{base}.label", f"duplicate run label {spec.label!r}")
            labels.add(spec.label)
            specs.append(spec)
        if "x0" not in d or not isinstance(d["x0"], list):
            fail("x0", "expected a list of numbers")
        x0 = [float(v) for v in d["x0"]]
        cfg = ExperimentConfig({"generator": gen, "params": params}, specs, x0)
        if "seed" in d:
            if not isinstance(d["seed"], int):
                fail("seed", "must be an integer")
            cfg.seed = d["seed"]
        if d.get("budget") is not None:
            b = d["budget"]
            if isinstance(b, dict):
                b = b.get("max_oracle_calls")
            if not isinstance(b, int) or b < 1:
                fail("budget", "max oracle calls must be a positive integer")
            cfg.budget = b
        out = d.get("output", {})
        cfg.out_dir = out.get("dir", cfg.out_dir)
        cfg.prefix = out.get("prefix", d.get("name", cfg.prefix))
        tols = d.get("tolerances", {})
        for key in ("tol", "stop_tol"):
            if key in tols:
                v = tols[key]
                if not isinstance(v, (int, float)) or v < 0:
                    fail(f"tolerances.{key}", "must be a non-negative number")
                setattr(cfg, key, float(v))
        if d.get("target_dist") is not None:
            if not _is_positive(d["target_dist"]):
                fail("target_dist", "must be a positive number")
            cfg.target_dist = float(d["target_dist"])
        for i, a in enumerate(d.get("assertions", [])):
            if a.get("kind") not in ASSERTION_KINDS:
                fail(f"assertions[{i}].kind", f"unknown assertion {a.get('kind')!r}; known: {list(ASSERTION_KINDS)}")
            cfg.assertions.append(dict(a))
        try:
            inst = cfg.instance()
        except (TypeError, ValueError) as exc:
            fail("problem.params", str(exc))
        if len(x0) != inst.n:
            fail("x0", f"length {len(x0)} does not match dimension {inst.n}")
        return cfg

    def instance(self):
        return build_instance(self.problem["generator"], self.problem["params"])

    def to_json(self):
        return {
            "schema": SCHEMA,
            "problem": self.problem,
            "algorithms": [a.to_json() for a in self.algorithms],
            "x0": self.x0,
            "seed": self.seed,
            "budget": self.budget,
            "output": {"dir": self.out_dir, "prefix": self.prefix},
            "tolerances": {"tol": self.tol, "stop_tol": self.stop_tol},
            "target_dist": self.target_dist,
            "assertions": self.assertions,
        }


def _is_positive(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 and math.isfinite(v)


def _line_of(text, key):
    if not text:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def load_config(path_or_text):
    """Parse a config from a file path or a JSON string."""
    p = Path(path_or_text) if not str(path_or_text).lstrip().startswith("{") else None
    text = p.read_text() if p is not None else str(path_or_text)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, exc.lineno) from None
    return ExperimentConfig.from_dict(d, text)


def config_hash(cfg):
    """SHA-256 of the canonical config; the output location is not part of it."""
    d = cfg.to_json()
    d.pop("output", None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def demo_config(out_dir="runs", seed=0):
    """Bundle-level vs Polyak comparison on the two-dimensional demo."""
    return ExperimentConfig.from_dict(
        {
            "schema": SCHEMA,
            "name": "demo",
            "problem": {"generator": "demo_pws"},
            "algorithms": [{"name": "bl", "m": 3, "max_iters": 100}, {"name": "polyak_sgd", "max_iters": 5000}],
            "x0": [1e-4, 1e-2],
            "seed": seed,
            "output": {"dir": str(out_dir), "prefix": "demo"},
            "target_dist": 1e-8,
            "assertions": [
                {"kind": "reaches_dist", "run": "bl", "dist": 1e-8, "max_calls": 100},
                {"kind": "fewer_calls", "faster": "bl", "slower": "polyak_sgd", "dist": 1e-8},
            ],
        }
    )


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _reference_value(instance):
    gt = instance.ground_truth
    if gt is None:
        return None
    return gt.fstar if gt.fstar is not None else gt.f_lower


def _execute(spec, instance, cfg):
    """Run one algorithm; returns ``(trace, status, message)``."""
    from .adaptive import pf_bl_mu, pf_ippm
    from .gapred import bl_mu
    from .proximal import ippm

    gt = instance.ground_truth
    x0 = np.array(cfg.x0, dtype=float)
    oracle = Oracle(instance, spec.perturbation_radius, cfg.seed, cfg.budget)
    stop_dist = cfg.target_dist
    try:
        if spec.name in ("bl", "apx_bl"):
            if gt is None or gt.fstar is None:
                raise ValueError(f"{spec.name} needs a known optimal value")
            trace = run_bl(instance, spec.m, gt.fstar, x0, spec.perturbation_radius, spec.max_iters, cfg.stop_tol, cfg.seed, cfg.tol, oracle)
        elif spec.name == "polyak_sgd":
            trace = polyak_subgradient(instance, x0, spec.max_iters, None, stop_dist, oracle)
        elif spec.name == "bl_mu":
            mu = spec.mu if spec.mu is not None else (gt.mu if gt else None)
            if mu is None:
                raise ValueError("bl_mu needs mu")
            trace = bl_mu(instance, x0, mu, spec.m, spec.eps, spec.perturbation_radius, cfg.seed, cfg.tol, oracle=oracle).trace
        elif spec.name == "ippm":
            rho = spec.rho if spec.rho is not None else (gt.rho if gt else None)
            if not rho:
                raise ValueError("ippm needs rho")
            trace = ippm(instance, x0, rho, spec.m, spec.eps, spec.perturbation_radius, cfg.seed, cfg.tol, oracle=oracle).trace
        elif spec.name == "pf_bl_mu":
            if spec.mu is None:
                raise ValueError("pf_bl_mu needs an initial guess mu")
            trace = pf_bl_mu(instance, x0, spec.mu, spec.m, spec.eps, cfg.budget, cfg.seed, spec.perturbation_radius, cfg.tol).trace
        else:
            if spec.rho is None:
                raise ValueError("pf_ippm needs an initial guess rho")
            trace = pf_ippm(instance, x0, spec.rho, spec.m, spec.eps, cfg.budget, cfg.seed, spec.perturbation_radius, cfg.tol).trace
        return trace, "ok", ""
    except BudgetExhausted as exc:
        trace = Trace(meta={"algorithm": spec.name})
        if exc.best is not None:
            x, fx = exc.best
            if fx is None:
                fx = instance.value(x)
            trace.append(TraceRecord(0, np.asarray(x, dtype=float), fx, instance.dist_to_solution(x), event="budget_exhausted", oracle_calls=oracle.calls))
        trace.oracle_calls = oracle.calls
        return trace, "budget_exhausted", str(exc)


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def trace_to_jsonl(trace, header, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(_clean(header), sort_keys=True) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(_clean(rec.to_json()), sort_keys=True) + "\n")


def _write_csv(trace, path, reference):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "oracle_calls", "f_gap", "dist", "event"])
        for rec in trace.records:
            gap = "" if reference is None else repr(float(rec.fx) - reference)
            dist = "" if rec.dist_to_xstar is None else repr(float(rec.dist_to_xstar))
            w.writerow([rec.iter, rec.oracle_calls, gap, dist, rec.event])


@dataclass
class RunSummary:
    label: str
    algorithm: str
    status: str
    oracle_calls: int
    final_gap: float | None
    final_dist: float | None
    calls_to_target: int | None = None
    matching: dict | None = None
    restarts: int = 0
    certificates: list = field(default_factory=list)
    message: str = ""

    def to_json(self):
        return _clean(dict(self.__dict__))


def summarize_trace(trace, label, reference=None, target_dist=None, m=None, status="ok", message=""):
    """Per-run statistics, computed from the trace alone."""
    recs = trace.records
    alg = trace.meta.get("algorithm", label)
    if not recs:
        return RunSummary(label, alg, status, trace.oracle_calls, None, None, message=message)
    best = min(recs, key=lambda r: r.fx)
    gap = None if reference is None else float(best.fx) - reference
    dists = [r.dist_to_xstar for r in recs if r.dist_to_xstar is not None]
    final_dist = float(recs[-1].dist_to_xstar) if recs[-1].dist_to_xstar is not None else (min(dists) if dists else None)
    hit = None
    if target_dist is not None:
        hit = next((r.oracle_calls for r in recs if r.dist_to_xstar is not None and r.dist_to_xstar <= target_dist), None)
    matching = None
    pieces = [r.piece for r in recs]
    if alg in ("bl", "apx_bl", "polyak_sgd") and len(pieces) > 1 and all(p is not None for p in pieces):
        st = detect_matching_pairs(pieces, l=m or 1)
        matching = {"kappa_bar": st.kappa_bar, "sigma_bar": st.sigma_bar, "p": st.p, "N": st.N}
    certs = [r.extra["certificate"] for r in recs if r.extra and "certificate" in r.extra]
    certs += [{k: r.extra[k] for k in ("iota", "nu", "nu_f") if k in r.extra} for r in recs if r.event == "certificate"]
    restarts = sum(1 for r in recs if r.event == "restart")
    calls = max(trace.oracle_calls, recs[-1].oracle_calls)
    return RunSummary(label, alg, status, calls, gap, final_dist, hit, matching, restarts, certs, message)


@dataclass
class SummaryReport:
    config_hash: str
    runs: list
    aggregates: dict
    assertions: list = field(default_factory=list)
    paths: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(a["passed"] for a in self.assertions)

    def run(self, label):
        return next(r for r in self.runs if r.label == label)

    def to_json(self):
        return {
            "config_hash": self.config_hash,
            "runs": [r.to_json() for r in self.runs],
            "aggregates": _clean(self.aggregates),
            "assertions": _clean(self.assertions),
        }


def _aggregate(runs):
    by_alg = {}
    for r in runs:
        by_alg.setdefault(r.algorithm, []).append(r)
    out = {}
    for alg, rs in sorted(by_alg.items()):
        calls = [r.oracle_calls for r in rs]
        gaps = [r.final_gap for r in rs if r.final_gap is not None]
        out[alg] = {
            "runs": len(rs),
            "median_oracle_calls": statistics.median(calls),
            "max_final_gap": max(gaps) if gaps else None,
            "total_restarts": sum(r.restarts for r in rs),
        }
    return out


def _check(assertion, report):
    kind = assertion["kind"]
    try:
        if kind == "status_ok":
            ok = all(r.status == "ok" for r in report.runs)
            return ok, "all runs ok" if ok else "some run did not finish"
        if kind == "reaches_dist":
            r = report.run(assertion["run"])
            ok = r.calls_to_target is not None and r.calls_to_target <= assertion.get("max_calls", math.inf)
            return ok, f"{r.label} reached the target after {r.calls_to_target} calls"
        if kind == "fewer_calls":
            a, b = report.run(assertion["faster"]), report.run(assertion["slower"])
            ok = a.calls_to_target is not None and (b.calls_to_target is None or a.calls_to_target < b.calls_to_target)
            return ok, f"{a.label}: {a.calls_to_target} calls, {b.label}: {b.calls_to_target} calls"
        r = report.run(assertion["run"])
        ok = r.final_gap is not None and r.final_gap <= assertion["max"]
        return ok, f"{r.label} final gap {r.final_gap}"
    except StopIteration:
        return False, "unknown run label"


def run_experiment(cfg, out_dir=None, seed=None):
    """Run every algorithm of ``cfg`` and write traces, CSVs and a summary.

    Output is a pure function of the config (and ``seed`` override): no
    timestamps or wall-clock figures are written.
    """
    if isinstance(cfg, (str, Path)):
        cfg = load_config(cfg)
    elif isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    if seed is not None:
        cfg.seed = int(seed)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    instance = cfg.instance()
    reference = _reference_value(instance)
    runs = []
    paths = {}
    for spec in cfg.algorithms:
        trace, status, msg = _execute(spec, instance, cfg)
        header = {"type": "header", "config_hash": h, "label": spec.label, "algorithm": spec.name, "status": status, "meta": trace.meta}
        stem = f"{cfg.prefix}_{spec.label}"
        trace_to_jsonl(trace, header, out / f"{stem}.jsonl")
        _write_csv(trace, out / f"{stem}.csv", reference)
        paths[spec.label] = str(out / f"{stem}.jsonl")
        runs.append(summarize_trace(trace, spec.label, reference, cfg.target_dist, spec.m, status, msg))
    report = SummaryReport(h, runs, _aggregate(runs), paths=paths)
    for a in cfg.assertions:
        ok, detail = _check(a, report)
        report.assertions.append({**a, "passed": ok, "detail": detail})
    (out / f"{cfg.prefix}_summary.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return report
