"""Command-line front end.

Every analysis is described by a YAML manifest::

    command: evaluate
    inputs:
      measure: data/gauss.yaml        # path (relative to the manifest) or inline document
    params:
      points: [[0.0], [1.0]]
      times: [0.5]
    output: out/eval.csv
    config: {rel_tol: 1.0e-10}
    seed: 0

``heatgrowth run MANIFEST`` executes it.  Each command is also available as
a subcommand taking ``--measure`` plus ``--set key=value`` pairs (values are
parsed as YAML), which builds the same manifest in memory.

Exit codes: 0 success, 2 invalid input, 3 quadrature failure, 4 evaluation
past the maximal time.  Errors are reported as a JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import quadrature as _Q
from .blowup import build_convex_regular_data, limit_profile_at_T
from .errors import AtMaximalTime, BeyondMaximalTime, HeatGrowthError, QuadratureFailure
from .kernel import write_batch_csv
from .longtime import (
    build_oscillating_data,
    classify_longtime,
    rescaling_residual,
    shadow_sweep,
    trace_at_origin,
)
from .measures import btv_norm, estimate_growth_index, growth_index, meps_norm, uniform_norm
from .quadrature import QuadratureConfig
from .serialization import convex_spec_from_doc, load_measure, measure_from_doc
from .trace import build_trace_solution, write_trace_csv

SCHEMA_ID = "hg-run-v1"
COMMANDS = ("evaluate", "norms", "blowup-map", "oscillate", "trace", "trace-solve",
            "classify", "shadow", "rescale")
EXIT_OK, EXIT_INVALID, EXIT_QUAD, EXIT_TIME = 0, 2, 3, 4


class ManifestError(HeatGrowthError, ValueError):
    """The manifest itself is malformed."""


def _config(doc) -> QuadratureConfig:
    """QuadratureConfig from a mapping; YAML reads 1e-10 as a string, so cast by field type."""
    if not isinstance(doc, dict):
        raise ManifestError("config must be a mapping")
    types = {f.name: (int if f.type in (int, "int") else float) for f in fields(QuadratureConfig)}
    kw = {}
    for k, v in doc.items():
        if k not in types:
            raise ManifestError(f"config: unknown key {k!r}")
        try:
            kw[k] = types[k](v)
        except (TypeError, ValueError):
            raise ManifestError(f"config: {k} must be a number, got {v!r}") from None
    return QuadratureConfig(**kw)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


class _Ctx:
    def __init__(self, manifest: dict, base: Path):
        self.m = manifest
        self.base = base
        self.params = manifest.get("params") or {}
        self.inputs = manifest.get("inputs") or {}
        self.rng = np.random.default_rng(int(manifest.get("seed", 0)))
        self.cfg = _config(manifest.get("config") or {})
        self.nodes = {}
        self.result = {}

    def measure(self, key="measure"):
        src = self.inputs.get(key)
        if src is None:
            raise ManifestError(f"inputs.{key} is required")
        if isinstance(src, str):
            return load_measure(self.base / src)
        return measure_from_doc(src, self.base)

    def p(self, key, default=...):
        if key in self.params:
            return self.params[key]
        if default is ...:
            raise ManifestError(f"params.{key} is required")
        return default

    def points(self, key, N):
        spec = self.p(key)
        if isinstance(spec, dict) and "grid" in spec:
            g = spec["grid"]
            lo = np.broadcast_to(np.asarray(g["lo"], dtype=float), (N,))
            hi = np.broadcast_to(np.asarray(g["hi"], dtype=float), (N,))
            n = np.broadcast_to(np.asarray(g["n"], dtype=int), (N,))
            axes = [np.linspace(a, b, k) for a, b, k in zip(lo, hi, n)]
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, N)
        if isinstance(spec, dict) and "random" in spec:
            r = spec["random"]
            return self.rng.uniform(float(r.get("lo", -1)), float(r.get("hi", 1)), (int(r["n"]), N))
        arr = np.asarray(spec, dtype=float)
        return arr.reshape(-1, N)

    def tally(self, op):
        self.nodes[op] = self.nodes.get(op, 0) + _Q.node_count()
        _Q.reset_node_count()


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
    return buf.getvalue()


# --- commands --------------------------------------------------------------

def _cmd_evaluate(ctx):
    mu = ctx.measure()
    pts = ctx.points("points", mu.dimension)
    times = np.asarray(ctx.p("times"), dtype=float).ravel()
    allp = np.repeat(pts, len(times), axis=0)
    allt = np.tile(times, len(pts))
    text = write_batch_csv(mu, allp, allt, cfg=ctx.cfg)
    ctx.tally("evaluate")
    ctx.result["rows"] = len(allp)
    return text


def _cmd_norms(ctx):
    mu = ctx.measure()
    rows = []
    gi = growth_index(mu)
    ctx.result["growth_index"] = {"eps0": gi.eps0, "attained": gi.attained}
    rows.append(("eps0", "", gi.eps0))
    for eps in ctx.p("eps", []):
        rows.append(("meps", _fmt(eps), meps_norm(mu, float(eps), ctx.cfg)))
        ctx.tally("meps_norm")
    if ctx.p("btv", True):
        rows.append(("btv", "", btv_norm(mu, ctx.cfg)))
        ctx.tally("btv_norm")
    if ctx.p("uniform", True):
        rows.append(("uniform", "", uniform_norm(mu, ctx.cfg)))
        ctx.tally("uniform_norm")
    k_max = ctx.p("k_max", None)
    if k_max is not None:
        rows.append(("eps0_estimate", _fmt(int(k_max)), estimate_growth_index(mu, int(k_max), ctx.cfg).eps0))
        ctx.tally("estimate_growth_index")
    return _csv(["quantity", "parameter", "value"], rows)


def _cmd_blowup_map(ctx):
    if "convex" in ctx.inputs:
        src = ctx.inputs["convex"]
        doc = yaml.safe_load((ctx.base / src).read_text()) if isinstance(src, str) else src
        spec = convex_spec_from_doc(doc)
        mu = build_convex_regular_data(spec, float(ctx.p("A")))
    else:
        mu = ctx.measure()
    N = mu.dimension
    pts = ctx.points("probes", N)
    prof = limit_profile_at_T(mu, pts, ctx.cfg)
    ctx.tally("classify_point")
    rows = []
    counts = {}
    for p, c in prof:
        counts[c.verdict] = counts.get(c.verdict, 0) + 1
        lim = "" if c.limit is None else _fmt(c.limit)
        rows.append([_fmt(v) for v in p] + [c.verdict, lim, str(c.diagnostics.get("shells_used", 0))])
    ctx.result["verdicts"] = counts
    return _csv([f"x_{i + 1}" for i in range(N)] + ["verdict", "limit_or_blank", "shells_used"], rows)


def _cmd_oscillate(ctx):
    b = [float(v) for v in ctx.p("targets")]
    N = int(ctx.p("dimension", 1))
    mu, spec = build_oscillating_data(b, N)
    tr = trace_at_origin(mu, spec.t, ctx.cfg)
    ctx.tally("trace_at_origin")
    rows = []
    inv = spec.all_hold()
    ok_all = inv
    for i, (bk, r, lam, t, u, e) in enumerate(zip(spec.b, spec.r, spec.lam, spec.t, tr, spec.error_bounds)):
        ok = abs(u - bk) <= e
        ok_all &= ok
        rows.append((i + 1, bk, r, lam, t, u, e, ok))
    ctx.result["invariants_hold"] = inv
    ctx.result["all_pass"] = bool(ok_all)
    return _csv(["k", "b_k", "r_k", "lambda_k", "t_k", "u0tk", "bound", "pass"], rows)


def _cmd_trace(ctx):
    mu = ctx.measure()
    times = [float(t) for t in ctx.p("times")]
    vals = trace_at_origin(mu, times, ctx.cfg)
    ctx.tally("trace_at_origin")
    return _csv(["t", "u0t"], zip(times, vals))


def _cmd_trace_solve(ctx):
    s = build_trace_solution(ctx.p("coeffs"), float(ctx.p("C")), float(ctx.p("tau")),
                             float(ctx.p("T", math.inf)), int(ctx.p("truncation", 64)),
                             bool(ctx.p("periodic", False)))
    buf = io.StringIO()
    write_trace_csv(s, [float(x) for x in ctx.p("xs")], [float(t) for t in ctx.p("ts")], buf, ctx.cfg)
    return buf.getvalue()


def _cmd_classify(ctx):
    mu = ctx.measure()
    v = classify_longtime(mu, int(ctx.p("k_max", 10)), ctx.cfg,
                          refine_with_trace=bool(ctx.p("refine_with_trace", False)))
    ctx.tally("classify_longtime")
    ctx.result["verdict"] = v.kind
    ctx.result["L"] = v.L
    ev = v.evidence
    if "radii" not in ev:
        ctx.result["reason"] = ev.get("reason")
        return _csv(["k", "R", "annulus_average", "ball_average"], [])
    rows = [(k + 1, R, a, b) for k, (R, a, b) in
            enumerate(zip(ev["radii"], ev["annulus_averages"], ev["ball_averages"]))]
    return _csv(["k", "R", "annulus_average", "ball_average"], rows)


def _cmd_shadow(ctx):
    v0 = ctx.measure("v0")
    if "osc" in ctx.inputs:
        osc = ctx.measure("osc")
    else:
        osc, _ = build_oscillating_data([float(v) for v in ctx.p("targets")], v0.dimension)
    xs = ctx.points("probes", v0.dimension)
    ts = [float(t) for t in ctx.p("times")]
    delta = float(ctx.p("delta"))
    R, d, hist = shadow_sweep(v0, osc, xs, ts, delta, float(ctx.p("R0", 1.0)),
                              float(ctx.p("R_max", 1024.0)), ctx.cfg)
    ctx.tally("shadow_sweep")
    ctx.result["R"] = R
    ctx.result["sup_diff"] = d
    return _csv(["R", "sup_diff", "pass"], [(r, dd, dd <= delta) for r, dd in hist])


def _cmd_rescale(ctx):
    mu = ctx.measure()
    pts = ctx.points("probes", mu.dimension)
    rows = []
    for lam in ctx.p("lambdas"):
        rows.append((float(lam), rescaling_residual(mu, float(lam), pts, ctx.cfg)))
    ctx.tally("rescaling_residual")
    return _csv(["lambda", "residual"], rows)


_DISPATCH = {
    "evaluate": _cmd_evaluate,
    "norms": _cmd_norms,
    "blowup-map": _cmd_blowup_map,
    "oscillate": _cmd_oscillate,
    "trace": _cmd_trace,
    "trace-solve": _cmd_trace_solve,
    "classify": _cmd_classify,
    "shadow": _cmd_shadow,
    "rescale": _cmd_rescale,
}


def _versions():
    from . import __version__
    return {"heatgrowth": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _json_safe(v.item())
    return v


def run(manifest: dict, base_dir=".", stdout=None) -> int:
    """Execute one manifest; returns the exit status."""
    stdout = stdout or sys.stdout
    base = Path(base_dir)
    t0 = time.perf_counter()
    try:
        if not isinstance(manifest, dict):
            raise ManifestError("manifest must be a mapping")
        cmd = manifest.get("command")
        if cmd not in _DISPATCH:
            raise ManifestError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
        ctx = _Ctx(manifest, base)
        _Q.reset_node_count()
        text = _DISPATCH[cmd](ctx)
    except (BeyondMaximalTime, AtMaximalTime) as exc:
        return _fail(exc, EXIT_TIME)
    except QuadratureFailure as exc:
        return _fail(exc, EXIT_QUAD)
    except (HeatGrowthError, ValueError, KeyError, TypeError, OSError, yaml.YAMLError) as exc:
        return _fail(exc, EXIT_INVALID)

    out = manifest.get("output")
    outputs = []
    if out:
        path = base / out
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(text.encode("utf-8"))
        outputs.append(str(out))
    else:
        stdout.write(text)
    summary = {
        "schema": SCHEMA_ID,
        "command": cmd,
        "status": "ok",
        "inputs": _json_safe(manifest),
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        "quadrature_nodes": ctx.nodes,
        "outputs": outputs,
        "result": _json_safe(ctx.result),
    }
    spath = manifest.get("summary") or (f"{out}.json" if out else None)
    if spath:
        p = base / spath
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _fail(exc, code) -> int:
    err = {"schema": SCHEMA_ID, "status": "error", "exit_code": code,
           "error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def _parser():
    ap = argparse.ArgumentParser(prog="heatgrowth",
                                 description="Heat-equation solutions for rapidly growing data.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="execute a YAML manifest")
    r.add_argument("manifest")
    for c in COMMANDS:
        p = sub.add_parser(c, help=f"run '{c}' with inline parameters")
        p.add_argument("--measure", help="measure document (YAML)")
        p.add_argument("--input", action="append", default=[], metavar="NAME=PATH",
                       help="extra named inputs (v0, osc, convex)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="parameter, value parsed as YAML")
        p.add_argument("--config", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("-o", "--output")
        p.add_argument("--summary")
        p.add_argument("--seed", type=int, default=0)
    return ap


def _kv(items, what):
    out = {}
    for it in items:
        if "=" not in it:
            raise ManifestError(f"{what} entries must look like KEY=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        out[k] = yaml.safe_load(v)
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "run":
        path = Path(args.manifest)
        try:
            manifest = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            return _fail(exc, EXIT_INVALID)
        return run(manifest, path.parent)
    try:
        inputs = {k: str(v) for k, v in _kv(args.input, "--input").items()}
        if args.measure:
            inputs["measure"] = args.measure
        manifest = {"command": args.cmd, "inputs": inputs, "params": _kv(args.set, "--set"),
                    "config": _kv(args.config, "--config"), "seed": args.seed}
    except ManifestError as exc:
        return _fail(exc, EXIT_INVALID)
    if args.output:
        manifest["output"] = args.output
    if args.summary:
        manifest["summary"] = args.summary
    return run(manifest, ".")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
