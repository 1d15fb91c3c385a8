"""Command-line runner.

Every capability is a subcommand with file-based, reproducible output:
each run writes its artifacts plus a ``manifest.json`` recording the
resolved parameters, package/library versions, and seed.  Identical
invocations produce byte-identical files.  Exit status is nonzero
exactly when an assertion-level check fails (a certified-sign
violation, a non-converged integral at the requested tolerance, an
iteration-budget overrun); informational warnings leave status 0.

Numbers are printed with 17 significant digits, JSON objects use
sorted keys, CSV is UTF-8 with a header row and LF line endings.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .operators import Annulus, Ball, Box, directional_operator, \
    isaacs_operator
from .profiles import DistancePower, gaussian, radial_power, supersolution
from .quadrature import DomainError, NonConverged, integrate_adaptive, \
    integrate_singular
from .regularity import BarrierViolation, barrier_check, holder_fit, \
    liouville_experiment
from .solver import CFLViolation, MaxIterations, SolveConfig, solve
from .thresholds import BracketFailure, NoRoot, build_threshold_report, \
    eval_g_right_derivative_at_zero, eval_h, eval_l, \
    eval_supersolution_constant, find_s0

__all__ = ["main"]


class ConfigError(ValueError):
    """Missing or contradictory configuration keys."""


# ----------------------------------------------------------------------
# deterministic formatting

def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return x


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(format(float(obj), ".17g"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonify(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_manifest(out, args, extra=None):
    manifest = {
        "subcommand": args.command,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "seed": getattr(args, "seed", None),
        "parameters": {k: _jsonify(v) for k, v in sorted(vars(args).items())
                       if k not in ("command", "func", "config")
                       and not callable(v)},
    }
    if extra:
        manifest.update(extra)
    _write_json(os.path.join(out, "manifest.json"), manifest)


def _outdir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# argument plumbing

def _parse_domain(text):
    """ball:cx,cy:r | box:lo1,lo2:hi1,hi2 | annulus:cx,cy:rin:rout."""
    parts = text.split(":")
    kind = parts[0].lower()
    try:
        if kind == "ball" and len(parts) == 3:
            center = [float(v) for v in parts[1].split(",")]
            return Ball(center, float(parts[2]))
        if kind == "box" and len(parts) == 3:
            lo = [float(v) for v in parts[1].split(",")]
            hi = [float(v) for v in parts[2].split(",")]
            return Box(lo, hi)
        if kind == "annulus" and len(parts) == 4:
            center = [float(v) for v in parts[1].split(",")]
            return Annulus(center, float(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise ConfigError(f"bad domain spec {text!r}: {exc}") from exc
    raise ConfigError(
        f"bad domain spec {text!r}; expected ball:cx,cy:r or "
        "box:lo1,lo2:hi1,hi2 or annulus:cx,cy:rin:rout")


def _make_profile(args, domain=None):
    name = args.profile
    if name == "gaussian":
        return gaussian(args.dimension)
    if name == "radial-power":
        if args.beta is None:
            raise ConfigError("radial-power requires --beta")
        return radial_power(args.dimension, args.beta)
    if name == "supersolution":
        if args.eps is None:
            raise ConfigError("supersolution requires --eps")
        return supersolution(args.dimension, args.eps)
    if name == "distance-power":
        if domain is None or args.alpha is None:
            raise ConfigError("distance-power requires --domain and --alpha")
        return DistancePower(domain, args.alpha)
    raise ConfigError(f"unknown profile {name!r}")


def _apply_config_file(args):
    """Config file supplies defaults; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, val in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, val)
    return args


_PRESETS = {
    "disk-f-minus-one": {
        "domain": "ball:0,0:1", "f_const": -1.0, "h": 1.0 / 64.0,
        "directions": 8, "tol": 1e-3,
    },
    "interval-f-minus-one": {
        "domain": "ball:0:1", "f_const": -1.0, "h": 1.0 / 256.0,
        "directions": 1, "tol": 1e-8,
    },
}


# ----------------------------------------------------------------------
# subcommands

def _cmd_thresholds(args):
    out = _outdir(args)
    cs = [float(v) for v in str(args.c).split(",")] if args.c else [2.0]
    s = args.s if args.s is not None else 0.75
    reports = [build_threshold_report(c, s) for c in cs]
    from .thresholds import ThresholdReport
    _write_csv(os.path.join(out, "thresholds.csv"),
               ThresholdReport.CSV_COLUMNS,
               [r.csv_row() for r in reports])
    _write_json(os.path.join(out, "thresholds.json"),
                {"reports": [r.to_dict() for r in reports]})
    _write_manifest(out, args)
    for r in reports:
        print(f"c={_fmt(r.c)} s0={_fmt(r.s0.value)} "
              f"bracket=[{_fmt(r.s0.bracket[0])},{_fmt(r.s0.bracket[1])}]")
    return 0


def _cmd_operator_eval(args):
    out = _outdir(args)
    if args.s is None:
        raise ConfigError("operator-eval requires --s")
    domain = _parse_domain(args.domain) if args.domain else None
    prof = _make_profile(args, domain)
    points = [np.array([float(v) for v in chunk.split(",")])
              for chunk in args.x] if args.x else [np.zeros(args.dimension)]
    rows = []
    status = 0
    for x in points:
        if len(x) != args.dimension:
            raise ConfigError(f"point {x} has wrong dimension")
        try:
            ev = isaacs_operator(prof, x, args.s, directions=args.directions,
                                 normalized=args.normalized)
        except NonConverged as exc:
            print(f"WARNING: not converged at x={x}: {exc}", file=sys.stderr)
            status = 1
            continue
        rows.append(tuple(x) + (ev.value,)
                    + tuple(ev.minimizing_direction)
                    + tuple(ev.maximizing_direction)
                    + (ev.truncation_error, ev.quadrature_error))
    N = args.dimension
    header = ([f"x{k+1}" for k in range(N)] + ["value"]
              + [f"min_dir{k+1}" for k in range(N)]
              + [f"max_dir{k+1}" for k in range(N)]
              + ["truncation_error", "quadrature_error"])
    _write_csv(os.path.join(out, "operator_eval.csv"), header, rows)
    _write_manifest(out, args)
    for row in rows:
        print(" ".join(str(_fmt(v)) for v in row))
    return status


def _cmd_solve(args):
    out = _outdir(args)
    if args.preset:
        preset = _PRESETS.get(args.preset)
        if preset is None:
            raise ConfigError(f"unknown preset {args.preset!r}; "
                              f"choose from {sorted(_PRESETS)}")
        for key, val in preset.items():
            if getattr(args, key, None) is None:
                setattr(args, key, val)
    if args.s is None or args.domain is None or args.h is None:
        raise ConfigError("solve requires --s, --domain, --h (or a preset)")
    domain = _parse_domain(args.domain)
    f = args.f_const if args.f_const is not None else None
    cfg = SolveConfig(s=args.s, domain=domain, h=args.h,
                      directions=args.directions or 16,
                      dt=args.dt, tol=args.tol or 1e-6,
                      max_iter=args.max_iter or 200000, f=f)
    status = 0
    try:
        report = solve(cfg)
    except MaxIterations as exc:
        print(f"WARNING: iteration budget exhausted: {exc}", file=sys.stderr)
        report = exc.report
        status = 1
    gf = report.solution
    nodes = gf.node_coordinates().reshape(-1, domain.dimension)
    vals = gf.values.reshape(-1)
    N = domain.dimension
    _write_csv(os.path.join(out, "solution.csv"),
               [f"x{k+1}" for k in range(N)] + ["value"],
               [tuple(p) + (v,) for p, v in zip(nodes, vals)])
    _write_json(os.path.join(out, "solve_report.json"), {
        "residual": report.residual,
        "iterations": report.iterations,
        "converged": report.converged,
        "history": list(report.history),
        "s": args.s, "h": args.h, "tol": cfg.tol,
        "directions": cfg.directions,
    })
    _write_manifest(out, args)
    print(f"residual={_fmt(report.residual)} "
          f"iterations={report.iterations} converged={report.converged}")
    return status


def _cmd_barrier_check(args):
    out = _outdir(args)
    if args.s is None or args.alpha is None:
        raise ConfigError("barrier-check requires --s and --alpha")
    domain = _parse_domain(args.domain or "ball:0,0:1")
    status = 0
    try:
        rep = barrier_check(domain, args.s, args.alpha,
                            mu=args.mu or 0.1, spacing=args.h or 1.0 / 64.0,
                            directions=args.directions or 16)
        body = {"m_hat": rep.m_hat, "mu": rep.mu, "alpha": rep.alpha,
                "s": rep.s, "violated": False,
                "worst_point": list(rep.worst_point)}
        rows = [tuple(p) + (v,) for p, v in zip(rep.points, rep.products)]
        print(f"m_hat={_fmt(rep.m_hat)} points={len(rep.points)}")
    except BarrierViolation as exc:
        body = {"violated": True, "message": str(exc)}
        rows = []
        print(f"VIOLATION: {exc}", file=sys.stderr)
        status = 1
    N = domain.dimension
    _write_csv(os.path.join(out, "barrier_products.csv"),
               [f"x{k+1}" for k in range(N)] + ["product"], rows)
    _write_json(os.path.join(out, "barrier_report.json"), body)
    _write_manifest(out, args)
    return status


def _cmd_holder_fit(args):
    out = _outdir(args)
    region = _parse_domain(args.domain or "ball:0,0:0.5")
    if args.grid_csv:
        u = _load_grid(args.grid_csv, region)
    else:
        u = _make_profile(args, region)
    fit = holder_fit(u, region, seed=args.seed or 0)
    _write_csv(os.path.join(out, "holder_scales.csv"),
               ["scale", "amplitude"],
               list(zip(fit.scales, fit.amplitudes)))
    _write_json(os.path.join(out, "holder_fit.json"), {
        "alpha_hat": fit.alpha_hat, "seminorm_hat": fit.seminorm_hat,
        "residual": fit.residual, "degenerate": fit.degenerate,
    })
    _write_manifest(out, args)
    print(f"alpha_hat={_fmt(fit.alpha_hat)} "
          f"seminorm_hat={_fmt(fit.seminorm_hat)}")
    return 0


def _load_grid(path, domain):
    """Rebuild a GridFunction from a solve-output CSV."""
    from .operators import GridFunction
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    N = len(header) - 1
    coords, vals = data[:, :N], data[:, N]
    # infer spacing from the most common positive coordinate gap
    gaps = np.diff(np.unique(coords[:, 0]))
    h = float(np.min(gaps[gaps > 1e-14]))
    gf = GridFunction(domain, h)
    nodes = gf.node_coordinates().reshape(-1, N)
    lookup = {tuple(np.round(p / h).astype(int)): v
              for p, v in zip(coords, vals)}
    flat = np.zeros(len(nodes))
    for i, p in enumerate(nodes):
        flat[i] = lookup.get(tuple(np.round(p / h).astype(int)), 0.0)
    gf.values = flat.reshape(gf.values.shape)
    return gf


def _cmd_liouville(args):
    out = _outdir(args)
    if args.s is None:
        raise ConfigError("liouville requires --s")
    radii = ([float(v) for v in args.radii.split(",")]
             if args.radii else (1.0, 2.0, 4.0, 8.0))
    table, exponent = liouville_experiment(
        args.s, radii=radii, tol=args.tol or 2e-3,
        directions=args.directions or 8, seed=args.seed or 0)
    _write_csv(os.path.join(out, "liouville.csv"),
               ["R", "seminorm"], table)
    _write_json(os.path.join(out, "liouville.json"),
                {"table": [list(t) for t in table],
                 "decay_exponent": exponent})
    _write_manifest(out, args)
    for R, sem in table:
        print(f"R={_fmt(R)} seminorm={_fmt(sem)}")
    print(f"decay_exponent={_fmt(exponent)}")
    return 0


def _cmd_selftest(args):
    """Closed-form checks runnable with no external data."""
    out = _outdir(args)
    import math
    checks = []

    def check(name, got, want, tol):
        ok = abs(got - want) <= tol
        checks.append((name, got, want, ok))
        print(f"{'PASS' if ok else 'FAIL'} {name}: "
              f"got {_fmt(got)} want {_fmt(want)}")

    # quadrature closed forms
    v = integrate_adaptive(lambda t: np.exp(-t), 0.0, 50.0).value
    check("integral exp(-t) on (0,50)", v, 1.0 - math.exp(-50.0), 1e-12)
    v = integrate_singular(lambda t: np.ones_like(t), 0.0, 1.0, 0.5).value
    check("integral t^-0.5 on (0,1)", v, 2.0, 1e-10)
    # log-kernel closed forms
    c = 2.0
    check("h_c at s=1", eval_h(c, 1.0),
          ((c - 1.0) / c) * math.log(c - 1.0) - math.log(c), 1e-10)
    rc = math.sqrt(c)
    check("h_c at s=1/2", eval_h(c, 0.5),
          2.0 * (math.pi + ((rc - 1.0) / rc) * math.log(rc - 1.0)
                 - ((rc + 1.0) / rc) * math.log(rc + 1.0)), 1e-9)
    # sign structure of l
    check("sign l(alpha) at alpha=s", eval_l(0.75, 0.75), 0.0, 1e-8)
    checks.append(("l below s negative", eval_l(0.75, 0.4), None,
                   eval_l(0.75, 0.4) < 0.0))
    checks.append(("l above s positive", eval_l(0.75, 0.9), None,
                   eval_l(0.75, 0.9) > 0.0))
    # s0 certificate
    r = find_s0(2.0)
    checks.append(("s0(2) bracket signs", r.value, None,
                   r.f_lo > 0.0 > r.f_hi and 0.5 < r.value < 1.0))
    print(f"{'PASS' if checks[-1][3] else 'FAIL'} s0(2) certificate: "
          f"value {_fmt(r.value)}")
    # slope of g at the left endpoint
    check("g_c'(0+) = h_{c^2}/2", eval_g_right_derivative_at_zero(1.3, 0.8),
          0.5 * eval_h(1.3 ** 2, 0.8), 1e-8)
    # supersolution constant: negative below its eps threshold, positive above
    c_lo = eval_supersolution_constant(0.8, 0.01)
    c_hi = eval_supersolution_constant(0.8, 0.5)
    checks.append(("c(0.01; s=0.8) < 0", c_lo, None, c_lo < 0.0))
    checks.append(("c(0.5; s=0.8) > 0", c_hi, None, c_hi > 0.0))
    print(f"{'PASS' if c_lo < 0 else 'FAIL'} c(0.01; s=0.8) negative: "
          f"{_fmt(c_lo)}")
    print(f"{'PASS' if c_hi > 0 else 'FAIL'} c(0.5; s=0.8) positive: "
          f"{_fmt(c_hi)}")

    ok = all(c[3] for c in checks)
    _write_json(os.path.join(out, "selftest.json"), {
        "checks": [{"name": n, "value": g, "target": w, "pass": bool(p)}
                   for n, g, w, p in checks],
        "all_pass": bool(ok),
    })
    _write_manifest(out, args)
    print("selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


# ----------------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(
        prog="nlisaacs",
        description="Numerical toolkit for the degenerate nonlocal "
                    "min-max (Isaacs-form) operator.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--c", type=str, default=None,
                       help="parameter c, or comma list for a sweep")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--domain", type=str, default=None,
                       help="ball:cx,cy:r | box:lo1,lo2:hi1,hi2 | "
                            "annulus:cx,cy:rin:rout")
        p.add_argument("--h", type=float, default=None)
        p.add_argument("--directions", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--preset", type=str, default=None)
        p.add_argument("--config", type=str, default=None,
                       help="JSON file of defaults; flags override")

    p = sub.add_parser("thresholds", help="s0 / alpha* / eps thresholds")
    common(p)
    p.set_defaults(func=_cmd_thresholds)

    p = sub.add_parser("operator-eval", help="pointwise operator values")
    common(p)
    p.add_argument("--profile", default="gaussian",
                   choices=["gaussian", "radial-power", "distance-power",
                            "supersolution"])
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--x", action="append", default=None,
                   help="evaluation point, comma-separated (repeatable)")
    p.add_argument("--normalized", action="store_true")
    p.set_defaults(func=_cmd_operator_eval)

    p = sub.add_parser("solve", help="Dirichlet problem on a grid")
    common(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--f-const", type=float, default=None,
                   help="constant right-hand side")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("barrier-check", help="boundary-strip products")
    common(p)
    p.add_argument("--mu", type=float, default=None)
    p.set_defaults(func=_cmd_barrier_check)

    p = sub.add_parser("holder-fit", help="dyadic-scale exponent fit")
    common(p)
    p.add_argument("--profile", default="radial-power",
                   choices=["gaussian", "radial-power", "distance-power",
                            "supersolution"])
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--grid-csv", type=str, default=None,
                   help="solve-output CSV to fit instead of a profile")
    p.set_defaults(func=_cmd_holder_fit)

    p = sub.add_parser("liouville", help="growing-ball rescaling study")
    common(p)
    p.add_argument("--radii", type=str, default=None,
                   help="comma list of ball radii")
    p.set_defaults(func=_cmd_liouville)

    p = sub.add_parser("selftest", help="closed-form example suite")
    common(p)
    p.set_defaults(func=_cmd_selftest)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except (ConfigError, DomainError, NoRoot, BracketFailure,
            CFLViolation, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConverged as exc:
        print(f"error: integral did not converge: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
