"""Command-line front end: analyses, distances, fits and verification suites.

Every command writes one report (CSV or JSON) to --output or stdout and
exits nonzero iff an asserted row fails.  Invalid input exits with status 2
and a message naming the offending field.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigParse, GaussRegError, MomentDiverged, UnknownMap
from .gaussian_space import SampleBatch
from .harness.checks import VACUITY_LEVEL, BoundCheck, report_row
from .harness.identities import adjugate_check
from .harness.runner import Context, batch_for, default_threads
from .harness.scaling import degeneracy_values
from .harness.sequences import sequence_demo, sequences
from .harness.suites import SUITE_NAMES, run_suite
from .measures import DENSITIES, EmpiricalMeasure, get_density, kantorovich_norm, kr_norm, pushforward, tv_distance
from .report import Report
from .smooth_maps import CATALOG, MapSpec, resolve_map, sobolev_norm
from .smoothness import (besov_alpha, besov_fit, geometric_grid, negative_moment, sigma_estimate, sigma_lower_converged,
                         sigma_upper, small_ball, u_gamma)

MIN_N = 1000
COMMANDS = ("analyze-map", "distance", "sigma", "besov", "verify", "demo-sequence", "list-catalog")


@dataclass
class RunConfig:
    command: str
    seed: int = 1
    count: int = 100_000
    output: str | None = None
    fmt: str = "csv"
    options: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# argument parsing


def parse_count(text: str, name: str = "--n") -> int:
    try:
        x = float(text)
    except ValueError:
        raise ConfigParse(f"{name}: expected a number, got {text!r}") from None
    if not math.isfinite(x) or x != int(x):
        raise ConfigParse(f"{name}: expected an integer sample count, got {text!r}")
    if x < MIN_N:
        raise ConfigParse(f"{name}: Monte Carlo commands need at least {MIN_N} samples, got {int(x)}")
    return int(x)


def parse_grid(text: str, name: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigParse(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ConfigParse(f"{name}: values must be positive and finite, got {text!r}")
    return vals


def _common(p: argparse.ArgumentParser, n_default: str, mc: bool = True) -> None:
    if mc:
        p.add_argument("--n", default=n_default, help="Monte Carlo sample count N (at least 1e3)")
    p.add_argument("--seed", type=int, default=1, help="seed of the Philox streams")
    p.add_argument("--output", default="-", help="report path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="gaussreg", formatter_class=fmt,
                                     description="Regularity of Gaussian pushforward laws: distances, smoothness "
                                                 "functionals and numerical checks of the bounds.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("analyze-map", formatter_class=fmt, help="Sobolev norm, u_gamma, small balls of one map")
    p.add_argument("--map", required=True, help="catalog name or path to a JSON polynomial map")
    p.add_argument("--p", type=float, default=2.0, help="integrability exponent p of the W^{p,2} norm")
    p.add_argument("--theta", type=float, default=0.5, help="negative-moment order theta of the degeneracy g")
    p.add_argument("--eps-grid", default="1,0.1,0.01", help="epsilon values for u_gamma(g, eps) and gamma(g <= eps)")
    _common(p, "1e5")

    p = sub.add_parser("distance", formatter_class=fmt, help="distance between the laws of two maps")
    p.add_argument("--map-a", required=True, help="first map (catalog name or JSON path)")
    p.add_argument("--map-b", required=True, help="second map, same n and k as --map-a")
    p.add_argument("--metric", choices=("tv", "kr", "kantorovich"), default="tv",
                   help="tv: total variation (singular laws at 2); kr: bounded-Lipschitz dual; "
                        "kantorovich: Lipschitz dual")
    p.add_argument("--independent", action="store_true",
                   help="draw the two samples from independent streams instead of one shared batch")
    _common(p, "1e5")

    p = sub.add_parser("sigma", formatter_class=fmt, help="sandwich bounds for sigma(mu, t)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help="map whose pushforward law is mu")
    src.add_argument("--density", choices=sorted(DENSITIES), help="1-D oracle density (exact cell masses)")
    p.add_argument("--t-grid", default="0.05,0.1,0.2,0.5", help="values of t")
    _common(p, "1e5")

    p = sub.add_parser("besov", formatter_class=fmt, help="fit the L1 shift exponent alpha")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help="map whose pushforward law is fitted (histogram path)")
    src.add_argument("--density", choices=sorted(DENSITIES), help="1-D oracle density (quadrature path)")
    p.add_argument("--h-min", type=float, default=0.02, help="smallest shift |h|")
    p.add_argument("--h-max", type=float, default=0.7, help="largest shift |h|")
    p.add_argument("--direction", type=int, default=0, help="coordinate direction of the shift (0-based)")
    p.add_argument("--p", type=float, default=None, help="integrability exponent p for the predicted alpha")
    p.add_argument("--theta", type=float, default=None, help="moment order theta for the predicted alpha")
    _common(p, "1e6")

    p = sub.add_parser("verify", formatter_class=fmt, help="run a verification suite")
    p.add_argument("--suite", choices=SUITE_NAMES, default="identities", help="suite name ('all' excludes forced-fail)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default from GAUSSREG_THREADS, else 1)")
    _common(p, "1e6")

    p = sub.add_parser("demo-sequence", formatter_class=fmt, help="TV convergence along a sequence f_n")
    p.add_argument("--sequence", choices=sorted(sequences()), default="x1_plus_sin_x2", help="sequence name")
    p.add_argument("--p", type=float, default=None, help="integrability exponent p (default 2 for k=1, 10 for k=2)")
    p.add_argument("--ns", default="1,2,3,5,8,13,20,30,50", help="indices n of the sequence")
    _common(p, "1e6")

    sub.add_parser("list-catalog", formatter_class=fmt, help="list built-in maps and oracle densities")
    return parser


# --------------------------------------------------------------------------
# commands


def _resolve(ref: str, flag: str) -> MapSpec:
    try:
        return resolve_map(ref)
    except (UnknownMap, ConfigParse) as exc:
        raise type(exc)(f"{flag}: {exc.args[0]}") from None


def _maps_batch(spec: MapSpec, args, name: str) -> SampleBatch:
    return batch_for(name, spec.dim_in, parse_count(args.n), args.seed)


def cmd_analyze_map(args) -> list:
    spec = _resolve(args.map, "--map")
    batch = _maps_batch(spec, args, "analyze")
    eps_grid = parse_grid(args.eps_grid, "--eps-grid")
    base = {"map": spec.name, "n": float(spec.dim_in), "k": float(spec.dim_out)}
    rows: list = [adjugate_check(spec, batch.points[: min(batch.count, 10_000)])]
    norm = sobolev_norm(spec, args.p, 2, batch)
    for i, c in enumerate(norm.components):
        rows.append(report_row("sobolev_norm", c.mean, c.stderr, dict(base, p=args.p, m=2.0, component=float(i))))
    g = degeneracy_values(spec, batch.points)
    g_kind = "grad_norm" if spec.dim_out == 1 else "malliavin_det"
    us = []
    for eps in eps_grid:
        u = u_gamma(g, eps)
        us.append(u.mean)
        sb = small_ball(g, eps)
        rows.append(report_row("u_gamma", u.mean, u.error, dict(base, g=g_kind, eps=eps)))
        rows.append(report_row("small_ball", sb.p, (sb.upper - sb.lower) / 2, dict(base, g=g_kind, eps=eps)))
    rows.append(report_row("u_gamma_vacuous", float(min(us) >= VACUITY_LEVEL),
                           params=dict(base, level=VACUITY_LEVEL)))
    try:
        m = negative_moment(g, args.theta)
        rows.append(report_row("negative_moment", m.estimate.mean, m.estimate.stderr,
                               dict(base, g=g_kind, theta=args.theta, tail_index=m.tail_index)))
        rows.append(report_row("predicted_besov_alpha", besov_alpha(args.p, args.theta, spec.dim_out),
                               params=dict(base, p=args.p, theta=args.theta)))
    except MomentDiverged:
        rows.append(report_row("negative_moment:diverged", math.inf, params=dict(base, g=g_kind, theta=args.theta)))
    return rows


def cmd_distance(args) -> list:
    a, b = _resolve(args.map_a, "--map-a"), _resolve(args.map_b, "--map-b")
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ConfigParse(f"--map-b: {b.name} has (n,k)=({b.dim_in},{b.dim_out}), "
                          f"--map-a {a.name} has ({a.dim_in},{a.dim_out})")
    count = parse_count(args.n)
    ba = batch_for("distance_a", a.dim_in, count, args.seed)
    bb = batch_for("distance_b", b.dim_in, count, args.seed) if args.independent else ba
    mu, nu = pushforward(a, ba), pushforward(b, bb)
    if args.metric == "tv":
        rep = tv_distance(mu, nu)
        extra = {"width": rep.resolution, "refined": rep.refined_value}
    else:
        omega = EmpiricalMeasure(np.vstack([mu.points, nu.points]), np.concatenate([mu.weights, -nu.weights]))
        rep = kr_norm(omega) if args.metric == "kr" else kantorovich_norm(omega)
        extra = {"support": rep.resolution}
    params = {"map_a": a.name, "map_b": b.name, "N": float(count), "shared_batch": float(not args.independent)}
    params.update({k: float(v) for k, v in extra.items() if v is not None})
    return [report_row(f"distance[{args.metric}]", rep.value, rep.error or 0.0, params)]


def cmd_sigma(args) -> list:
    t_grid = parse_grid(args.t_grid, "--t-grid")
    rows = []
    if args.density:
        for t in t_grid:
            lo = sigma_lower_converged(args.density, t)
            hi = sigma_upper(args.density, t)
            params = {"density": args.density, "t": t, "cells": float(lo.cells)}
            rows.append(report_row("sigma_lower", lo.lower, params=params))
            rows.append(report_row("sigma_upper", hi, params=params))
            rows.append(BoundCheck("sigma_sandwich", lo.lower, hi, params=params))
        return rows
    spec = _resolve(args.map, "--map")
    mu = pushforward(spec, _maps_batch(spec, args, "sigma"))
    for t in t_grid:
        est = sigma_estimate(mu, t)
        params = {"map": spec.name, "t": t, "k": float(spec.dim_out), "directions": float(est.direction_count)}
        rows.append(report_row("sigma_lower", est.lower, params=params))
        rows.append(report_row("sigma_upper", est.upper, params=params))
    return rows


def cmd_besov(args) -> list:
    if not 0 < args.h_min < args.h_max:
        raise ConfigParse(f"--h-min/--h-max: need 0 < h_min < h_max, got {args.h_min}, {args.h_max}")
    grid = geometric_grid(args.h_min, args.h_max)
    if args.density:
        get_density(args.density)
        fit = besov_fit(args.density, grid)
        label, k, params = args.density, 1, {"density": args.density}
    else:
        spec = _resolve(args.map, "--map")
        if not 0 <= args.direction < spec.dim_out:
            raise ConfigParse(f"--direction: {args.direction} out of range for k={spec.dim_out}")
        e = np.zeros(spec.dim_out)
        e[args.direction] = 1.0
        fit = besov_fit(pushforward(spec, _maps_batch(spec, args, "besov")), grid, direction=e)
        label, k, params = spec.name, spec.dim_out, {"map": spec.name, "direction": float(args.direction)}
    params.update(r2=fit.r_squared, used=float(sum(fit.used)), grid_min=float(grid[0]), grid_max=float(grid[-1]),
                  method=fit.method)
    rows = [report_row(f"besov[{label}]", fit.alpha_hat, params=params)]
    if (args.p is None) != (args.theta is None):
        raise ConfigParse("--p/--theta: give both or neither")
    if args.p is not None:
        pred = besov_alpha(args.p, args.theta, k)
        rows.append(BoundCheck(f"besov_predicted[{label}]", pred, fit.alpha_hat,
                               params={"p": args.p, "theta": args.theta, "k": float(k)}))
    return rows


def cmd_verify(args) -> list:
    ctx = Context(seed=args.seed, count=parse_count(args.n))
    return run_suite(args.suite, ctx, args.threads or default_threads())


def cmd_demo_sequence(args) -> list:
    seq = sequences()[args.sequence]
    ns = [int(v) for v in parse_grid(args.ns, "--ns")]
    p = args.p if args.p is not None else (2.0 if seq.limit.dim_out == 1 else 10.0)
    batch = batch_for(f"demo_{args.sequence}", 2, parse_count(args.n), args.seed)
    return sequence_demo(seq, batch, p, tuple(ns))


def list_catalog() -> str:
    lines = ["maps:"]
    for spec in CATALOG.values():
        facts = spec.facts or spec.description
        lines.append(f"  {spec.name} (n={spec.dim_in},k={spec.dim_out}): {facts}")
    lines.append("densities:")
    for name in DENSITIES:
        lines.append(f"  {name} density oracle")
    lines.append("sequences:")
    for name, seq in sequences().items():
        lines.append(f"  {name} -> {seq.limit.name}{'' if seq.convergent else ' (degenerate limit)'}")
    return "\n".join(lines) + "\n"


HANDLERS = {
    "analyze-map": cmd_analyze_map,
    "distance": cmd_distance,
    "sigma": cmd_sigma,
    "besov": cmd_besov,
    "verify": cmd_verify,
    "demo-sequence": cmd_demo_sequence,
}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "list-catalog":
        stdout.write(list_catalog())
        return 0
    try:
        rows = HANDLERS[args.command](args)
        count = parse_count(args.n) if hasattr(args, "n") else None
        extra = {"suite": args.suite} if args.command == "verify" else {}
        report = Report.build(rows, args.command, args.seed, count, **extra)
        text = report.write(args.output, args.format)
    except GaussRegError as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"gaussreg: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2
    if args.output in (None, "-"):
        stdout.write(text)
    for r in report.failed:
        print(f"FAILED {r.check_name} lhs={r.lhs!r} rhs={r.rhs!r}", file=sys.stderr)
    return report.exit_status


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
