"""Command-line interface: hypothesis checks, spectra, pressure, empirics.

Exit codes are stable across subcommands: 0 success, 1 analysis failure,
2 input error.  Every CSV starts with a '#'-prefixed metadata preamble
(config hash, seed, depths, tolerances, version); no timestamps or thread
counts appear in outputs, so reruns with the same config and seed are
byte-identical regardless of parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cones import find_invariant_multicone, furstenberg_cover
from .config import ConfigError, SystemConfig, load_config
from .empirical import exact_dimension_check, validate_legendre
from .geometry import check_projective_strong_separation, check_strong_separation
from .pressure import BudgetError, PotentialSpec, pressure_estimate
from .spectrum import spectrum_table

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(float(x))
    return str(x)


def _preamble(cfg: SystemConfig, extra: dict) -> list[str]:
    lines = [
        f"# affmf {__version__}",
        f"# config_hash: {cfg.hash()}",
        f"# label: {cfg.label}",
        f"# seed: {cfg.seed}",
    ]
    for key in sorted(extra):
        lines.append(f"# {key}: {_fmt(extra[key])}")
    return lines


def _write_csv(out_path: str | None, preamble: list[str], header: list[str],
               rows: list[list]) -> None:
    buf = io.StringIO()
    for line in preamble:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out_path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    system = cfg.system()
    ledger: dict[str, str] = {}

    report = find_invariant_multicone(system, ratio_depth=cfg.depths["ratio"])
    ledger["domination"] = {"dominated": "yes", "not_dominated": "no"}.get(
        report.status, "inconclusive")
    c_est, tau_est = report.c_est, report.tau_est

    sep_depth = args.depth or cfg.depths["separation"]
    strong = check_strong_separation(system, sep_depth) if system.n_maps >= 2 else None
    ledger["strong_separation"] = strong.satisfied if strong else "inconclusive"

    if report.dominated:
        cover = furstenberg_cover(system, report.multicone, args.cover_depth
                                  or cfg.depths["cover"])
        projective = check_projective_strong_separation(system, cover, sep_depth) \
            if system.n_maps >= 2 else None
        ledger["projective_strong_separation"] = (projective.satisfied if projective
                                                  else "inconclusive")
        cover_note = f"cover: depth {cover.depth}, {len(cover.intervals)} intervals, " \
                     f"total width {cover.total_width:.6g}"
    else:
        ledger["projective_strong_separation"] = "inconclusive"
        cover_note = "cover: not available (no verified multicone)"

    print(f"# affmf {__version__}")
    print(f"# config_hash: {cfg.hash()}")
    print(f"# label: {cfg.label}")
    print(f"domination: {ledger['domination']}"
          f" (C_est {c_est:.6g}, tau_est {tau_est:.6g}, depth {report.depth_used})")
    if report.multicone is not None:
        ivs = ", ".join(f"[{iv.lo:.6g}, {iv.lo + iv.width:.6g}]"
                        for iv in report.multicone.intervals)
        print(f"multicone: {ivs}")
    print(cover_note)
    print(f"strong_separation: {ledger['strong_separation']}"
          + (f" (margin {strong.margin:.6g}, depth {strong.depth})" if strong else ""))
    print(f"projective_strong_separation: {ledger['projective_strong_separation']}")
    return EXIT_OK if all(v == "yes" for v in ledger.values()) else EXIT_ANALYSIS


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    if args.qmin >= args.qmax:
        raise ConfigError("--qmin must be below --qmax", "qmin")
    if args.steps < 1:
        raise ConfigError("--steps must be positive", "steps")
    system = cfg.system()
    weights = cfg.weights()
    depth = args.depth or cfg.depths["spectrum"]
    tol = args.tol or cfg.tolerances["root"]
    grid = [float(q) for q in np.linspace(args.qmin, args.qmax, args.steps)]
    effective = [q for q in grid if abs(q - 1.0) >= 0.02]
    if not effective:
        print("error: the q grid lies entirely inside the excluded band around q = 1",
              file=sys.stderr)
        return EXIT_ANALYSIS
    table = spectrum_table(system, weights, grid, depth, tol)
    rows = []
    for p in table.points:
        f = p.functionals
        rows.append([
            p.q, p.s_q, p.tau, p.tau_prime_fd, p.tau_prime_formula, p.f, p.regime,
            f.h if f else math.nan, f.h_cross if f else math.nan,
            f.lambda1 if f else math.nan, f.lambda2 if f else math.nan, p.status,
        ])
    preamble = _preamble(cfg, {"depth": depth, "tol": tol, "qmin": args.qmin,
                               "qmax": args.qmax, "steps": args.steps,
                               "fd_step": table.fd_step})
    header = ["q", "s_q", "tau", "tau_prime_fd", "tau_prime_formula", "f", "regime",
              "h", "h_cross", "lambda1", "lambda2", "status"]
    _write_csv(args.out, preamble, header, rows)
    return EXIT_OK if table.ok_points() else EXIT_ANALYSIS


def cmd_pressure(args) -> int:
    cfg = load_config(args.config)
    system = cfg.system()
    weights = cfg.weights()
    depths = [int(d) for d in args.depths.split(",")] if args.depths \
        else [cfg.depths["pressure"]]
    if any(d < 1 for d in depths):
        raise ConfigError("--depths entries must be positive", "depths")
    spec = PotentialSpec.psi(system, weights, args.q, args.s)
    rows = []
    for depth in depths:
        est = pressure_estimate(spec, depth, qb_seed=cfg.seed + 1234)
        rows.append([depth, est.value, est.lower, est.upper, est.qb_constant_est])
    preamble = _preamble(cfg, {"q": args.q, "s": args.s})
    _write_csv(args.out, preamble, ["n", "P_n", "lower", "upper", "qb_const"], rows)
    return EXIT_OK


def cmd_empirical(args) -> int:
    cfg = load_config(args.config)
    system = cfg.system()
    weights = cfg.weights()
    seed = args.seed if args.seed is not None else cfg.seed
    scale_exponents = tuple(int(s) for s in args.scales.split(",")) if args.scales \
        else (6, 7, 8, 9, 10, 11, 12)

    report = validate_legendre(system, weights, n_points=args.points, seed=seed,
                               scale_exponents=scale_exponents)
    coarse = report.coarse

    rows = []
    for row, delta in enumerate(coarse.scales):
        for b, alpha in enumerate(coarse.alpha_centers):
            f = coarse.f_by_scale[row, b]
            if math.isnan(f):
                continue
            stab = coarse.stability[row, b]
            rows.append([alpha, f, delta, stab if not math.isnan(stab) else ""])
    preamble = _preamble(cfg, {"points": args.points, "scales": ",".join(
        str(s) for s in scale_exponents), "empirical_seed": seed})
    _write_csv(args.out, preamble, ["alpha", "f_emp", "scale", "stability"], rows)

    conditional = " (conditional: hypotheses not fully certified)" if report.conditional else ""
    print(f"hypotheses: {report.hypotheses}")
    print(f"legendre_overlay_deviation: {_fmt(report.deviation)}{conditional}")
    print(f"alpha_window: [{_fmt(report.alpha_window[0])}, {_fmt(report.alpha_window[1])}]")
    for note in report.notes:
        print(f"note: {note}")

    if not args.skip_exact_dim:
        try:
            exact = exact_dimension_check(system, weights, weights, n_points=args.points,
                                          n_test_points=args.test_points, seed=seed)
            print(f"exact_dimension: target {_fmt(exact.target)} mean_slope "
                  f"{_fmt(exact.mean_slope)} deviation {_fmt(exact.deviation)} "
                  f"stderr {_fmt(exact.stderr)}")
        except ValueError as exc:
            print(f"exact_dimension: skipped ({exc})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affmf",
        description="Multifractal analysis of dominated planar self-affine systems",
    )
    parser.add_argument("--version", action="version", version=f"affmf {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for the pressure kernel "
                             "(default: AFFMF_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="certify domination and separation hypotheses")
    p.add_argument("config")
    p.add_argument("--depth", type=int, default=None, help="separation refinement depth")
    p.add_argument("--cover-depth", type=int, default=None, help="Furstenberg cover depth")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("spectrum", help="L^q spectrum table as CSV")
    p.add_argument("config")
    p.add_argument("--qmin", type=float, required=True)
    p.add_argument("--qmax", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("pressure", help="depth-indexed pressure brackets as CSV")
    p.add_argument("config")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--depths", default=None, help="comma-separated depths")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("empirical", help="coarse spectrum, overlay, exact-dimension check")
    p.add_argument("config")
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--scales", default=None, help="comma-separated dyadic exponents")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--test-points", type=int, default=64)
    p.add_argument("--skip-exact-dim", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_empirical)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return EXIT_INPUT
        os.environ["AFFMF_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        field = f" (field: {exc.field})" if exc.field else ""
        print(f"config error: {exc}{field}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except ValueError as exc:
        msg = str(exc)
        hint = ""
        if "insufficient sampling" in msg:
            hint = " (increase --points or coarsen --scales)"
        print(f"error: {msg}{hint}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
