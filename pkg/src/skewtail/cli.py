"""Command-line front end.

Data goes out as CSV (17 significant digits), summaries and the run manifest
as JSON. When CSV occupies stdout the JSON moves to stderr.

Exit codes: 0 success, 2 usage or validation, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .asymptotics import (
    ASYMPTOTIC_REGIME,
    cross_quantile_expansion,
    integration_limits,
    quantile_asymptotic,
    tail_constants,
)
from .errors import DomainError, NumericalError, UnreliableEstimateWarning
from .model import GENERATOR, SkewTParams, marginal_quantile, marginal_skewness, read_samples_csv, sample
from .numerics import DEFAULT_CONFIG, QuadConfig
from .tail import (
    RATE_CONFIG,
    empirical_lambda_stats,
    fit_grid,
    karamata_factor,
    lambda_limit,
    lambda_point,
    rate_constants,
    rate_grid,
    rate_u_grid,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

# keys a config file may set; anything else is rejected
CONFIG_KEYS = {
    "eta": float,
    "rho": float,
    "theta1": float,
    "theta2": float,
    "abs_tol": float,
    "rel_tol": float,
    "seed": int,
    "n": int,
    "u": str,
    "u_lo": float,
    "u_hi": float,
    "points": int,
    "margin": int,
    "workers": int,
    "format": str,
    "out": str,
    "input": str,
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits; integers and blanks pass through."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def parse_u_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad u list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty u list")
    return values


def read_config(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = parse_u_list(value) if key == "u" else CONFIG_KEYS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file of defaults; flags take precedence")
    common.add_argument("--eta", type=float, help="degrees of freedom (> 0)")
    common.add_argument("--rho", type=float, help="correlation in (-1, 1)")
    common.add_argument("--theta1", type=float, help="skewness of the first coordinate (default 0)")
    common.add_argument("--theta2", type=float, help="skewness of the second coordinate (default 0)")
    common.add_argument("--abs-tol", dest="abs_tol", type=float)
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="skewtail", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", parents=[common], help="asymptotic constants, lambda_L and rate constants")

    p = sub.add_parser("lambda", parents=[common], help="finite-level lambda_L(u)")
    p.add_argument("--u", type=parse_u_list, help="comma-separated levels in (0, 1)")

    p = sub.add_parser("rate", parents=[common], help="fit the convergence rate of lambda_L(u)")
    p.add_argument("--u-lo", dest="u_lo", type=float)
    p.add_argument("--u-hi", dest="u_hi", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("quantile", parents=[common], help="numeric vs asymptotic marginal quantiles")
    p.add_argument("--margin", type=int, choices=(1, 2))
    p.add_argument("--u", type=parse_u_list)

    p = sub.add_parser("sample", parents=[common], help="draw a seeded sample")
    p.add_argument("-n", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("empirical", parents=[common], help="empirical lambda_L(u) from a sample CSV")
    p.add_argument("--input", help="sample CSV with header x1,x2")
    p.add_argument("--u", type=parse_u_list)
    return parser


DEFAULTS = {
    "theta1": 0.0,
    "theta2": 0.0,
    "u_lo": 1e-4,
    "u_hi": 1e-2,
    "points": 20,
    "margin": 1,
    "workers": 1,
    "seed": 0,
    "format": None,
}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    file_values = read_config(args.config) if args.config else {}
    for key, value in file_values.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if args.command == "empirical" and key.startswith("theta"):
            continue
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def params_from(args) -> SkewTParams:
    if args.command != "empirical":
        missing = [k for k in ("eta", "rho") if getattr(args, k) is None]
        if missing:
            raise UsageError("missing required parameter(s): " + ", ".join("--" + m for m in missing))
    return SkewTParams(args.eta, args.rho, args.theta1, args.theta2)


def quad_config(args, base: QuadConfig) -> QuadConfig:
    return QuadConfig(
        abs_tol=base.abs_tol if args.abs_tol is None else args.abs_tol,
        rel_tol=base.rel_tol if args.rel_tol is None else args.rel_tol,
    )


def manifest(args, cfg: QuadConfig | None, duration: float, seed=None) -> dict:
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("command", "config") and v is not None
    }
    return {
        "command": args.command,
        "params": params,
        "seed": seed,
        "tolerances": None if cfg is None else {"abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol},
        "generator": GENERATOR,
        "version": __version__,
        "duration_s": duration,
    }


@contextmanager
def open_out(path):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="") as fh:
        yield fh


def write_rows(path, header, rows) -> None:
    with open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def emit_json(obj, to_stderr: bool) -> None:
    stream = sys.stderr if to_stderr else sys.stdout
    stream.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class Report:
    """Collects the JSON summary so numerical failures can still print it."""

    def __init__(self, args, cfg, seed=None):
        self.args, self.cfg, self.seed = args, cfg, seed
        self.t0 = time.perf_counter()
        self.summary = {}

    def finish(self, csv_on_stdout: bool) -> None:
        out = dict(self.summary)
        out["manifest"] = manifest(self.args, self.cfg, time.perf_counter() - self.t0, self.seed)
        emit_json(out, csv_on_stdout)


def wants_json(args) -> bool:
    return args.format == "json"


def cmd_constants(args) -> int:
    p = params_from(args)
    cfg = quad_config(args, RATE_CONFIG)
    rep = Report(args, cfg)
    lam1, lam2 = marginal_skewness(p)
    t1, t2 = tail_constants(p, 1), tail_constants(p, 2)
    cq = cross_quantile_expansion(p)
    lim = integration_limits(p)
    values = {
        "lambda1": lam1,
        "lambda2": lam2,
        "c1": t1.c,
        "d1": t1.d,
        "c2": t2.c,
        "d2": t2.d,
        "ratio": cq.ratio,
        "first_order": cq.first_order,
        "a21": lim.a21,
        "a12": lim.a12,
        "L1": lim.L1,
        "L2": lim.L2,
    }
    try:
        values["lambda_L"] = lambda_limit(p, cfg)
    except NumericalError as exc:
        raise NumericalError(f"lambda_L limit integral: {exc}") from exc
    try:
        rc = rate_constants(p, cfg)
    except NumericalError as exc:
        raise NumericalError(f"rate constant integral: {exc}") from exc
    values.update(k21=rc.k21, k12=rc.k12, k=rc.k, prefactor=rc.prefactor)
    if args.format == "csv":
        write_rows(args.out, ["name", "value"], values.items())
        rep.finish(csv_on_stdout=args.out is None)
    else:
        rep.summary = values
        if args.out:
            with open_out(args.out) as fh:
                fh.write(json.dumps(values, indent=2) + "\n")
        rep.finish(csv_on_stdout=False)
    return EXIT_OK


def cmd_lambda(args) -> int:
    p = params_from(args)
    if not args.u:
        raise UsageError("--u is required")
    cfg = quad_config(args, DEFAULT_CONFIG)
    rep = Report(args, cfg)
    rows = []
    for u in args.u:
        pt = lambda_point(p, u, cfg)
        rows.append((u, pt.value, pt.error, pt.y1, pt.y2))
    header = ["u", "lambda_u", "error_estimate", "q1", "q2"]
    if wants_json(args):
        rep.summary = {"rows": [dict(zip(header, r)) for r in rows]}
        rep.finish(csv_on_stdout=False)
    else:
        write_rows(args.out, header, rows)
        rep.finish(csv_on_stdout=args.out is None)
    return EXIT_OK


def cmd_rate(args) -> int:
    p = params_from(args)
    grid = rate_u_grid(args.u_lo, args.u_hi, args.points)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    cfg = quad_config(args, RATE_CONFIG)
    rep = Report(args, cfg)
    limit = lambda_limit(p, cfg)
    results = rate_grid(p, grid, cfg, args.workers)

    rows, failed = [], []
    for u, res in zip(grid, results):
        if isinstance(res, Exception):
            failed.append((float(u), str(res)))
            rows.append((u, None, None, math.log(u), None))
            continue
        diff = abs(res[0] - limit)
        rows.append((u, res[0], diff, math.log(u), math.log(diff) if diff > 0 else None))
    write_rows(args.out, ["u", "lambda_u", "abs_diff", "log_u", "log_abs_diff"], rows)
    stdout_taken = args.out is None

    rc = rate_constants(p, cfg)
    rep.summary = {
        "lambda_L": limit,
        "theoretical_slope": 2.0 / p.eta,
        "theoretical_prefactor": abs(rc.prefactor),
        "karamata_factor": karamata_factor(p.eta),
    }
    if failed:
        rep.summary["failed"] = [{"u": u, "error": msg} for u, msg in failed]
        rep.finish(stdout_taken)
        print(f"skewtail: {len(failed)} grid point(s) failed; CSV is partial", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        fit = fit_grid(grid, [r[0] for r in results], [r[1] for r in results], limit)
    except NumericalError:
        rep.finish(stdout_taken)
        raise
    rep.summary.update(
        slope=fit.slope,
        prefactor_hat=fit.prefactor_hat,
        r_squared=fit.fit.r_squared,
        excluded=fit.excluded,
    )
    rep.finish(stdout_taken)
    return EXIT_OK


def cmd_quantile(args) -> int:
    p = params_from(args)
    if not args.u:
        raise UsageError("--u is required")
    for u in args.u:
        if not (0.0 < u < 1.0):
            raise DomainError(f"u must lie in (0, 1), got {u}")
    cfg = quad_config(args, DEFAULT_CONFIG)
    rep = Report(args, cfg)
    rows, outside = [], []
    for u in args.u:
        num = marginal_quantile(p, args.margin, u, cfg)
        asym = quantile_asymptotic(p, args.margin, u)
        rel = abs(asym - num) / abs(num) if num != 0.0 else None
        rows.append((u, num, asym, rel))
        if u > ASYMPTOTIC_REGIME:
            outside.append(u)
    header = ["u", "numeric", "asymptotic", "rel_err"]
    rep.summary = {"out_of_regime": outside, "regime_limit": ASYMPTOTIC_REGIME}
    for u in outside:
        print(f"skewtail: warning: u={fmt(u)} is outside the asymptotic regime u <= {ASYMPTOTIC_REGIME}", file=sys.stderr)
    if wants_json(args):
        rep.summary["rows"] = [dict(zip(header, r)) for r in rows]
        rep.finish(csv_on_stdout=False)
    else:
        write_rows(args.out, header, rows)
        rep.finish(csv_on_stdout=args.out is None)
    return EXIT_OK


def cmd_sample(args) -> int:
    p = params_from(args)
    if args.n is None or args.n < 1:
        raise UsageError(f"-n must be >= 1, got {args.n}")
    rep = Report(args, None, seed=args.seed)
    draws = sample(p, args.n, args.seed)
    if args.out is None:
        buf = io.StringIO()
        buf.write("x1,x2\n")
        for a, b in draws.rows:
            buf.write(f"{fmt(a)},{fmt(b)}\n")
        sys.stdout.write(buf.getvalue())
        rep.finish(csv_on_stdout=True)
    else:
        draws.to_csv(args.out)
        rep.finish(csv_on_stdout=False)
    return EXIT_OK


def cmd_empirical(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    if not args.u:
        raise UsageError("--u is required")
    if not Path(args.input).is_file():
        raise OSError(f"cannot read {args.input}")
    data = read_samples_csv(args.input)
    rep = Report(args, None)
    rows, flagged = [], []
    for u in args.u:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UnreliableEstimateWarning)
            est = empirical_lambda_stats(data, u)
        if any(issubclass(w.category, UnreliableEstimateWarning) for w in caught):
            flagged.append(u)
            print(f"skewtail: warning: n*u < 20 at u={fmt(u)}; estimate unreliable", file=sys.stderr)
        rows.append((u, est.value, est.count, est.std_err))
    header = ["u", "lambda_hat", "count", "std_err"]
    rep.summary = {"n": data.n, "unreliable": flagged}
    if wants_json(args):
        rep.summary["rows"] = [dict(zip(header, r)) for r in rows]
        rep.finish(csv_on_stdout=False)
    else:
        write_rows(args.out, header, rows)
        rep.finish(csv_on_stdout=args.out is None)
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "lambda": cmd_lambda,
    "rate": cmd_rate,
    "quantile": cmd_quantile,
    "sample": cmd_sample,
    "empirical": cmd_empirical,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        args = resolve(args)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"skewtail {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"skewtail {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"skewtail {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
