"""Command-line interface.

Exit codes: 0 success, 1 model or input-file error, 2 usage error. Errors
print one ``error <Code>: message`` line on stderr.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import families
from .errors import EigenbundleError, RangeError
from .global_plan import optimal_global_plan
from .market import normalize, solve_equilibrium
from .marketfile import dumps_market, load_market, load_taxes
from .planner import NoiseModel
from .report import global_report, analyze, render_text, simulation_report, small_report
from .small import pigouvian_leverage, shadow_price_small
from .spectral import decompose, eigenvalue_variance

EXIT_OK, EXIT_MODEL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    code = "UsageError"


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _uint(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an unsigned integer, got {text!r}")
    return value


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: dict, args):
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = render_text(report)
    _emit(text, args.out)


def cmd_analyze(args):
    _emit_report(analyze(load_market(args.market)), args)


def cmd_small_opt(args):
    _emit_report(small_report(load_market(args.market), args.risk_aversion), args)


def cmd_global_opt(args):
    _emit_report(global_report(load_market(args.market)), args)


def cmd_simulate(args):
    spec = load_market(args.market)
    if (args.tau_file is None) == (args.plan is None):
        raise UsageError("give exactly one of --tau-file or --plan")
    tau = load_taxes(args.tau_file, spec.n) if args.tau_file else None
    noise = NoiseModel(variance=args.noise_variance, basis=args.noise_basis, seed=args.seed)
    report = simulation_report(
        spec, tau, noise, args.risk_aversion, args.samples, plan=args.plan, tau_units=args.tau_units
    )
    _emit_report(report, args)


def sweep_rows(g_values, sign="complements", beta=None, cost=None):
    """One dict per g with spectral statistics and, given beta, the global plan."""
    rows = []
    for g in g_values:
        global_mode = beta is not None
        if abs(g) > families.G_MAX + 1e-15 or (global_mode and abs(g) >= families.G_MAX - 1e-15):
            raise RangeError(f"|g| = {g!r} outside the valid range for this sweep")
        spec = families.g_triangle(
            g, sign,
            beta=families.DEFAULT_BETA if beta is None else beta,
            cost=families.DEFAULT_COST if cost is None else cost,
        )
        m = normalize(spec)
        dec = decompose(m.d_norm, solve_equilibrium(m).quantity)
        row = {
            "g": g,
            "var_sigma": eigenvalue_variance(dec),
            "z_small": shadow_price_small(dec),
            "leverage": pigouvian_leverage(dec),
            "lambda_min": float(dec.lam[0]),
            "lambda_max": float(dec.lam[-1]),
        }
        if global_mode:
            plan = optimal_global_plan(m, dec)
            row["z_global"] = plan.z
            row["dC_global"] = plan.cs_gain
        rows.append(row)
    return rows


def cmd_sweep(args):
    if args.family != "three-product" or args.param != "g":
        raise UsageError("only --family three-product --param g is supported")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    if args.steps == 1:
        grid = [args.start]
    else:
        grid = [round(float(x), 12) for x in np.linspace(args.start, args.stop, args.steps)]
    if args.cost is not None and args.beta is None:
        raise UsageError("--cost requires --beta")
    rows = sweep_rows(grid, args.sign, args.beta, args.cost)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) for k, v in row.items()})
    _emit(buf.getvalue(), args.out)


def cmd_example(args):
    if args.name in ("triangle-3.2", "hub-triangle"):
        spec = families.hub_triangle(beta=args.beta, cost=args.cost)
    elif args.name == "g-triangle":
        spec = families.g_triangle(args.g, args.sign, beta=args.beta, cost=args.cost, strict=args.strict)
    elif args.name == "g-triangle-calibrated":
        if args.quantity is None:
            raise UsageError("--name g-triangle-calibrated requires --quantity")
        spec = families.calibrated_g_triangle(args.g, args.quantity, args.sign, cost=args.cost)
    else:
        spec = families.independent(len(args.beta), beta=args.beta, cost=args.cost)
    _emit(dumps_market(spec), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenbundle",
        description="Eigenbundle analysis and optimal budget-balanced taxes for linear-demand Bertrand markets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def reporting(p):
        p.add_argument("market", help="market file (JSON)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("analyze", help="normalize, solve the equilibrium and decompose")
    reporting(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("small-opt", help="closed-form optimal small intervention")
    reporting(p)
    p.add_argument("--risk-aversion", "-a", type=float, default=1000.0)
    p.set_defaults(func=cmd_small_opt)

    p = sub.add_parser("global-opt", help="exact optimal budget-balanced taxes")
    reporting(p)
    p.set_defaults(func=cmd_global_opt)

    p = sub.add_parser("simulate", help="Monte Carlo of noisy tax implementation")
    reporting(p)
    p.add_argument("--tau-file", help="JSON list (or {\"tau\": [...]}) of target taxes")
    p.add_argument("--tau-units", choices=("original", "normalized"), default="original")
    p.add_argument("--plan", choices=("small", "global"), help="simulate a computed plan instead of --tau-file")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=_uint, default=0)
    p.add_argument("--risk-aversion", "-a", type=float, default=1000.0)
    p.add_argument("--noise-variance", type=float, default=1.0)
    p.add_argument("--noise-basis", choices=("product", "eigen"), default="product")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="parameter sweep over a market family, CSV output")
    p.add_argument("--family", default="three-product")
    p.add_argument("--param", default="g")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--sign", choices=("complements", "substitutes"), default="complements")
    p.add_argument("--beta", type=_floats, help="enables global-plan columns")
    p.add_argument("--cost", type=_floats)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("example", help="write a bundled example market file")
    p.add_argument("--name", choices=("triangle-3.2", "hub-triangle", "g-triangle", "g-triangle-calibrated", "independent"), required=True)
    p.add_argument("--g", type=float, default=0.5)
    p.add_argument("--sign", choices=("complements", "substitutes"), default="complements")
    p.add_argument("--beta", type=_floats, default=list(families.DEFAULT_BETA))
    p.add_argument("--cost", type=_floats, default=list(families.DEFAULT_COST))
    p.add_argument("--strict", action="store_true", help="require strict negative definiteness")
    p.add_argument("--quantity", type=_floats, help="untaxed equilibrium quantities to calibrate beta to")
    p.add_argument("--out")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EigenbundleError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"error IOError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error ValueError: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
