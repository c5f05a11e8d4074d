"""Command line: ``bullwhip {analytic,table,sweep,simulate}``.

Exit status is 0 on success, 2 for usage errors and 3 when parameters or a
config file fail validation. Without ``--out`` results go to stdout, or to
``$BULLWHIP_OUTPUT_DIR/<default name>`` when that variable is set.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import math
import os
import sys
from pathlib import Path

from . import experiments
from .analytics import ParamError
from .distributions import SpecError
from .forecasting import ForecastError
from .simulator import ConfigError, iter_rows, run, simulate_replication, write_trace

OUTPUT_DIR_ENV = "BULLWHIP_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3


class UsageError(Exception):
    pass


def _model_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--n", type=int, required=required, help="demand moving-average length")
    p.add_argument("--m", type=int, required=required, help="lead-time moving-average length")
    p.add_argument("--muL", type=float, required=required, help="mean lead time")
    p.add_argument("--sigL", type=float, required=required, help="lead-time standard deviation")
    _demand_flags(p)


def _demand_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--muD", type=float, help="mean demand (default 2)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigD", type=float, help="demand standard deviation")
    g.add_argument("--cvD", type=float, help="demand coefficient of variation (default 0.5)")


def _output_flags(p: argparse.ArgumentParser, formats=("csv", "text")) -> None:
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bullwhip", description="Bullwhip effect with forecast demands and lead times."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form decomposition for one parameter set")
    _model_flags(p)
    _output_flags(p, formats=("text", "csv"))

    p = sub.add_parser("table", help="reproduce a published table")
    p.add_argument("id", type=int, choices=sorted(experiments.TABLE_N))
    _output_flags(p, formats=("csv", "text"))

    p = sub.add_parser("sweep", help="bullwhip measure over a grid of one or two parameters")
    p.add_argument("--preset", choices=sorted(experiments.FIGURE_PRESETS))
    p.add_argument("--axis", action="append", default=[], metavar="NAME:MIN:MAX:STEPS")
    _model_flags(p, required=False)
    _output_flags(p, formats=("csv",))

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the bullwhip measure")
    p.add_argument("--config", help="TOML experiment file; flags override its values")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--muL", type=float)
    p.add_argument("--sigL", type=float)
    _demand_flags(p)
    p.add_argument("--z", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int, help="periods per replication, warmup included")
    p.add_argument("--warmup", type=int)
    p.add_argument("--reps", type=int, dest="replications")
    p.add_argument("--strategy", choices=["product-ma", "kim-ma", "kim", "hindsight", "deterministic"])
    p.add_argument("--p", type=int, help="delay parameter of the kim-ma strategy (default m)")
    p.add_argument("--bounded", action="store_true", default=None,
                   help="forecast lead times from observations lagged by the bound M")
    p.add_argument("--M", type=int, help="lead-time bound")
    p.add_argument("--track-inventory", action="store_true", default=None, dest="track_inventory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", help="write the per-period trace of replication 0 to this CSV")
    p.add_argument("--trace-limit", type=int, default=10_000)
    _output_flags(p, formats=("csv",))
    return parser


@contextlib.contextmanager
def _open_out(args, default_name: str):
    if args.out:
        path = Path(args.out)
    elif os.environ.get(OUTPUT_DIR_ENV):
        path = Path(os.environ[OUTPUT_DIR_ENV]) / default_name
    else:
        yield sys.stdout, False
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        yield fh, True


def _demand_values(args) -> dict:
    return {"muD": args.muD, "sigD": args.sigD, "cvD": args.cvD}


def cmd_analytic(args) -> int:
    params = experiments.params_from(
        {"n": args.n, "m": args.m, "muL": args.muL, "sigL": args.sigL, **_demand_values(args)}
    )
    values = experiments.analytic_summary(params)
    with _open_out(args, f"analytic.{'csv' if args.format == 'csv' else 'txt'}") as (out, _):
        if args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(list(values))
            w.writerow([experiments.fmt5(v) for v in values.values()])
        else:
            for k, v in values.items():
                out.write(f"{k}={experiments.fmt5(v)}\n")
    return EXIT_OK


def cmd_table(args) -> int:
    text = experiments.table_csv(args.id)
    with _open_out(args, f"table{args.id}.csv") as (out, _):
        if args.format == "csv":
            out.write(text)
        else:
            rows = list(csv.reader(io.StringIO(text)))
            for row in rows:
                out.write("  ".join(c.rjust(9) for c in row).rstrip() + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    fixed = {k: getattr(args, k) for k in ("n", "m", "muL", "sigL")}
    fixed.update(_demand_values(args))
    if args.preset:
        preset = experiments.FIGURE_PRESETS[args.preset]
        axes = list(preset["axes"])
        base = dict(preset["fixed"])
        base.update({k: v for k, v in fixed.items() if v is not None})
        fixed = base
    else:
        axes = []
    if args.axis:
        try:
            axes = [experiments.Axis.parse(a) for a in args.axis]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if not 1 <= len(axes) <= 2:
        raise UsageError(f"sweep takes one or two axes (--axis or --preset), got {len(axes)}")
    for a in axes:
        fixed.pop(a.name, None)
    rows = experiments.sweep(axes, fixed)
    with _open_out(args, f"sweep-{args.preset or 'custom'}.csv") as (out, _):
        experiments.rows_to_csv(rows, out)
    return EXIT_OK


_SIM_FLAGS = ("n", "m", "muL", "sigL", "muD", "sigD", "cvD", "z", "seed", "horizon", "warmup",
              "replications", "strategy", "p", "bounded", "M", "track_inventory")


def cmd_simulate(args) -> int:
    values = experiments.load_config_file(args.config) if args.config else {}
    for k in _SIM_FLAGS:
        v = getattr(args, k)
        if v is not None:
            values[k] = v
    config = experiments.build_simulation_config(values)
    report = run(config, workers=args.workers)

    with _open_out(args, "simulate.csv") as (out, to_file):
        w = csv.writer(out, lineterminator="\n")
        for row in iter_rows(report):
            w.writerow(row)
        w.writerow([
            "all",
            sum(r.periods for r in report.replications),
            repr(report.var_q),
            repr(report.var_d),
            repr(report.bm),
            repr(report.mean_q),
            repr(report.sigma_hat_sq),
            "" if report.service_level is None else repr(report.service_level),
        ])
    if args.trace:
        trace = simulate_replication(config, 0)
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            write_trace(trace, fh, limit=args.trace_limit)

    summary = sys.stdout if to_file else sys.stderr
    summary.write(format_summary(report))
    return EXIT_OK


def format_summary(report) -> str:
    c = report.config
    f = experiments.fmt5
    periods = report.replications[0].periods
    lines = [
        f"strategy {c.strategy}, n={c.n}, m={c.m}, {len(report.replications)} replications "
        f"x {periods} periods (warmup {c.effective_warmup()})"
    ]
    if report.bm_defined:
        lo, hi = report.bm_ci
        ci = "" if math.isnan(lo) else f" (95% CI {f(lo)} .. {f(hi)})"
        lines.append(f"empirical BM: {f(report.bm)}{ci}")
    else:
        lines.append("empirical BM: undefined (zero demand variance)")
    if report.analytic_bm is not None:
        ratio = report.bm / report.analytic_bm if report.bm_defined else math.nan
        lines.append(f"analytic BM:  {f(report.analytic_bm)}  empirical/analytic {ratio:.5f}")
    lines.append(f"variance of orders: {f(report.var_q)}, of demand: {f(report.var_d)}")
    sig = f"forecast error variance: {f(report.sigma_hat_sq)}"
    if report.analytic_sigma_hat_sq is not None:
        sig += f" (closed form {f(report.analytic_sigma_hat_sq)})"
    lines.append(sig)
    lines.append(f"mean order: {f(report.mean_q)}")
    if report.service_level is not None:
        lines.append(f"service level (z={c.z:g}): {f(report.service_level)}")
    return "\n".join(lines) + "\n"


COMMANDS = {
    "analytic": cmd_analytic,
    "table": cmd_table,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ParamError, SpecError, ForecastError, ConfigError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bullwhip {args.command}: invalid input: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
