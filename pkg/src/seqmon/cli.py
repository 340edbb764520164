"""
Command line interface for seqmon.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import pandas as pd
from rich.console import Console
from rich.table import Table

from . import __version__
from ._log import configure_logging
from .asymptotics import (
    ExplosiveParams,
    am_bm,
    bm_alternative_form,
    cm_dm,
    explosive_limit_probability,
    explosive_threshold,
    rw_time_scale,
    simulate_rw_limit,
)
from .critical_values import (
    SOURCES,
    TABLE_ALPHAS,
    TABLE_GAMMAS,
    closed_end_upper,
    resolve_critical_value,
)
from .dgp import DGP_IDS, make_dgp, simulate_dataset
from .errors import (
    ConfigError,
    DataError,
    DegenerateVarianceError,
    DimensionError,
    MisuseError,
    ParameterError,
    SeqmonError,
    SingularityError,
    TableLookupError,
)
from .experiments import run_power_study, run_size_study, tau_density, write_density, write_report
from .parser import load_dgp_spec, load_monitor_config, load_plan, parse_transform
from .runner import ingest_csv, monitor_command, remonitor_command
from .stationarity import kpss_level, summary_statistics
from .utils import run_timed, save_json, save_results_csv, timestamp, to_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

_CONFIG_ERRORS = (ConfigError, ParameterError, TableLookupError, MisuseError)
_DATA_ERRORS = (DataError, DimensionError, SingularityError, DegenerateVarianceError)


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- commands

def cmd_critvals(args, console: Console) -> int:
    upper = 1.0 if args.closed_end is None else closed_end_upper(args.closed_end)
    source = args.source
    if source is None:
        # the table has open-ended entries only
        source = "simulation" if args.simulate or args.closed_end is not None else "table"
    rows = []
    for g in args.gamma:
        for a in args.alpha:
            cv = resolve_critical_value(g, a, source, grid_size=args.grid_size,
                                        reps=args.reps, seed=args.seed, upper=upper,
                                        workers=args.workers)
            rows.append(cv.as_dict())

    table = Table(title=f"Critical values ({source}, upper={upper:.4f})")
    for col in ("gamma", "alpha", "c", "std. error"):
        table.add_column(col, justify="right")
    for r in rows:
        se = f"{r['standard_error']:.4f}" if r["standard_error"] else "-"
        table.add_row(f"{r['gamma']:.2f}", f"{r['alpha']:.2f}", f"{r['c']:.4f}", se)
    console.print(table)
    if args.json:
        save_json(rows, args.json)
        console.print(f"Results saved to {args.json}")
    return EXIT_OK


def _print_monitor(report, console: Console):
    res = report.result
    if res.stopped:
        console.print(f"Detection: tau = {res.tau} at row {report.detection_row} ({report.date})")
    else:
        console.print(f"No detection: censored after {res.censored_at} monitored rows "
                      f"(reported value {res.value})")
    console.print(f"c = {report.critical.value:.4f} ({report.critical.source}), "
                  f"gamma = {report.config.gamma}, alpha = {report.config.alpha}, "
                  f"M = {report.config.M}, sigma_hat = {report.model.sigma_hat:.6g}")
    if report.paths:
        console.print(f"Report saved to {report.paths['report']}")


def _dataset(args, config):
    return ingest_csv(args.data, config.response, config.exog, config.date_column)


def cmd_monitor(args, console: Console) -> int:
    config = load_monitor_config(args.config)
    if args.start is not None:
        config = config.with_start(args.start)
    report = monitor_command(config, _dataset(args, config), args.out)
    _print_monitor(report, console)
    if args.json:
        print(to_json(report.as_dict()), end="")
    return EXIT_OK


def cmd_remonitor(args, console: Console) -> int:
    config = load_monitor_config(args.config)
    report = remonitor_command(config, _dataset(args, config), args.start,
                               previous_detection=args.previous, out_dir=args.out)
    _print_monitor(report, console)
    if args.json:
        print(to_json(report.as_dict()), end="")
    return EXIT_OK


def cmd_kpss(args, console: Console) -> int:
    transform = parse_transform(args.transform or args.column)
    data = ingest_csv(args.data, transform, date_column=None)
    bandwidth = "auto" if args.bandwidth is None else args.bandwidth
    res = kpss_level(data.y, bandwidth)
    table = Table(title=f"KPSS level stationarity: {transform.label}")
    for col in ("statistic", "bandwidth", "n", "10%", "5%", "1%"):
        table.add_column(col, justify="right")
    verdict = {True: "reject", False: "accept"}.get
    table.add_row(f"{res.statistic:.4f}", str(res.bandwidth), str(res.n),
                  verdict(res.reject_10), verdict(res.reject_5), verdict(res.reject_1))
    console.print(table)
    if args.json:
        print(to_json(res.as_dict()), end="")
    return EXIT_OK


def cmd_describe(args, console: Console) -> int:
    try:
        frame = pd.read_csv(args.data)
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot read {args.data}: {e}")
    columns = args.columns or [c for c in frame.columns if pd.api.types.is_numeric_dtype(frame[c])]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"missing column(s) {missing}")
    window = frame[columns]
    stop = None if args.M is None else args.start + args.M
    window = window.iloc[args.start:stop]
    summary = summary_statistics(window)

    table = Table(title="Summary statistics")
    table.add_column("variable")
    for col in ("n", "mean", "sd", "min", "max", "KPSS"):
        table.add_column(col, justify="right")
    for name, r in summary.iterrows():
        table.add_row(str(name), str(r["n"]), f"{r['mean']:.4f}", f"{r['sd']:.4f}",
                      f"{r['min']:.4f}", f"{r['max']:.4f}", f"{r['kpss']:.3f}{r['kpss_reject']}")
    console.print(table)
    if args.csv:
        save_results_csv(summary.reset_index(), args.csv)
    return EXIT_OK


def _study_table(report, console: Console):
    table = Table(title=f"{report.kind} study ({report.plan.reps} reps, "
                        f"{report.wall_time:.1f}s)")
    for col in ("DGP", "M", "s*", "delta", "gamma", "alpha", "c", "rate %", "se"):
        table.add_column(col, justify="right")
    for cell in report.cells:
        table.add_row(cell.dgp, str(cell.M), "-" if cell.s_star is None else str(cell.s_star),
                      "-" if cell.delta_d is None else f"{cell.delta_d:.2f}",
                      f"{cell.gamma:.2f}", f"{cell.alpha:.2f}", f"{cell.c:.4f}",
                      f"{cell.rate:.2f}", f"{cell.standard_error:.2f}")
    console.print(table)


def _out_dir(args, kind: str) -> str:
    return args.out or os.path.join("results", f"{kind}_{timestamp()}")


def cmd_simulate_size(args, console: Console) -> int:
    report = run_size_study(load_plan(args.plan))
    _study_table(report, console)
    paths = write_report(report, _out_dir(args, "size"))
    console.print(f"Results saved to {os.path.dirname(paths['summary'])}")
    return EXIT_OK


def cmd_simulate_power(args, console: Console) -> int:
    report = run_power_study(load_plan(args.plan))
    _study_table(report, console)
    paths = write_report(report, _out_dir(args, "power"))
    console.print(f"Results saved to {os.path.dirname(paths['summary'])}")
    return EXIT_OK


def cmd_tau_density(args, console: Console) -> int:
    spec = load_dgp_spec(args.spec)
    result, elapsed = run_timed(tau_density, spec, args.reps, gamma=args.gamma,
                                alpha=args.alpha, bins=args.bins, workers=args.workers)
    settings = {"gamma": args.gamma, "alpha": args.alpha, "bins": args.bins}
    paths = write_density(result, spec, args.reps, _out_dir(args, "tau"), settings)
    console.print(f"{result.taus.size} of {args.reps} replications stopped "
                  f"({100.0 * result.censored_fraction:.2f}% censored) in {elapsed:.1f}s")
    console.print(f"Results saved to {os.path.dirname(paths['summary'])}")
    return EXIT_OK


def cmd_asymptotics(args, console: Console) -> int:
    if args.which == "am-bm":
        a_M, b_M = am_bm(args.delta, args.M, args.c, args.sigma, args.gamma)
        out = {"a_M": a_M, "b_M": b_M,
               "b_M_alternative": bm_alternative_form(args.delta, args.M, args.c,
                                                      args.sigma, args.gamma)}
    elif args.which == "cm-dm":
        c_M, d_M = cm_dm(args.fa1, args.fb1, args.M, args.c, args.sigma, args.gamma,
                         args.beta0_d)
        out = {"c_M": c_M, "d_M": d_M}
    elif args.which == "explosive":
        params = ExplosiveParams(args.delta_d, args.beta0_d, args.s_star)
        thr = explosive_threshold(params, args.M, args.gamma, args.x, args.c, args.sigma)
        out = {"location": thr.location, "f_argument": thr.f_argument,
               "limit_probability": explosive_limit_probability(thr.f_argument)}
    else:
        out = {"x": args.x, "time_scale": rw_time_scale(args.M, args.gamma),
               "probability": simulate_rw_limit(args.x, args.gamma, args.beta0_d, args.fb1,
                                                args.fa1, args.c, args.sigma, reps=args.reps,
                                                grid=args.grid, seed=args.seed)}
    print(to_json(out), end="")
    return EXIT_OK


def cmd_make_data(args, console: Console) -> int:
    spec = make_dgp(args.dgp, args.M, s_star=args.s_star, delta_d=args.delta_d, seed=args.seed,
                    extra_horizon=args.extra)
    frame = simulate_dataset(spec, args.replication, include_eps=not args.no_eps)
    save_results_csv(frame, args.out)
    console.print(f"{len(frame)} rows of {spec.name} saved to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing

def _add_boundary_args(p: argparse.ArgumentParser):
    p.add_argument("--M", type=int, required=True, help="Training sample size")
    p.add_argument("--c", type=float, required=True, help="Critical value")
    p.add_argument("--sigma", type=float, default=1.0, help="Error standard deviation")
    p.add_argument("--gamma", type=float, default=0.0, help="Boundary curvature in [0, 0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmon", description="Sequential change-point monitoring of regressions")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More logging (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critvals", help="Critical values c(gamma, alpha)")
    p.add_argument("--source", choices=SOURCES, default=None,
                   help="Default: table, or simulation with --closed-end")
    p.add_argument("--simulate", action="store_true", help="Same as --source simulation")
    p.add_argument("--gamma", type=_floats, default=list(TABLE_GAMMAS),
                   help="Comma separated gammas")
    p.add_argument("--alpha", type=_floats, default=list(TABLE_ALPHAS),
                   help="Comma separated alphas")
    p.add_argument("--reps", type=int, default=50_000)
    p.add_argument("--grid-size", "--grid", dest="grid_size", type=int, default=10_000,
                   help="Grid points on (0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--closed-end", type=float, default=None, metavar="C_STAR",
                   help="Closed-end monitoring with N = C_STAR * M")
    p.add_argument("--json", help="Save the values to this JSON file")
    p.set_defaults(func=cmd_critvals)

    for name, func in (("monitor", cmd_monitor), ("remonitor", cmd_remonitor)):
        p = sub.add_parser(name, help=f"{name.capitalize()} a CSV file")
        p.add_argument("data", help="CSV file")
        p.add_argument("--config", required=True, help="Run config (TOML or JSON)")
        p.add_argument("--out", help="Directory for report, trajectory and manifest")
        p.add_argument("--json", action="store_true", help="Print the JSON report")
        if name == "monitor":
            p.add_argument("--start", type=int, default=None, help="Override the warm-up row")
        else:
            p.add_argument("--start", type=int, required=True,
                           help="New warm-up row, usually the previous detection row")
            p.add_argument("--previous", type=int, default=None,
                           help="Row of the previous detection")
        p.set_defaults(func=func)

    p = sub.add_parser("kpss", help="KPSS level-stationarity test of a column")
    p.add_argument("data", help="CSV file")
    p.add_argument("--column", required=True)
    p.add_argument("--transform", help="Transform expression, e.g. diff_log(COL)")
    p.add_argument("--bandwidth", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_kpss)

    p = sub.add_parser("describe", help="Summary statistics and KPSS per column")
    p.add_argument("data", help="CSV file")
    p.add_argument("--columns", type=lambda s: [c for c in s.split(",") if c], default=None)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--csv", help="Save the table to this CSV file")
    p.set_defaults(func=cmd_describe)

    for name, func in (("simulate-size", cmd_simulate_size),
                       ("simulate-power", cmd_simulate_power)):
        p = sub.add_parser(name, help=f"Monte Carlo {name.split('-')[1]} study")
        p.add_argument("--plan", required=True, help="Experiment plan (TOML or JSON)")
        p.add_argument("--out", help="Results directory")
        p.set_defaults(func=func)

    p = sub.add_parser("tau-density", help="Distribution of the stopping time")
    p.add_argument("--spec", required=True, help="DGP spec (TOML or JSON)")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="Results directory")
    p.set_defaults(func=cmd_tau_density)

    p = sub.add_parser("asymptotics", help="Stopping-time approximations")
    asub = p.add_subparsers(dest="which", required=True)
    q = asub.add_parser("am-bm", help="Stationary alternative: a_M, b_M")
    q.add_argument("--delta", type=float, required=True)
    _add_boundary_args(q)
    q = asub.add_parser("cm-dm", help="Random walk alternative: c_M, d_M")
    q.add_argument("--fa1", type=float, required=True)
    q.add_argument("--fb1", type=float, required=True)
    q.add_argument("--beta0-d", type=float, required=True)
    _add_boundary_args(q)
    q = asub.add_parser("explosive", help="Explosive alternative threshold")
    q.add_argument("--delta-d", type=float, required=True)
    q.add_argument("--beta0-d", type=float, required=True)
    q.add_argument("--s-star", type=int, default=1)
    q.add_argument("--x", type=float, default=0.0)
    _add_boundary_args(q)
    q = asub.add_parser("rw-limit", help="Integrated Wiener limit probability")
    q.add_argument("--x", type=float, required=True)
    q.add_argument("--fa1", type=float, required=True)
    q.add_argument("--fb1", type=float, required=True)
    q.add_argument("--beta0-d", type=float, required=True)
    q.add_argument("--reps", type=int, default=10_000)
    q.add_argument("--grid", type=int, default=10_000)
    q.add_argument("--seed", type=int, default=0)
    _add_boundary_args(q)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("make-data", help="Write a synthetic CSV from a built-in DGP")
    p.add_argument("--dgp", choices=DGP_IDS, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--s-star", type=int, default=1)
    p.add_argument("--delta-d", type=float, default=None)
    p.add_argument("--extra", type=int, default=None, help="Monitored rows (default 10 M)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--no-eps", action="store_true", help="Leave out the error column")
    p.add_argument("--out", required=True, help="CSV file")
    p.set_defaults(func=cmd_make_data)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    console = Console()

    try:
        return args.func(args, console)
    except _CONFIG_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SeqmonError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
