"""Command line interface.

Subcommands: run, sweep-kappa, sweep-eps, sweep-joint, cont-dep, apriori,
check-operators.  Every subcommand reads one INI config (--config), prints a
human-readable table (or CSV with --csv), and, when --out is given, writes
report.csv plus a rendered figure into that directory.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 acceptance-threshold failure (sweeps with --min-slope).
"""

import argparse
import os
import sys
from dataclasses import replace

from . import experiments, norms, reporting
from .experiments import ConfigError
from .linalg import LinearSolverError, NewtonError
from .stepper import StepError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_THRESHOLD = 3

#: slopes checked against --min-slope
HEADLINE_METRICS = ("max_u_H", "max_ug_vdual")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="diskphase",
        description="bulk-surface phase-field experiments on the disk",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "single solver run; reports final norms and energy"),
        ("sweep-kappa", "vanishing surface diffusion sweep"),
        ("sweep-eps", "vanishing bulk-potential weight sweep"),
        ("sweep-joint", "diagonal joint sweep against sqrt(eps)+sqrt(kappa)"),
        ("cont-dep", "continuous-dependence ratios over forcing perturbations"),
        ("apriori", "a priori quantity table over a parameter family"),
        ("check-operators", "exactness self-checks of the discrete operators"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=name != "check-operators")
        cmd.add_argument("--out", help="directory for report.csv and figures")
        cmd.add_argument("--jobs", type=int, default=1)
        cmd.add_argument("--csv", action="store_true", help="print CSV instead of a table")
        if name.startswith("sweep"):
            cmd.add_argument(
                "--min-slope",
                type=float,
                default=None,
                help="fail (exit 3) if a headline slope is below this",
            )
            cmd.add_argument(
                "--stabilization",
                action="store_true",
                help="repeat the sweep at dt/2 and report the slope gap",
            )
        if name == "cont-dep":
            cmd.add_argument(
                "--deltas",
                default="1e-1,1e-2,1e-3",
                help="comma-separated forcing perturbation scales",
            )
    return parser


def _emit(args, rows, table_text, plot_fn=None):
    if args.csv:
        sys.stdout.write(reporting.rows_to_csv_text(rows))
    else:
        print(table_text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        reporting.write_csv(rows, os.path.join(args.out, "report.csv"))
        if plot_fn is not None:
            plot_fn(os.path.join(args.out, "report.png"))


def _cmd_run(args):
    config, _, _ = experiments.load_config(args.config)
    config.validate()
    grid = config.grid()
    state, diagnostics = experiments.run_single(config)
    energy = norms.energy(grid, state, config.potentials, config.variant.kappa, config.lam)
    rows = [
        ("final", "t", f"{state.t:.10g}", ""),
        ("final", "u_H", f"{norms.l2_bulk(grid, state.u):.12e}", ""),
        ("final", "u_V", f"{norms.h1_bulk(grid, state.u, state.u_gamma):.12e}", ""),
        ("final", "ug_H", f"{norms.l2_surface(grid, state.u_gamma):.12e}", ""),
        ("final", "energy", f"{energy:.12e}", ""),
        ("final", "newton_iterations_total", str(sum(diagnostics["newton_iterations"])), ""),
    ]
    table = "\n".join(f"{r[1]:>26}  {r[2]}" for r in rows)

    def plot(path):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5.5, 5.0), subplot_kw={"projection": "polar"})
        mesh = ax.pcolormesh(grid.theta, grid.r, state.u, shading="nearest")
        fig.colorbar(mesh, ax=ax, label="u at final time")
        fig.tight_layout()
        fig.savefig(path, dpi=130)
        plt.close(fig)

    _emit(args, rows, table, plot)
    return EXIT_OK


def _cmd_sweep(args, which):
    config, values, _ = experiments.load_config(args.config)
    config.validate()
    if not values:
        raise ConfigError("sweep requires [sweep] values in the config")
    kwargs = dict(stabilization=args.stabilization, jobs=args.jobs)
    if which == "kappa":
        report = experiments.sweep_kappa(config, values, **kwargs)
    elif which == "eps":
        report = experiments.sweep_eps(config, values, **kwargs)
    else:
        report = experiments.sweep_joint(config, [(v, v) for v in values], **kwargs)
    rows = reporting.rate_report_rows(report)
    _emit(
        args,
        rows,
        reporting.format_rate_table(report),
        lambda path: reporting.plot_rate_report(report, path),
    )
    if args.min_slope is not None:
        for name in HEADLINE_METRICS:
            slope = report.slopes[name][0]
            if not slope >= args.min_slope:
                print(
                    f"threshold failure: slope of {name} is {slope:.4f} "
                    f"< {args.min_slope}",
                    file=sys.stderr,
                )
                return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_cont_dep(args):
    config, _, _ = experiments.load_config(args.config)
    config.validate()
    try:
        deltas = [float(d) for d in args.deltas.split(",") if d.strip()]
    except ValueError:
        raise ConfigError(f"bad --deltas {args.deltas!r}") from None
    if not deltas:
        raise ConfigError("need at least one perturbation scale")
    reports = []
    for delta in deltas:
        perturbed = replace(config, f=f"({config.f})+({delta})*cos(theta)")
        reports.append(
            experiments.continuous_dependence(config.variant, perturbed, config)
        )
    rows = reporting.stability_rows(reports)
    _emit(
        args,
        rows,
        reporting.format_stability_table(reports),
        lambda path: reporting.plot_stability(reports, path),
    )
    return EXIT_OK


def _cmd_apriori(args):
    config, values, family = experiments.load_config(args.config)
    config.validate()
    if not values:
        raise ConfigError("apriori requires [sweep] values in the config")
    table = experiments.apriori(config, family, values, jobs=args.jobs)
    rows = reporting.apriori_rows(table)
    _emit(
        args,
        rows,
        reporting.format_apriori_table(table),
        lambda path: reporting.plot_apriori(table, path),
    )
    return EXIT_OK


def _cmd_check_operators(args):
    report = experiments.check_operators()
    rows = reporting.operator_rows(report)
    _emit(args, rows, reporting.format_operator_table(report))
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep-kappa":
            return _cmd_sweep(args, "kappa")
        if args.command == "sweep-eps":
            return _cmd_sweep(args, "eps")
        if args.command == "sweep-joint":
            return _cmd_sweep(args, "joint")
        if args.command == "cont-dep":
            return _cmd_cont_dep(args)
        if args.command == "apriori":
            return _cmd_apriori(args)
        if args.command == "check-operators":
            return _cmd_check_operators(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, NewtonError, LinearSolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
