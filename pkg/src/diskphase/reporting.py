"""Report rendering: CSV rows, human-readable tables, and rate figures.

The CSV schema for sweeps is one row per (parameter value, metric) with
columns param, metric_name, value, slope_so_far; slope_so_far is the log-log
fit using the values seen up to and including that row (blank until two
points exist).  Figures are log-log plots of the same data, written next to
the delimited output.
"""

import csv
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .experiments import (
    APRIORI_COLUMNS,
    METRIC_NAMES,
    OperatorCheckReport,
    RateReport,
    StabilityReport,
    fit_rate,
)


def rate_report_rows(report: RateReport):
    """Flatten a RateReport into (param, metric_name, value, slope_so_far)."""
    rows = []
    for name in METRIC_NAMES:
        values = report.metrics[name]
        for i, (param, value) in enumerate(zip(report.abscissa, values)):
            if i >= 1 and all(v > 0.0 for v in values[: i + 1]):
                slope = fit_rate(report.abscissa[: i + 1], values[: i + 1])[0]
                slope_text = f"{slope:.6g}"
            else:
                slope_text = ""
            rows.append((f"{param:.10g}", name, f"{value:.12e}", slope_text))
    return rows


def write_csv(rows, path_or_file, header=("param", "metric_name", "value", "slope_so_far")):
    """Write rows (with header) either to a path or an open text file."""
    if hasattr(path_or_file, "write"):
        writer = csv.writer(path_or_file)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as handle:
        write_csv(rows, handle, header=header)


def rows_to_csv_text(rows, header=("param", "metric_name", "value", "slope_so_far")) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, header=header)
    return buf.getvalue()


def format_rate_table(report: RateReport) -> str:
    """Human-readable sweep table with one metric column per error norm."""
    lines = [f"{report.sweep} sweep ({len(report.params)} values)"]
    head = ["param"] + [name for name in METRIC_NAMES]
    widths = [max(12, len(h) + 2) for h in head]
    lines.append("".join(h.rjust(w) for h, w in zip(head, widths)))
    for i, param in enumerate(report.abscissa):
        cells = [f"{param:.6g}"] + [
            f"{report.metrics[name][i]:.4e}" for name in METRIC_NAMES
        ]
        lines.append("".join(c.rjust(w) for c, w in zip(cells, widths)))
    slope_cells = ["slope"] + [
        f"{report.slopes[name][0]:.4f}" for name in METRIC_NAMES
    ]
    lines.append("".join(c.rjust(w) for c, w in zip(slope_cells, widths)))
    if report.stabilization_gap is not None:
        gap_cells = ["dt-gap"] + [
            f"{report.stabilization_gap[name]:.4f}" for name in METRIC_NAMES
        ]
        lines.append("".join(c.rjust(w) for c, w in zip(gap_cells, widths)))
    return "\n".join(lines)


def plot_rate_report(report: RateReport, path: str):
    """Log-log figure of every metric against the sweep abscissa."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    x = np.asarray(report.abscissa)
    for name in METRIC_NAMES:
        y = np.asarray(report.metrics[name])
        if np.all(y > 0.0):
            slope = report.slopes[name][0]
            ax.loglog(x, y, "o-", label=f"{name} (slope {slope:.2f})")
    ref = x ** 0.5 * min(
        max(np.max(report.metrics[name]), 1e-300) for name in METRIC_NAMES
    ) / max(np.max(x) ** 0.5, 1e-300)
    ax.loglog(x, ref, "k--", alpha=0.5, label="slope 1/2 reference")
    ax.set_xlabel("swept parameter" if report.sweep != "joint" else "sqrt(eps) + sqrt(kappa)")
    ax.set_ylabel("error metric")
    ax.set_title(f"{report.sweep} sweep")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def stability_rows(reports):
    rows = []
    for rep in reports:
        rows.append(
            (
                f"{rep.perturbation:.10g}",
                f"ratio[{rep.variant_kind}]",
                f"{rep.ratio:.12e}",
                "",
            )
        )
    return rows


def format_stability_table(reports) -> str:
    lines = ["continuous dependence"]
    lines.append(f"{'variant':>14}{'lhs':>16}{'rhs':>16}{'ratio':>16}")
    for rep in reports:
        lines.append(
            f"{rep.variant_kind:>14}{rep.lhs:>16.6e}{rep.rhs:>16.6e}{rep.ratio:>16.6e}"
        )
    if reports:
        lines.append(f"note: {reports[0].note}")
    return "\n".join(lines)


def plot_stability(reports, path: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [rep.perturbation for rep in reports]
    ys = [rep.ratio for rep in reports]
    ax.semilogx(xs, ys, "o-")
    ax.set_xlabel("data perturbation size")
    ax.set_ylabel("stability ratio (solution/data)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def apriori_rows(table):
    rows = []
    for row in table:
        for key in row:
            if key == "param":
                continue
            rows.append((f"{row['param']:.10g}", key, f"{row[key]:.12e}", ""))
    return rows


def format_apriori_table(table) -> str:
    columns = list(APRIORI_COLUMNS)
    if any("sqrt_tau_dt_ug_L2H" in row for row in table):
        columns.append("sqrt_tau_dt_ug_L2H")
    widths = [max(12, len(c) + 2) for c in ["param"] + columns]
    lines = ["a priori quantities"]
    lines.append("".join(h.rjust(w) for h, w in zip(["param"] + columns, widths)))
    for row in table:
        cells = [f"{row['param']:.6g}"] + [
            f"{row[c]:.4e}" if c in row else "" for c in columns
        ]
        lines.append("".join(c.rjust(w) for c, w in zip(cells, widths)))
    return "\n".join(lines)


def plot_apriori(table, path: str):
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    params = [row["param"] for row in table]
    for col in APRIORI_COLUMNS:
        vals = [row[col] for row in table]
        if all(v > 0.0 for v in vals):
            ax.loglog(params, vals, "o-", label=col)
    ax.set_xlabel("family parameter")
    ax.set_ylabel("quantity")
    ax.set_title("a priori bounds across the family")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def operator_rows(report: OperatorCheckReport):
    rows = []
    for row in report.rows:
        grid = f"{row['nr']}x{row['ntheta']}"
        for key in (
            "green_residual",
            "beltrami_conservation",
            "beltrami_row_sum",
            "eigenvalue",
            "eigenvalue_closed_form_error",
            "eigenvalue_continuum_error",
        ):
            rows.append((grid, key, f"{row[key]:.12e}", ""))
        rows.append((grid, "passed", str(row["passed"]), ""))
    return rows


def format_operator_table(report: OperatorCheckReport) -> str:
    lines = ["operator self-checks"]
    for row in report.rows:
        lines.append(
            f"  {row['nr']:>3}x{row['ntheta']:<4} green {row['green_residual']:.3e}"
            f"  conservation {row['beltrami_conservation']:.3e}"
            f"  eig {row['eigenvalue']:.8f}"
            f"  {'PASS' if row['passed'] else 'FAIL'}"
        )
    lines.append(report.message)
    return "\n".join(lines)
