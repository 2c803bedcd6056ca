"""
Reporting module.
Writes command tables as CSV with unit-annotated headers, verification reports as JSON,
and optional gnuplot scripts for sweep tables.
"""
import logging
import math
import os
from typing import Dict, List, Optional, Sequence

import pandas as pd

from phi4flow.context import RunContext
from phi4flow.interfaces import SuiteStatus, SweepReport, combine_status, reports_status
from phi4flow.utils import save_csv, save_json

logger = logging.getLogger(__name__)

# column -> unit; mass dimension 4 - n for CAS values
UNITS: Dict[str, str] = {
    "row": "1",
    "l": "1",
    "n": "1",
    "a0": "1/mass",
    "a": "1/mass",
    "method": "-",
    "value": "mass^(4-n)",
    "value_half": "mass^(4-n)",
    "error": "mass^(4-n)",
    "defect": "mass^(4-n)",
    "difference": "mass^(4-n)",
    "interpolation_error": "mass^(4-n)",
    "d": "mass^2",
    "b": "1",
    "c": "1",
    "scale": "mass",
    "ratio": "1",
    "alpha": "1",
    "empirical": "1",
    "bound": "1",
    "w": "-",
    "log_defect": "1",
    "log_tail": "1",
    "log_defect_over_a0_8": "1",
    "quantity": "-",
    "unit": "-",
    "momenta": "mass",
}


def cas_unit(n: int) -> str:
    """Mass dimension 4 - n of an n-point CAS function."""
    dimension = 4 - n
    if dimension == 0:
        return "1"
    return "mass" if dimension == 1 else f"mass^{dimension}"


def with_units(df: pd.DataFrame, units: Optional[Dict[str, str]] = None) -> pd.DataFrame:
    """Rename columns to 'name[unit]'; units overrides the defaults per column."""
    lookup = {**UNITS, **(units or {})}
    return df.rename(columns={c: f"{c}[{lookup.get(c, '1')}]" for c in df.columns})


def write_table(df: pd.DataFrame, path: str, units: Optional[Dict[str, str]] = None) -> str:
    save_csv(with_units(df, units), path)
    logger.info(f"[Reporting] Wrote {len(df)} rows to {path}")
    return path


def gnuplot_script(report: SweepReport, csv_name: str) -> str:
    """Log-log plot of the sweep table with the fitted line, if any."""
    columns = list(report.table.columns)
    # power counting fits against 1/a + m rather than the swept a
    x_col = "scale" if "scale" in columns else report.variable
    y_col = next((c for c in ("defect", "difference", "value", "ratio", "empirical") if c in columns), columns[-1])
    x_idx = columns.index(x_col) + 1
    y_idx = columns.index(y_col) + 1
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale xy",
        f"set xlabel '{x_col} [{UNITS.get(x_col, '1')}]'",
        f"set ylabel '|{y_col}| [{UNITS.get(y_col, '1')}]'",
        f"set title '{report.suite}: {report.case} ({report.status.value})'",
    ]
    plot = f"plot '{csv_name}' using {x_idx}:(abs(${y_idx})) with linespoints title '{y_col}'"
    if report.fit_bearing and report.intercept is not None:
        plot += f", exp({report.intercept!r}) * x**({report.slope!r}) title 'fit slope {report.slope:.4f}'"
    lines.append(plot)
    return "\n".join(lines) + "\n"


def write_suite_report(ctx: RunContext, reports: Sequence[SweepReport], emit_gnuplot: bool = False) -> SuiteStatus:
    """
    Write one CSV per sweep table and the JSON summary.

    Returns:
        Overall status across all suites
    """
    suites: Dict[str, List[SweepReport]] = {}
    for report in reports:
        suites.setdefault(report.suite, []).append(report)

    summary = {}
    for name, items in suites.items():
        entries = []
        for report in items:
            csv_path = ctx.sweep_csv(report.suite, report.case)
            write_table(report.table, csv_path)
            entry = report.to_dict()
            entry["table"] = os.path.basename(csv_path)
            if emit_gnuplot:
                gp_path = ctx.sweep_gnuplot(report.suite, report.case)
                with open(gp_path, "w") as fh:
                    fh.write(gnuplot_script(report, os.path.basename(csv_path)))
                entry["gnuplot"] = os.path.basename(gp_path)
            entries.append(entry)
        summary[name] = {"status": reports_status(items).value, "reports": entries}

    overall = combine_status([reports_status(items) for items in suites.values()]) if suites else SuiteStatus.PASS
    save_json({"status": overall.value, "suites": summary}, ctx.verify_json)
    logger.info(f"[Reporting] Verification report: {ctx.verify_json} ({overall.value})")
    return overall


def format_summary(reports: Sequence[SweepReport]) -> str:
    """One line per report for the console."""
    lines = []
    for r in reports:
        fit = "" if r.slope is None or not math.isfinite(r.slope) else f" slope={r.slope:.4f}"
        tag = " (by design)" if r.inconclusive_by_design and r.status == SuiteStatus.INCONCLUSIVE else ""
        tag += "".join(f" [{flag}]" for flag in r.flags)
        lines.append(f"{r.suite:>15} {r.case:<40} {r.status.value}{tag}{fit}")
    return "\n".join(lines)
