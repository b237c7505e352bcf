"""CSV and gnuplot data files for reports."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = ["format_value", "report_csv", "report_dat", "emit_plots"]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(v)
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{float(v):.6e}"
    return str(v)


def _header(report, lead: str):
    lines = [f"{lead} {report.name}"]
    if getattr(report, "description", ""):
        lines.append(f"{lead} {report.description}")
    lines += [f"{lead} {d}" for d in report.column_doc]
    return lines


def report_csv(report) -> str:
    lines = _header(report, "#")
    lines.append(",".join(report.columns))
    for rec in report.records():
        lines.append(",".join(format_value(v) for v in rec))
    return "\n".join(lines) + "\n"


def report_dat(report) -> str:
    """Whitespace-separated columns; empty cells become ``nan`` for gnuplot."""
    lines = _header(report, "#")
    lines.append("# " + " ".join(report.columns))
    for rec in report.records():
        lines.append(" ".join(format_value(v) or "nan" for v in rec))
    return "\n".join(lines) + "\n"


def emit_plots(reports, out_dir) -> list:
    """Write ``<name>.csv`` and ``<name>.dat`` per report; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for rep in reports:
        for suffix, render in ((".csv", report_csv), (".dat", report_dat)):
            p = out / f"{rep.name}{suffix}"
            p.write_text(render(rep))
            paths.append(p)
    return paths
