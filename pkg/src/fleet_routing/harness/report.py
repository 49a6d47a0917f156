"""
CSV and markdown rendering of benchmark and sweep results.
[CTX:PBI-5:5-3:REPORT]

Tables:
- main: best value, then per variant the solve time or "(gap%)" on timeout,
  plus the sub-tour cut count of vehicle-flow variants
- root: per variant the root relaxation time and its gap to the best value
- first: per variant the time of the first incumbent and its gap to the best value
"""
import csv
import io
import math
from typing import Optional, Sequence

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.harness.bench import BenchCell, BenchReport, BenchRow
from fleet_routing.harness.sweep import SweepPoint
from fleet_routing.solver.gap import format_percent

TABLES = ("main", "root", "first")
FORMATS = ("csv", "markdown")


class ReportError(FleetRoutingError):
    """Raised for empty input or an unknown table or format."""
    pass


def format_number(value: Optional[float]) -> str:
    if value is None or not math.isfinite(value):
        return "-"
    return f"{value:.2f}"


def time_or_gap(cell: BenchCell) -> str:
    if cell.solved:
        return format_number(cell.wall_s)
    return f"({format_percent(cell.gap)}%)"


def _gap_text(fraction: float) -> str:
    return "-" if math.isinf(fraction) else f"{format_percent(fraction)}%"


def _variants(rows: Sequence[BenchRow]) -> list[str]:
    return list(rows[0].cells)


def build_table(rows: Sequence[BenchRow], table: str = "main") -> tuple[list[str], list[list[str]], list[set[int]]]:
    """
    Header, body and the bold column indices of every body row.

    Raises:
        ReportError: For no rows or an unknown table
    """
    if not rows:
        raise ReportError("Cannot write a report without rows")
    if table not in TABLES:
        raise ReportError(f"Unknown table '{table}', expected one of {list(TABLES)}")
    variants = _variants(rows)
    vehicle_flow = {v for v in variants if rows[0].cells[v].subtour_cuts is not None}

    header = ["instance", "best"]
    for v in variants:
        if table == "main":
            header.append(v)
            if v in vehicle_flow:
                header.append(f"{v} cuts")
        else:
            header.extend([f"{v} time", f"{v} gap"])

    body, bold = [], []
    for row in rows:
        line = [row.instance, format_number(row.best_value)]
        marked: set[int] = set()
        best = set(row.best_variants()) if table == "main" else set()
        for v in variants:
            cell = row.cells[v]
            if table == "main":
                if v in best:
                    marked.add(len(line))
                line.append(time_or_gap(cell))
                if v in vehicle_flow:
                    line.append(str(cell.subtour_cuts))
            elif table == "root":
                line.extend([format_number(cell.root_lp_s), _gap_text(row.root_gap(v))])
            else:
                line.extend([format_number(cell.first_incumbent_s), _gap_text(row.first_gap(v))])
        body.append(line)
        bold.append(marked)
    return header, body, bold


def _summary_line(rows: Sequence[BenchRow], header: list[str]) -> list[str]:
    report = BenchReport(rows=list(rows), variants=_variants(rows))
    line = ["Avg. gap", ""]
    for name in header[2:]:
        if name in report.variants:
            avg = report.avg_gap(name)
            line.append("" if avg is None else _gap_text(avg))
        else:
            line.append("")
    return line


def _csv(header: list[str], body: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)
    return buffer.getvalue()


def _markdown(header: list[str], body: list[list[str]], bold: Optional[list[set[int]]] = None) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    for r, line in enumerate(body):
        marked = bold[r] if bold and r < len(bold) else set()
        cells = [f"**{text}**" if c in marked else text for c, text in enumerate(line)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_report(rows: Sequence[BenchRow] | BenchReport, fmt: str = "csv", table: str = "main") -> str:
    """
    Render benchmark rows.

    CSV holds the header and one line per instance. Markdown marks the best
    time-or-gap cell of each row in bold and, for the main table, closes with
    the average gap over unsolved rows.

    Raises:
        ReportError: For no rows, an unknown format or an unknown table
    """
    if isinstance(rows, BenchReport):
        rows = rows.rows
    if fmt not in FORMATS:
        raise ReportError(f"Unknown format '{fmt}', expected one of {list(FORMATS)}")
    header, body, bold = build_table(rows, table)
    if fmt == "csv":
        return _csv(header, body)
    if table == "main":
        body = body + [_summary_line(rows, header)]
    return _markdown(header, body, bold)


def write_sweep_report(points: Sequence[SweepPoint], fmt: str = "csv") -> str:
    """
    Render a budget sweep, one line per budget.

    Raises:
        ReportError: For no points or an unknown format
    """
    if not points:
        raise ReportError("Cannot write a sweep report without points")
    if fmt not in FORMATS:
        raise ReportError(f"Unknown format '{fmt}', expected one of {list(FORMATS)}")
    header = ["budget_s", "heuristic_s", "mip_s", "warm_value", "objective", "gap", "solved"]
    body = [
        [
            format_number(p.budget_s),
            format_number(p.heuristic_s),
            format_number(p.mip_s),
            format_number(p.warm_value),
            format_number(p.objective),
            _gap_text(p.gap),
            "yes" if p.solved else "no",
        ]
        for p in points
    ]
    return _csv(header, body) if fmt == "csv" else _markdown(header, body)
