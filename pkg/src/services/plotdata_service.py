"""Gnuplot-style two-column data files from report CSVs.

For a report ``weyl_residuals.csv`` with ``# x: p`` and ``# group: mu_index``
one file per (series, group) is written, e.g.
``weyl_residuals_residual_mu_index=3.dat``.  Slope reports (``# loglog: true``)
get log10 pairs and, when the report carries ``# fit <series>: slope intercept``,
an extra ``_fit.dat`` file with the endpoints of the fitted line.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from config import CSV_FLOAT_FORMAT
from logger_setup import get_logger
from operators.errors import ReportFormatError

logger = get_logger()


@dataclass
class ParsedReport:
    """Header comments and rows of one report CSV."""
    path: Path
    header: dict[str, str] = field(default_factory=dict)
    columns: list[str] = field(default_factory=list)
    rows: list[list[str]] = field(default_factory=list)

    @property
    def stem(self) -> str:
        return self.path.stem

    def fits(self) -> dict[str, tuple[float, float]]:
        """``# fit <series>: slope intercept`` lines, keyed by series."""
        out = {}
        for key, value in self.header.items():
            if not key.startswith("fit "):
                continue
            parts = value.split()
            try:
                out[key[4:].strip()] = (float(parts[0]), float(parts[1]))
            except (IndexError, ValueError) as e:
                raise ReportFormatError(f"{self.path}: bad fit line '# {key}: {value}'") from e
        return out


def read_report(path) -> ParsedReport:
    """Parse a report CSV written by ReportWriter.

    Raises:
        ReportFormatError: missing file, missing column row, or ragged rows.
    """
    path = Path(path)
    report = ParsedReport(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except OSError as e:
        raise ReportFormatError(f"cannot read report {path}: {e}") from e

    body = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if body:
                raise ReportFormatError(f"{path}:{number}: header comment after the column row")
            key, sep, value = line[1:].partition(":")
            if not sep:
                raise ReportFormatError(f"{path}:{number}: header comment without 'key: value'")
            report.header[key.strip()] = value.strip()
            continue
        body.append((number, line))

    if not body:
        raise ReportFormatError(f"{path}: no column row")
    parsed = list(csv.reader([line for _, line in body]))
    report.columns = parsed[0]
    for (number, _), row in zip(body[1:], parsed[1:]):
        if len(row) != len(report.columns):
            raise ReportFormatError(f"{path}:{number}: expected {len(report.columns)} fields, got {len(row)}")
        report.rows.append(row)
    return report


def _number(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise ReportFormatError(f"{where}: non-numeric value {text!r}") from e


def _series_columns(report: ParsedReport, x: str, group: Optional[str]) -> list[str]:
    """Numeric columns other than x and the group column."""
    skip = {x, group}
    if not report.rows:
        return [c for c in report.columns if c not in skip]
    numeric = []
    for k, name in enumerate(report.columns):
        if name in skip:
            continue
        try:
            float(report.rows[0][k])
        except ValueError:
            continue
        numeric.append(name)
    return numeric


def emit_plotdata(report_path, out_dir=None) -> list[Path]:
    """Write one two-column file per (series, group) of a report.

    Args:
        report_path: report CSV
        out_dir: destination directory; defaults to ``<report dir>/plotdata``

    Returns:
        Paths written, in series order.

    Raises:
        ReportFormatError: malformed report.
    """
    report = read_report(report_path)
    out_dir = Path(out_dir) if out_dir is not None else report.path.parent / "plotdata"
    out_dir.mkdir(parents=True, exist_ok=True)

    x = report.header.get("x") or report.columns[0]
    if x not in report.columns:
        raise ReportFormatError(f"{report.path}: x column {x!r} not in {report.columns}")
    group = report.header.get("group")
    if group is not None and group not in report.columns:
        raise ReportFormatError(f"{report.path}: group column {group!r} not in {report.columns}")
    loglog = report.header.get("loglog", "false").lower() == "true"
    identity = report.header.get("identity", "")

    groups: dict[Optional[str], list[list[str]]] = {}
    if group is None:
        groups[None] = report.rows
    else:
        k = report.columns.index(group)
        for row in report.rows:
            groups.setdefault(row[k], []).append(row)
        if not groups:
            groups[None] = []

    fits = report.fits()
    written = []
    ix = report.columns.index(x)
    for series in _series_columns(report, x, group):
        iy = report.columns.index(series)
        for label, rows in groups.items():
            suffix = f"_{group}={label}" if label is not None else ""
            path = out_dir / f"{report.stem}_{series}{suffix}.dat"
            pairs = []
            for row in rows:
                xv = _number(row[ix], f"{report.path} column {x}")
                yv = _number(row[iy], f"{report.path} column {series}")
                if not (math.isfinite(xv) and math.isfinite(yv)):
                    continue
                if loglog:
                    if xv <= 0 or yv <= 0:
                        continue
                    xv, yv = math.log10(xv), math.log10(yv)
                pairs.append((xv, yv))
            axes = f"log10({x}) log10({series})" if loglog else f"{x} {series}"
            _write_pairs(path, report, axes, identity, pairs)
            written.append(path)
        if loglog and series in fits and groups.get(None):
            written.append(_write_fit(out_dir, report, x, series, fits[series], groups[None], ix, identity))
    logger.info(f"Plot data for {report.path.name}: {len(written)} file(s) in {out_dir}")
    return written


def _write_pairs(path: Path, report: ParsedReport, axes: str, identity: str, pairs) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# report: {report.path.name}\n")
        fh.write(f"# axes: {axes}\n")
        if identity:
            fh.write(f"# identity: {identity}\n")
        for xv, yv in pairs:
            fh.write(f"{CSV_FLOAT_FORMAT % xv} {CSV_FLOAT_FORMAT % yv}\n")


def _write_fit(out_dir: Path, report: ParsedReport, x: str, series: str, fit, rows, ix: int, identity: str) -> Path:
    """Endpoints of log10 y = slope·log10 x + intercept over the x range of the report."""
    slope, intercept = fit
    xs = [math.log10(v) for v in (_number(row[ix], str(report.path)) for row in rows) if v > 0]
    path = out_dir / f"{report.stem}_{series}_fit.dat"
    pairs = [] if not xs else [(v, slope * v + intercept) for v in (min(xs), max(xs))]
    _write_pairs(path, report, f"log10({x}) fitted log10({series}), slope {slope:.6g}", identity, pairs)
    return path
