"""CSV and workbook output for oscsym reports.

Every table becomes one CSV file::

    # experiment: circle_coverage
    # seed: 7
    # identity: ‖Au_p − μu_p‖ → 0 along phase-matched λ_p
    # units: λ dimensionless, residual in L² grid norm
    # x: lam
    lam,residual
    1.600000000000e+01,3.141592653590e-01

With ``xlsx`` enabled the same tables are collected into one workbook, one
sheet per table.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import openpyxl
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter

from config import CSV_FLOAT_FORMAT
from logger_setup import get_logger
from operators.errors import ConfigError

logger = get_logger()

# Header keys understood by plotdata_service
HEADER_KEYS = ("experiment", "seed", "identity", "units", "x", "group", "loglog")


@dataclass
class ReportTable:
    """One report: named columns, rows, and the identity or bound it checks.

    ``x`` names the abscissa column for plot data; ``group`` optionally names
    a column whose values split the rows into separate series; ``loglog``
    marks slope reports.  ``notes`` are extra ``# key: value`` header lines,
    e.g. fitted slopes.
    """
    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    identity: str = ""
    units: str = ""
    x: Optional[str] = None
    group: Optional[str] = None
    loglog: bool = False
    notes: dict[str, str] = field(default_factory=dict)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def format_value(value: Any) -> str:
    """Stable text for a CSV cell: floats as %.12e, complex split by the caller."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return CSV_FLOAT_FORMAT % value
    if isinstance(value, complex):
        sign = "-" if value.imag < 0 else "+"
        return f"{CSV_FLOAT_FORMAT % value.real}{sign}{CSV_FLOAT_FORMAT % abs(value.imag)}j"
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


class ReportWriter:
    """Writes ReportTables below one output directory."""

    def __init__(self, directory, experiment: str, seed: int, xlsx: bool = False):
        """
        Args:
            directory: Output directory, created if missing
            experiment: Experiment name recorded in every header
            seed: Seed recorded in every header
            xlsx: Also collect the tables into ``{experiment}.xlsx``
        """
        self.directory = Path(directory)
        self.experiment = experiment
        self.seed = seed
        self.xlsx = xlsx
        self.written: list[Path] = []
        self._tables: list[ReportTable] = []
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory {self.directory} is not writable: {e}") from e

    def header_lines(self, table: ReportTable) -> list[str]:
        lines = [f"# experiment: {self.experiment}", f"# seed: {self.seed}"]
        if table.identity:
            lines.append(f"# identity: {table.identity}")
        if table.units:
            lines.append(f"# units: {table.units}")
        if table.x:
            lines.append(f"# x: {table.x}")
        if table.group:
            lines.append(f"# group: {table.group}")
        if table.loglog:
            lines.append("# loglog: true")
        for key, value in table.notes.items():
            lines.append(f"# {key}: {value}")
        return lines

    def write(self, table: ReportTable) -> Path:
        """Write one table as ``{directory}/{name}.csv``.

        Raises:
            ConfigError: the file cannot be written.
        """
        path = self.directory / f"{table.name}.csv"
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                for line in self.header_lines(table):
                    fh.write(line + "\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(table.columns)
                for row in table.rows:
                    writer.writerow([format_value(v) for v in row])
        except OSError as e:
            raise ConfigError(f"cannot write report {path}: {e}") from e
        logger.info(f"Wrote {path} ({len(table.rows)} rows)")
        self.written.append(path)
        self._tables.append(table)
        return path

    def write_all(self, tables: list[ReportTable]) -> list[Path]:
        return [self.write(table) for table in tables]

    def save_workbook(self) -> Optional[Path]:
        """Collect every written table into one workbook, if enabled."""
        if not self.xlsx or not self._tables:
            return None
        path = self.directory / f"{self.experiment}.xlsx"
        write_workbook(path, self._tables)
        logger.info(f"Wrote workbook {path} ({len(self._tables)} sheets)")
        self.written.append(path)
        return path


def write_workbook(filepath: Path, tables: list[ReportTable]) -> int:
    """
    Write each table to its own sheet with bold headers.

    Returns the number of sheets written.
    """
    wb = openpyxl.Workbook()
    wb.remove(wb.active)
    bold_font = Font(bold=True)
    used: set[str] = set()

    for table in tables:
        # Excel tab names max 31 chars
        title = table.name[:31]
        suffix = 1
        while title in used:
            suffix += 1
            title = f"{table.name[:28]}_{suffix}"
        used.add(title)
        ws = wb.create_sheet(title)

        for col_idx, header in enumerate(table.columns, start=1):
            cell = ws.cell(row=1, column=col_idx, value=header)
            cell.font = bold_font

        for row_idx, row_data in enumerate(table.rows, start=2):
            for col_idx, value in enumerate(row_data, start=1):
                ws.cell(row=row_idx, column=col_idx, value=_cell_value(value))

        # Auto-fit column widths (approximate)
        for col_idx in range(1, len(table.columns) + 1):
            max_len = len(str(table.columns[col_idx - 1]))
            for row in ws.iter_rows(min_col=col_idx, max_col=col_idx, min_row=2):
                for cell in row:
                    if cell.value is not None:
                        max_len = max(max_len, len(str(cell.value)))
            ws.column_dimensions[get_column_letter(col_idx)].width = min(max_len + 2, 50)

    try:
        wb.save(filepath)
    except OSError as e:
        raise ConfigError(f"cannot write workbook {filepath}: {e}") from e
    return len(tables)


def _cell_value(value: Any):
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, complex):
        return format_value(value)
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value
