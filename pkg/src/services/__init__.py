"""Services package for oscsym: report and plot-data output."""

from services.plotdata_service import emit_plotdata, read_report
from services.report_service import ReportTable, ReportWriter

__all__ = ["ReportTable", "ReportWriter", "emit_plotdata", "read_report"]
