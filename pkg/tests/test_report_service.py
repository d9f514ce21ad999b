"""Tests for report CSVs, workbooks, plot data and the check bookkeeping."""

import math

import openpyxl
import pytest

from operators.errors import ConfigError, ReportFormatError
from processors.slope_regression import check_slope, fit_loglog, ladder_table, local_slopes
from processors.verification import ExperimentOutcome, VerificationResult, guarded
from services.plotdata_service import emit_plotdata, read_report
from services.report_service import ReportTable, ReportWriter, format_value


def ladder():
    t = [16.0, 64.0, 256.0, 1024.0]
    e = [v ** -0.5 for v in t]
    fit = fit_loglog(t, e)
    return ladder_table("remainder", "lam", t, {"error": e}, "‖R_N‖ = O(λ^{-1/2})", "λ dimensionless", {"error": fit})


# ── CSV reports ──


def test_header_names_identity_and_units(tmp_path):
    writer = ReportWriter(tmp_path, "default", 7)
    path = writer.write(ladder())
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:6] == [
        "# experiment: default",
        "# seed: 7",
        "# identity: ‖R_N‖ = O(λ^{-1/2})",
        "# units: λ dimensionless",
        "# x: lam",
        "# loglog: true",
    ]
    assert lines[6].startswith("# fit error: -5.000000000000e-01 ")
    assert lines[7] == "lam,error"
    assert lines[8] == "1.600000000000e+01,2.500000000000e-01"


def test_empty_report_has_header_only(tmp_path):
    table = ReportTable("empty", ["a", "b"], identity="none", units="none")
    path = ReportWriter(tmp_path, "default", 0).write(table)
    assert path.read_text(encoding="utf-8").splitlines()[-1] == "a,b"


def test_row_width_is_checked():
    table = ReportTable("t", ["a", "b"])
    with pytest.raises(ValueError):
        table.add(1.0)


@pytest.mark.parametrize(
    "value, text",
    [
        (True, "true"),
        (3, "3"),
        (0.5, "5.000000000000e-01"),
        (math.nan, "nan"),
        (-math.inf, "-inf"),
        (1.0 - 2.0j, "1.000000000000e+00-2.000000000000e+00j"),
        ("bump", "bump"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_identical_tables_give_identical_bytes(tmp_path):
    first = ReportWriter(tmp_path / "a", "default", 7).write(ladder())
    second = ReportWriter(tmp_path / "b", "default", 7).write(ladder())
    assert first.read_bytes() == second.read_bytes()


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        ReportWriter(blocker / "sub", "default", 0)


def test_workbook(tmp_path):
    writer = ReportWriter(tmp_path, "default", 7, xlsx=True)
    table = ReportTable("values", ["name", "z"])
    table.add("first", 1.0 + 1.0j)
    writer.write_all([ladder(), table])
    path = writer.save_workbook()
    wb = openpyxl.load_workbook(path)
    assert wb.sheetnames == ["remainder", "values"]
    assert wb["remainder"].cell(row=1, column=1).value == "lam"
    assert wb["remainder"].cell(row=1, column=1).font.bold
    assert wb["values"].cell(row=2, column=2).value == format_value(1.0 + 1.0j)


def test_no_workbook_unless_enabled(tmp_path):
    writer = ReportWriter(tmp_path, "default", 7)
    writer.write(ladder())
    assert writer.save_workbook() is None


# ── Plot data ──


def test_plotdata_loglog_with_fit(tmp_path):
    path = ReportWriter(tmp_path, "default", 7).write(ladder())
    written = emit_plotdata(path)
    assert [p.name for p in written] == ["remainder_error.dat", "remainder_error_fit.dat"]
    data = [line for line in written[0].read_text().splitlines() if not line.startswith("#")]
    first = [float(v) for v in data[0].split()]
    assert first == pytest.approx([math.log10(16.0), -0.5 * math.log10(16.0)])
    fit = [line for line in written[1].read_text().splitlines() if not line.startswith("#")]
    assert len(fit) == 2


def test_plotdata_groups(tmp_path):
    table = ReportTable("weyl", ["mu_index", "p", "residual"], x="p", group="mu_index")
    for k in range(2):
        for p in range(3):
            table.add(k, p, 0.1 * (p + 1))
    path = ReportWriter(tmp_path, "default", 7).write(table)
    written = emit_plotdata(path, tmp_path / "plots")
    assert sorted(p.name for p in written) == ["weyl_residual_mu_index=0.dat", "weyl_residual_mu_index=1.dat"]
    assert all(p.parent == tmp_path / "plots" for p in written)


def test_plotdata_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# x: a\na,b\n1,2\n3\n", encoding="utf-8")
    with pytest.raises(ReportFormatError, match="bad.csv:4"):
        read_report(path)


def test_plotdata_rejects_unknown_x(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# x: c\na,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ReportFormatError):
        emit_plotdata(path)


# ── Slopes and checks ──


def test_fit_drops_noise_floor():
    fit = fit_loglog([1.0, 10.0, 100.0, 1000.0], [1.0, 0.1, 0.01, 0.0])
    assert fit.slope == pytest.approx(-1.0)
    assert fit.points == 3
    assert fit.below_floor == 1
    assert not fit_loglog([1.0, 2.0], [0.0, 0.0]).resolved


def test_local_slopes():
    slopes = local_slopes([1.0, 10.0, 100.0], [1.0, 0.01, 0.0001])
    assert slopes == pytest.approx([-2.0, -2.0, -2.0])


def test_check_slope_tolerance():
    result = VerificationResult()
    fit = fit_loglog([1.0, 10.0], [1.0, 10.0 ** -0.9])
    assert check_slope(result, "decay", fit, -1.0, tolerance=0.15)
    assert not check_slope(result, "decay", fit, -1.0, tolerance=0.05)
    assert [c.passed for c in result.checks] == [True, False]


def test_summary_lines():
    result = VerificationResult()
    result.add("identity", True, "exact")
    result.at_most("residual", math.nan, 1e-8)
    lines = result.summary_lines()
    assert "VERIFICATION SUMMARY" in lines
    assert "  ✓ identity — exact" in lines
    assert lines[-1] == "1 passed, 1 failed"


def test_guarded_records_domain_errors():
    from operators.errors import DomainError

    outcome = ExperimentOutcome("demo")

    def fails():
        raise DomainError("r outside [0, 1)")

    assert not guarded(outcome, "phase check", fails)
    assert not outcome.all_passed
    assert outcome.verification.checks[0].detail == "DomainError: r outside [0, 1)"
