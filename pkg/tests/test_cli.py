"""Tests for the oscsym command line."""

from pathlib import Path

import pytest

import main
from operators.errors import PreconditionError
from processors.verification import ExperimentOutcome
from services.report_service import ReportTable, ReportWriter

DEFAULT_CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "default.cfg")


def exit_code(argv):
    with pytest.raises(SystemExit) as excinfo:
        main.main(argv)
    return excinfo.value.code


def passing(cfg, rng):
    outcome = ExperimentOutcome("fake")
    table = ReportTable("fake_values", ["k", "value"], identity="value = k²", units="none")
    for k in range(3):
        table.add(k, float(k * k))
    outcome.tables.append(table)
    outcome.verification.add("squares", True)
    return outcome


def refusing(cfg, rng):
    raise PreconditionError("phase conditions fail")


def test_parser():
    args = main.build_parser().parse_args(["selftest", "--config", "a.cfg", "--seed", "3", "--out", "o"])
    assert (args.subcommand, args.config, args.seed, args.out, args.xlsx) == ("selftest", "a.cfg", 3, "o", False)
    args = main.build_parser().parse_args(["plotdata", "r1.csv", "r2.csv"])
    assert args.reports == ["r1.csv", "r2.csv"]


def test_config_is_required():
    assert exit_code(["weyl"]) == 2


def test_negative_seed(tmp_path):
    assert exit_code(["selftest", "--config", DEFAULT_CONFIG, "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[phase]\nr = 2\n", encoding="utf-8")
    assert exit_code(["compose", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert f"{bad}:2" in capsys.readouterr().out


def test_passing_run_writes_reports(monkeypatch, tmp_path, capsys):
    monkeypatch.setitem(main.SUBCOMMANDS, "compose", passing)
    assert exit_code(["compose", "--config", DEFAULT_CONFIG, "--out", str(tmp_path), "--xlsx"]) == 0
    report = tmp_path / "compose" / "fake_values.csv"
    assert report.exists()
    assert (tmp_path / "compose" / "default.xlsx").exists()
    out = capsys.readouterr().out
    assert "1 passed, 0 failed" in out


def test_refused_run_fails(monkeypatch, tmp_path, capsys):
    monkeypatch.setitem(main.SUBCOMMANDS, "weyl", refusing)
    assert exit_code(["weyl", "--config", DEFAULT_CONFIG, "--out", str(tmp_path)]) == 1
    assert "PreconditionError: phase conditions fail" in capsys.readouterr().out


def test_seed_reaches_the_header(monkeypatch, tmp_path):
    monkeypatch.setitem(main.SUBCOMMANDS, "compose", passing)
    exit_code(["compose", "--config", DEFAULT_CONFIG, "--out", str(tmp_path), "--seed", "42"])
    lines = (tmp_path / "compose" / "fake_values.csv").read_text(encoding="utf-8").splitlines()
    assert lines[1] == "# seed: 42"


def test_plotdata(tmp_path):
    table = ReportTable("ladder", ["lam", "error"], x="lam")
    table.add(16.0, 0.5)
    table.add(64.0, 0.25)
    report = ReportWriter(tmp_path, "default", 7).write(table)
    assert exit_code(["plotdata", str(report), "--out", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "ladder_error.dat").exists()
    broken = tmp_path / "broken.csv"
    broken.write_text("# no column row\n", encoding="utf-8")
    assert exit_code(["plotdata", str(report), str(broken)]) == 1
