"""Tests for the logging setup."""

import logging

from logger_setup import get_logger, level_from_env, setup_logger


def test_level_from_env(monkeypatch):
    monkeypatch.setenv("OSCSYM_LOG_LEVEL", "debug")
    assert level_from_env() == logging.DEBUG
    monkeypatch.setenv("OSCSYM_LOG_LEVEL", "15")
    assert level_from_env() == 15
    monkeypatch.setenv("OSCSYM_LOG_LEVEL", "loud")
    assert level_from_env() == logging.INFO


def test_file_log_is_named_by_subcommand(monkeypatch, tmp_path):
    monkeypatch.setenv("OSCSYM_LOG_TO_FILE", "1")
    monkeypatch.setenv("OSCSYM_LOG_DIR", str(tmp_path))
    setup_logger("weyl", logging.INFO)
    get_logger().info("Solving 5 ladder points")
    for handler in get_logger().handlers:
        handler.flush()
    files = list(tmp_path.glob("oscsym_weyl_*.log"))
    assert len(files) == 1
    assert " - weyl - " in files[0].read_text(encoding="utf-8")
    setup_logger("selftest", logging.INFO)


def test_setup_replaces_handlers(capsys):
    setup_logger("compose", logging.INFO)
    setup_logger("kernel", logging.INFO)
    assert len(get_logger().handlers) == 1
    get_logger().info("ladder done")
    assert "[kernel] ladder done" in capsys.readouterr().out
