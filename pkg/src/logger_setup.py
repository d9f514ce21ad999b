"""Structured logging setup for oscsym."""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv

from config import LOG_NAME

CONSOLE_FORMAT = "%(asctime)s - %(levelname)s - [%(subcommand)s] %(message)s"
FILE_FORMAT = "%(asctime)s - %(levelname)s - %(subcommand)s - %(module)s.%(funcName)s:%(lineno)d - %(message)s"


class SubcommandFilter(logging.Filter):
    """Stamps every record with the subcommand being run."""

    def __init__(self, subcommand: str):
        super().__init__()
        self.subcommand = subcommand

    def filter(self, record: logging.LogRecord) -> bool:
        record.subcommand = self.subcommand
        return True


def level_from_env(default: int = logging.INFO) -> int:
    """Resolve OSCSYM_LOG_LEVEL (name or number) to a logging level."""
    raw = os.environ.get("OSCSYM_LOG_LEVEL", "").strip()
    if not raw:
        return default
    if raw.isdigit():
        return int(raw)
    level = logging.getLevelName(raw.upper())
    return level if isinstance(level, int) else default


def log_directory() -> Path:
    override = os.environ.get("OSCSYM_LOG_DIR", "").strip()
    return Path(override) if override else Path(__file__).resolve().parent.parent / "logs"


def setup_logger(subcommand: str = "-", log_level: int | None = None) -> logging.Logger:
    """
    Configure the oscsym logger for one CLI run.

    Console records go to stdout. Unless OSCSYM_LOG_TO_FILE=0, a detailed copy
    is appended to <log dir>/oscsym_<subcommand>_YYYYMMDD.log.
    Calling it again replaces the handlers of the previous run.
    """
    load_dotenv()
    level = level_from_env() if log_level is None else log_level
    logger = logging.getLogger(LOG_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(level)
    logger.propagate = False
    stamp = SubcommandFilter(subcommand)

    console = logging.StreamHandler(sys.stdout)
    console.setLevel(level)
    console.addFilter(stamp)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt="%H:%M:%S"))
    logger.addHandler(console)

    if os.environ.get("OSCSYM_LOG_TO_FILE", "1") != "0":
        log_dir = log_directory()
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            log_file = log_dir / f"{LOG_NAME}_{subcommand}_{datetime.now().strftime('%Y%m%d')}.log"
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
        except OSError as e:
            logger.warning(f"File logging disabled: {e}")
        else:
            file_handler.setLevel(level)
            file_handler.addFilter(stamp)
            file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
            logger.addHandler(file_handler)

    return logger


def get_logger(name: str = LOG_NAME) -> logging.Logger:
    """Get the shared oscsym logger; handlers are attached by setup_logger."""
    return logging.getLogger(name)
