"""Shared fixtures; puts src/ on sys.path the way run.sh runs main.py."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

os.environ.setdefault("OSCSYM_LOG_TO_FILE", "0")

from operators.pdo_numerics import GridSpec  # noqa: E402
from operators.symbols import model_phase  # noqa: E402
from settings import load_config  # noqa: E402

DEFAULT_CONFIG = ROOT / "configs" / "default.cfg"


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


@pytest.fixture
def long_range_phase():
    """Φ = v(x)|ξ|^{1/2}χ(|ξ|) with a bump v about 0, d = 1."""
    return model_phase("long_range", 1, r=0.5)


@pytest.fixture
def long_range_phase_2d():
    return model_phase("long_range", 2, r=0.5)


@pytest.fixture
def small_grid():
    return GridSpec((-2.0,), (2.0,), (128,))


@pytest.fixture
def default_cfg(tmp_path):
    return load_config(DEFAULT_CONFIG, output_dir=str(tmp_path / "output"))


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    for key in ("OSCSYM_SEED", "OSCSYM_OUTPUT_DIR", "OSCSYM_LOG_LEVEL"):
        monkeypatch.delenv(key, raising=False)
