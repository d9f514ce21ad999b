"""Tests for config loading and validation."""

import re
from pathlib import Path

import pytest

from config import LADDER_MAX, LADDER_MIN
from operators.errors import ConfigError
from settings import ExperimentConfig, LadderSettings, geometric, load_config, validate

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "default.cfg"


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_default_config(default_cfg):
    assert default_cfg.name == "default"
    assert default_cfg.seed == 7
    assert default_cfg.dimension == 1
    assert default_cfg.degree() == 1
    assert default_cfg.schedule_exponent() == pytest.approx(0.26)
    assert default_cfg.schedule.targets == 8
    assert default_cfg.schedule.grid_points == 4096
    assert default_cfg.schedule.lambda_max == 512.0
    assert default_cfg.ladder.lambdas() == pytest.approx([16.0 * 2 ** k for k in range(7)])
    assert default_cfg.kernel.widths == [0.2, 0.1, 0.075, 0.05]
    assert not default_cfg.output.xlsx


def test_defaults_validate():
    cfg = ExperimentConfig()
    validate(cfg)
    assert LadderSettings().lambda_min == LADDER_MIN
    assert LadderSettings().xi_max == LADDER_MAX


def test_geometric_ladder():
    assert geometric(16.0, 1024.0, 7) == pytest.approx([16, 32, 64, 128, 256, 512, 1024])
    assert geometric(3.0, 9.0, 1) == [3.0]


def test_missing_keys_fall_back(tmp_path):
    cfg = load_config(write_cfg(tmp_path, "[point]\nx0 = 0.1, 0.2\n"))
    assert cfg.name == "exp"
    assert cfg.dimension == 2
    assert cfg.point.xi0 == [1.0, 0.0]
    assert cfg.phase.center == [0.1, 0.2]
    assert cfg.grid.points == [1024, 1024]


# ── Precedence ──


def test_seed_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv("OSCSYM_SEED", "11")
    assert load_config(DEFAULT_CONFIG).seed == 11
    assert load_config(DEFAULT_CONFIG, seed=3).seed == 3


def test_output_dir_precedence(monkeypatch, tmp_path):
    monkeypatch.setenv("OSCSYM_OUTPUT_DIR", str(tmp_path / "env"))
    assert load_config(DEFAULT_CONFIG).output.directory == str(tmp_path / "env")
    assert load_config(DEFAULT_CONFIG, output_dir=tmp_path / "cli").output.directory == str(tmp_path / "cli")


def test_bad_env_seed(monkeypatch):
    monkeypatch.setenv("OSCSYM_SEED", "seven")
    with pytest.raises(ConfigError, match="OSCSYM_SEED"):
        load_config(DEFAULT_CONFIG)


# ── Errors ──


def test_range_error_names_file_and_line(tmp_path):
    path = write_cfg(tmp_path, "[experiment]\nname = bad\n\n[phase]\nr = 1.5\n")
    with pytest.raises(ConfigError, match=re.escape(f"{path}:5")):
        load_config(path)


def test_type_error_names_file_and_line(tmp_path):
    path = write_cfg(tmp_path, "[phase]\nkind = long_range\nr = half\n")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert f"{path}:3" in str(excinfo.value)
    assert "expected float" in str(excinfo.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[foo]\nx = 1\n", "unknown section"),
        ("[phase]\nkind = quadratic\n", "kind"),
        ("[phase]\nprofile = box\n", "profile"),
        ("[grid]\npoints = 48\n", "powers of two"),
        ("[schedule]\ns = 0.9\n", "admissible"),
        ("[schedule]\nrows = 1\n", "two rows"),
        ("[schedule]\ngrid_points = 1000\n", "power of two"),
        ("[schedule]\nlambda_max = 2048\n", "Nyquist"),
        ("[kernel]\ny0_half_width = 1.0\n", "chart"),
        ("[kernel]\nmask_eps = 1.5\n", "mask_eps"),
        ("[ladder]\ncount = 1\n", "two points"),
        ("[output]\nxlsx = maybe\n", "boolean"),
        ("[phase\nr = 0.5\n", "exp.cfg"),
    ],
)
def test_invalid_configs(tmp_path, text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        load_config(write_cfg(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_auto_schedule(tmp_path):
    cfg = load_config(write_cfg(tmp_path, "[phase]\nr = 0.75\n[schedule]\ns = auto\nn = auto\n"))
    assert cfg.schedule.s is None
    assert cfg.degree() == 3
    assert cfg.schedule_exponent() == pytest.approx((0.75 / 4 + 0.25) / 2)
