"""Tests for the weyl pipeline on the shipped config."""

import numpy as np
import pytest

from processors.archetypes import coverage_grid, coverage_symbol
from processors.weyl_processor import MIN_DECREASE, WeylProcessor


def test_coverage_grid_resolves_the_top_of_the_ladder(default_cfg):
    spec = coverage_grid(default_cfg)
    assert spec.points == (4096,)
    assert default_cfg.schedule.lambda_max == 2.0 ** 9
    assert default_cfg.schedule.lambda_max < 0.8 * float(spec.nyquist[0])


def test_coverage_symbol_is_flat_about_x0(default_cfg):
    symbol = coverage_symbol(default_cfg)
    x = np.array([[-5.5], [0.0], [5.5]])
    xi = np.full((3, 1), 64.0)
    np.testing.assert_allclose(symbol.phase(x, xi), 8.0 * 8.0, rtol=1e-12)
    assert complex(symbol.base(np.array([0.0]), np.array([512.0]))) == 1.0


def test_coverage_checks_pass_on_the_shipped_schedule(default_cfg, rng):
    assert MIN_DECREASE == pytest.approx(2.0)
    default_cfg.schedule.targets = 2
    default_cfg.schedule.rows = 2
    processor = WeylProcessor(default_cfg, rng)
    processor.coverage()
    checks = processor.outcome.verification.checks
    assert len(checks) == 4
    assert all(check.passed for check in checks), [c.detail for c in checks if not c.passed]
    table = processor.outcome.tables[0]
    assert table.name == "weyl_coverage"
