"""Tests for the kernel pipeline's slice order checks."""

import math

import numpy as np
import pytest

from operators.direct_integral import LevelFunction, level_kernel
from processors.archetypes import masked_amplitude
from processors.kernel_processor import GAIN_TOLERANCE, KernelProcessor, oscillating_gain_floor
from processors.verification import VerificationResult


def test_within_is_two_sided():
    result = VerificationResult()
    assert result.within("gain", 1.0, 0.85, 1.15).passed
    assert not result.within("gain", -0.2, 0.85, 1.15).passed
    assert not result.within("gain", 0.0, 0.85, 1.15).passed
    assert not result.within("gain", 1.3, 0.85, 1.15).passed
    assert not result.within("gain", math.nan, 0.85, 1.15).passed
    assert "outside" in result.checks[1].detail


def test_plain_slice_is_exactly_one_order_up(default_cfg):
    level = LevelFunction.radial_square(2)
    mu = default_cfg.kernel.mu
    kernel = level_kernel(masked_amplitude(default_cfg, oscillating=False), level, mu, mu)
    values = np.abs(kernel.diagonal(np.zeros((2, 1)), np.array([[4.0], [256.0]])))
    assert values[1] / values[0] == pytest.approx(64.0, rel=1e-6)


def test_oscillating_gain_floor():
    assert oscillating_gain_floor(0.5) == pytest.approx(0.75)
    assert oscillating_gain_floor(0.0) == 1.0


def test_slice_gain_checks_pass_two_sided(default_cfg, rng):
    assert GAIN_TOLERANCE == pytest.approx(0.15)
    processor = KernelProcessor(default_cfg, rng)
    processor.class_bump()
    checks = {check.name: check for check in processor.outcome.verification.checks}
    plain = checks["slice gains one order (Φ ≡ 0)"]
    oscillating = checks["slice gains between 1 − r/2 and one order (oscillating)"]
    assert plain.passed, plain.detail
    assert oscillating.passed, oscillating.detail
    assert " in [0.85, 1.15]" in plain.detail
    assert " in [0.6, 1.15]" in oscillating.detail
