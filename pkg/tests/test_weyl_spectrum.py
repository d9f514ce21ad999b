"""Tests for operators.weyl_spectrum."""

import math
from fractions import Fraction

import numpy as np
import pytest

from operators.errors import AliasingError, DomainError, PreconditionError
from operators.fields import ConstantField
from operators.pdo_numerics import GridSpec
from operators.symbols import OscillatingAmplitude, OscillatingSymbol, model_phase, zero_phase
from operators.weyl_spectrum import (
    CoverageSchedule,
    PhasePolynomial,
    WeylReport,
    WeylRow,
    build_phase_polynomial,
    check_phase_conditions,
    circle_targets,
    find_lambda_for_phase,
    gram_matrix,
    pick_degree,
    quadratic_shortcut,
    run_coverage_amplitude,
    run_coverage_experiment,
    schedule_admissible,
    schedule_interval,
    spread,
    taylor_control,
    weyl_residuals,
    weyl_sequence,
)

LADDER = [16.0, 64.0, 256.0, 1024.0]
GRID = GridSpec((-2.0,), (2.0,), (1024,))


def plateau_symbol():
    """Φ = 8·v(x)|ξ|^{1/2}χ(|ξ|) with v ≡ 1 on |x| ≤ 6 and b ≡ 1."""
    phi = model_phase("long_range", 1, r=0.5, amplitude=8.0, width=7.5, profile="plateau", flat=0.8)
    return OscillatingSymbol(phi, ConstantField(1.0, 2, 1), 0.0)


def identity_symbol():
    return OscillatingSymbol(zero_phase(1), ConstantField(1.0, 2, 1), 0.0)


# ── Degree and schedule ──


@pytest.mark.parametrize("r, n", [(0.0, 0), (0.3, 0), (0.5, 1), (0.6, 1), (0.75, 3)])
def test_pick_degree(r, n):
    assert pick_degree(r) == n


def test_pick_degree_rejects_r_one():
    with pytest.raises(DomainError):
        pick_degree(1.0)


def test_schedule_interval_is_open():
    assert schedule_interval(0.5, 1) == (Fraction(1, 4), Fraction(1, 2))
    assert schedule_admissible(0.3, 0.5, 1)
    assert not schedule_admissible(0.25, 0.5, 1)
    assert not schedule_admissible(0.5, 0.5, 1)


# ── Phase conditions ──


def test_conditions_for_unit_profile():
    conditions = check_phase_conditions(model_phase("long_range", 1, r=0.5), [0.0], [1.0], LADDER)
    assert conditions.c_growth == pytest.approx(1.0, rel=1e-12)
    assert conditions.c_gradient == pytest.approx(0.5, rel=1e-12)
    assert conditions.admissible()


def test_conditions_for_zero_phase():
    conditions = check_phase_conditions(zero_phase(1), [0.0], [1.0], LADDER)
    assert conditions.c_growth == 0.0
    assert conditions.c_gradient == 0.0
    assert not conditions.admissible()


def test_conditions_for_half_amplitude():
    phi = model_phase("long_range", 1, r=0.5, amplitude=0.5)
    conditions = check_phase_conditions(phi, [0.0], [2.0], LADDER)
    assert conditions.c_growth == pytest.approx(0.5 * 2.0 ** 0.5, abs=1e-9)


def test_conditions_need_nonzero_direction(long_range_phase):
    with pytest.raises(DomainError):
        check_phase_conditions(long_range_phase, [0.0], [0.0], LADDER)
    with pytest.raises(DomainError):
        check_phase_conditions(long_range_phase, [0.0, 0.0], [1.0], LADDER)


# ── Phase polynomials ──


def test_degree_zero_build_is_linear(long_range_phase):
    build = build_phase_polynomial(long_range_phase, [0.0], [1.0], 0, 64.0)
    assert build.polynomial.degree == 1
    assert build.polynomial.coefficients() == {(1,): 1.0}
    assert build.gaps == []


def test_build_preconditions(long_range_phase):
    with pytest.raises(PreconditionError):
        build_phase_polynomial(long_range_phase, [0.0], [1.0], 1, 4.0)
    with pytest.raises(DomainError):
        build_phase_polynomial(long_range_phase, [0.0], [1.0], -1, 64.0)


def test_phase_polynomial_evaluation():
    from operators.fock import SymTensor

    poly = PhasePolynomial(np.array([0.5]), np.array([2.0]), [SymTensor(2, 1, [3.0])])
    assert poly.coefficients() == {(1,): 2.0, (2,): 1.5}
    assert np.asarray(poly(np.array([[1.5]]))).reshape(-1)[0] == pytest.approx(2.0 + 1.5)


def test_quadratic_shortcut_flat_profile(long_range_phase):
    poly = quadratic_shortcut(long_range_phase, [0.0], [1.0], 64.0)
    assert poly.degree == 2
    assert poly.tensors[0].values[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", [32.0, 256.0])
def test_quadratic_shortcut_closed_form(lam):
    r = 0.6
    phi = model_phase("long_range", 1, r=r, slope=[1.0])
    poly = quadratic_shortcut(phi, [0.0], [1.0], lam)
    expected = -(lam ** r) / (lam * r * lam ** (r - 1.0))
    assert poly.tensors[0].values[0] == pytest.approx(expected, rel=1e-10)


def test_quadratic_shortcut_range(long_range_phase):
    with pytest.raises(PreconditionError):
        quadratic_shortcut(model_phase("long_range", 1, r=0.3), [0.0], [1.0], 64.0)


def test_first_derivative_of_G_vanishes():
    phi = model_phase("long_range", 1, r=0.55)
    build = build_phase_polynomial(phi, [0.3], [1.0], 1, 64.0)
    assert build.max_derivative < 1e-4
    assert build.polynomial.degree == 2


# ── Phase matching ──


def test_lambda_matching_for_pure_power():
    """Linear ψ at a flat point gives G(x₀, λ) = λ^r exactly."""
    r = 0.5
    phi = model_phase("long_range", 1, r=r)
    matches = find_lambda_for_phase(phi, [0.0], [1.0], 1.0 + 0.0j, 0, 16.0, 512.0)
    assert [m.p for m in matches] == [1, 2, 3]
    for match in matches:
        assert match.lam == pytest.approx((2.0 * math.pi * match.p) ** (1.0 / r), rel=1e-6)
        assert match.phase_error < 1e-8
    lams = [m.lam for m in matches]
    assert all(b > a for a, b in zip(lams, lams[1:]))
    gaps = np.diff([m.G for m in matches])
    np.testing.assert_allclose(gaps, 2.0 * math.pi, rtol=1e-6)


def test_spread_keeps_both_ends():
    assert spread(list(range(10)), 4) == [0, 3, 6, 9]
    assert spread([5, 6], 4) == [5, 6]
    assert spread([1, 2, 3], None) == [1, 2, 3]
    with pytest.raises(DomainError):
        spread(list(range(10)), 1)


def test_lambda_matching_below_the_default_floor():
    """On the plateau G(x₀, λ) = 8√λ, so λ_p = (2πp/8)² from λ = 8 on."""
    matches = find_lambda_for_phase(plateau_symbol().phase, [0.0], [1.0], 1.0 + 0.0j, 1, 8.0, 512.0, rows=3)
    assert [m.p for m in matches] == [4, 16, 28]
    assert matches[0].lam < 16.0
    for match in matches:
        assert match.lam == pytest.approx((2.0 * math.pi * match.p / 8.0) ** 2, rel=1e-6)
        assert match.phase_error <= 1e-8


def test_lambda_matching_needs_unit_target(long_range_phase):
    with pytest.raises(DomainError):
        find_lambda_for_phase(long_range_phase, [0.0], [1.0], 0.5, 0)


# ── Weyl sequences and coverage ──


def test_identity_residuals():
    on = weyl_residuals(identity_symbol(), [0.0], [1.0], 1.0, [16.0, 64.0], 0.3, GRID)
    assert on.n == 0
    assert all(res < 1e-8 for res in on.residuals)
    off = weyl_residuals(identity_symbol(), [0.0], [1.0], -1.0, [16.0, 64.0], 0.3, GRID)
    np.testing.assert_allclose(off.residuals, 2.0, rtol=1e-12)
    assert off.decrease_factor() == pytest.approx(1.0)


def test_report_decrease_factor():
    report = WeylReport(1.0, 1.0, 0.3, 1, [WeylRow(p, 16.0 * 2 ** p, 0.1, 0.0, 0.0, 1.0 / 2 ** p) for p in range(4)])
    assert report.is_decreasing()
    assert report.decrease_factor() == pytest.approx(8.0)
    report.rows.append(WeylRow(4, 256.0, 0.1, 0.0, 0.0, math.nan, "aliasing"))
    assert report.decrease_factor() == pytest.approx(8.0)


def test_circle_targets():
    targets = circle_targets(2j, 4)
    np.testing.assert_allclose(targets, [2j, -2.0, -2j, 2.0], atol=1e-12)


def test_weyl_sequence_is_nearly_orthogonal():
    functions = weyl_sequence(zero_phase(1), [0.0], [1.0], [16.0, 64.0, 256.0], 0.3, GRID, 0)
    gram = gram_matrix(functions)
    np.testing.assert_allclose(np.diag(gram), 1.0, rtol=1e-12)
    off = np.abs(gram - np.diag(np.diag(gram)))
    assert off.max() < 0.1


def test_weyl_sequence_aliasing():
    with pytest.raises(AliasingError):
        weyl_sequence(zero_phase(1), [0.0], [1.0], [2048.0], 0.3, GRID, 0)


def test_coverage_refuses_zero_phase():
    schedule = CoverageSchedule(0.3, 0)
    with pytest.raises(PreconditionError):
        run_coverage_experiment(identity_symbol(), [0.0], [1.0], None, schedule, GRID)


def test_coverage_rejects_schedule(long_range_phase):
    a = OscillatingSymbol(long_range_phase, ConstantField(1.0, 2, 1), 0.0)
    with pytest.raises(DomainError):
        run_coverage_experiment(a, [0.0], [1.0], None, CoverageSchedule(0.9, 1), GRID)


def test_amplitude_coverage_refuses_zero_phase():
    amp = OscillatingAmplitude(zero_phase(1, groups=3), ConstantField(1.0, 3, 1), 0.0)
    with pytest.raises(PreconditionError):
        run_coverage_amplitude(amp, [0.0], [1.0], None, CoverageSchedule(0.3, 0), GRID)


def test_taylor_control_of_zero_phase():
    poly = PhasePolynomial(np.array([0.0]), np.array([1.0]))
    assert taylor_control(zero_phase(1), poly, 64.0, 0.2, 0) == 0.0


def test_coverage_residuals_halve_on_a_plateau_phase():
    schedule = CoverageSchedule(0.26, 1, lambda_min=8.0, lambda_max=512.0, bump_width=7.5, rows=2)
    grid = GridSpec((-8.0,), (8.0,), (4096,))
    reports = run_coverage_experiment(plateau_symbol(), [0.0], [1.0], circle_targets(1.0, 8), schedule, grid)
    assert len(reports) == 8
    for report in reports:
        assert [row.note for row in report.rows] == ["", ""]
        assert report.is_decreasing()
        assert report.decrease_factor() >= 2.0
        assert max(row.phase_error for row in report.rows) <= 1e-8
        assert report.rows[0].lam < 16.0 < 256.0 < report.rows[-1].lam
