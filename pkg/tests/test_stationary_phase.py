"""Tests for operators.stationary_phase."""

import numpy as np
import pytest

from operators.errors import AliasingError, PreconditionError
from operators.fields import ConstantField, PolynomialField, multiply
from operators.pdo_numerics import GridSpec
from operators.stationary_phase import (
    PhaseProfile,
    act_on_exponent,
    exponent_phase,
    finite_difference,
    hessian_probe,
    omega_closed_form,
    omega_stability,
    reduced_symbol,
    solve_amplitude_stationary,
    solve_exponent_stationary,
    symbol_from_oscillating_amplitude,
)
from operators.symbols import (
    OscillatingAmplitude,
    OscillatingSymbol,
    difference_phase,
    japanese_bracket,
    model_phase,
    shift_phase,
    spatial_profile,
    zero_phase,
)

X = np.array([0.3])
GRID = GridSpec((-2.0,), (2.0,), (256,))


def amplitude_zero_phase():
    return zero_phase(1, groups=3)


def bump_symbol(phase):
    return OscillatingSymbol(phase, multiply(spatial_profile(1, [0.0], 1.0), japanese_bracket(0.0, 1)), 0.0)


def test_finite_difference_is_exact_on_cubics():
    value = finite_difference(lambda p: p[:, 0] ** 3, np.array([0.5]), (1,), 1e-3)
    assert value == pytest.approx(0.75, rel=1e-8)
    second = finite_difference(lambda p: p[:, 0] ** 2 * p[:, 1], np.array([0.5, 2.0]), (2, 1), 1e-2)
    assert second == pytest.approx(2.0, rel=1e-6)


# ── Amplitude stationary points ──


def test_zero_amplitude_phase_is_stationary_at_origin():
    point = solve_amplitude_stationary(amplitude_zero_phase(), X, np.array([32.0]))
    assert point.iterations == 1
    assert np.all(point.location == 0.0)
    assert np.all(point.eta == 0.0)


def test_shift_phase_closed_form():
    c = 0.5
    point = solve_amplitude_stationary(shift_phase([c], 1), X, np.array([32.0]))
    assert point.iterations <= 2
    assert point.location == pytest.approx([0.0], abs=1e-14)
    assert point.eta == pytest.approx([c / 32.0])


def test_small_frequency_is_rejected():
    with pytest.raises(PreconditionError):
        solve_amplitude_stationary(amplitude_zero_phase(), X, np.array([4.0]))


def test_difference_phase_fixed_point_shrinks(long_range_phase):
    theta = difference_phase(long_range_phase)
    sizes = []
    for radius in (64.0, 256.0, 1024.0):
        point = solve_amplitude_stationary(theta, X, np.array([radius]))
        assert point.residual < 1e-10
        assert np.abs(point.location).max() < 1e-12
        sizes.append(float(np.abs(point.eta).max()))
    assert sizes[-1] < sizes[0]


def test_hessian_of_zero_phase():
    probe = hessian_probe(amplitude_zero_phase(), X, np.array([32.0]), (np.zeros(1), np.zeros(1)))
    assert probe.det_abs == pytest.approx(1.0)
    assert probe.signature == 0


def test_symbol_of_trivial_amplitude():
    amp = OscillatingAmplitude(amplitude_zero_phase(), ConstantField(1.0, 3, 1), 0.0)
    report = symbol_from_oscillating_amplitude(amp, X, np.array([32.0]))
    assert report.phi_value == 0.0
    assert report.b_leading == 1.0


def test_left_slot_amplitude_is_already_a_symbol(long_range_phase):
    a = bump_symbol(long_range_phase)
    amp = OscillatingAmplitude.from_symbol(a)
    report = symbol_from_oscillating_amplitude(amp, X, np.array([64.0]))
    assert np.all(report.point.eta == 0.0)
    assert report.phi_value == pytest.approx(float(long_range_phase(X, np.array([64.0]))), rel=1e-12)
    assert report.phi0_value == pytest.approx(0.0, abs=1e-12)


def test_reduced_symbol_of_left_slot_amplitude(long_range_phase):
    a = bump_symbol(long_range_phase)
    reduced = reduced_symbol(OscillatingAmplitude.from_symbol(a))
    xi = np.array([100.0])
    assert complex(reduced(X, xi)) == pytest.approx(complex(a(X, xi)), rel=1e-10)


# ── Exponent action ──


def test_zero_symbol_phase_keeps_points():
    psi = PhaseProfile.linear([1.0], [0.0])
    point = solve_exponent_stationary(zero_phase(1), psi, X, 64.0)
    assert point.iterations == 1
    assert np.array_equal(point.location, X)


def test_exponent_preconditions(long_range_phase):
    psi = PhaseProfile.quadratic([0.0], [[1.0]], [0.0])
    with pytest.raises(PreconditionError):
        solve_exponent_stationary(long_range_phase, psi, np.array([0.0]), 64.0)
    with pytest.raises(PreconditionError):
        solve_exponent_stationary(long_range_phase, PhaseProfile.linear([1.0], [0.0]), X, 2.0)


def test_check_assumption():
    assert PhaseProfile.linear([2.0], [0.0]).check_assumption(1e-3) == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        PhaseProfile.quadratic([0.0], [[1.0]], [0.0]).check_assumption(1e-3)


def test_linear_profile_has_no_omega(long_range_phase):
    psi = PhaseProfile.linear([1.0], [0.0])
    report = exponent_phase(long_range_phase, psi, X, 64.0)
    assert report.omega == pytest.approx(0.0)
    assert report.G == pytest.approx(report.phi_leading, rel=1e-12)


def test_zero_phase_gives_zero_G():
    psi = PhaseProfile.quadratic([1.0], [[1.0]], [0.0])
    report = exponent_phase(zero_phase(1), psi, X, 64.0)
    assert report.G == pytest.approx(0.0, abs=1e-12)


def test_omega_bounded_and_near_closed_form():
    phi = model_phase("long_range", 1, r=0.55)
    psi = PhaseProfile.quadratic([1.0], [[1.0]], [0.0])
    omegas, gaps = [], []
    for lam in (16.0, 64.0, 256.0, 1024.0):
        omega = exponent_phase(phi, psi, X, lam).omega
        omegas.append(float(np.abs(omega).max()))
        gaps.append(float(np.abs(omega - omega_closed_form(phi, psi, X, lam)).max()))
    assert max(omegas) <= 3.0 * min(omegas)
    assert gaps[-1] < gaps[0]


def test_identity_symbol_acts_exactly():
    one = OscillatingSymbol(zero_phase(1), ConstantField(1.0, 2, 1), 0.0)
    action = act_on_exponent(one, PhaseProfile.linear([1.0], [0.0]), [0.0], 64.0, 0.2, GRID)
    assert action.residual_l2 < 1e-6
    np.testing.assert_allclose(action.approx.values, action.exact.values, atol=1e-10)


def test_zero_symbol_action():
    zero = OscillatingSymbol(zero_phase(1), ConstantField(0.0, 2, 1), 0.0)
    action = act_on_exponent(zero, PhaseProfile.linear([1.0], [0.0]), [0.0], 64.0, 0.2, GRID)
    assert np.all(action.approx.values == 0)
    assert action.residual_l2 == pytest.approx(action.exact.norm(), abs=1e-15)


def test_action_preconditions():
    one = OscillatingSymbol(zero_phase(1), ConstantField(1.0, 2, 1), 0.0)
    psi = PhaseProfile.linear([1.0], [0.0])
    with pytest.raises(PreconditionError):
        act_on_exponent(one, psi, [0.0], 64.0, 1e-3, GRID)
    with pytest.raises(AliasingError):
        act_on_exponent(one, psi, [0.0], 400.0, 0.2, GRID)


# ── Stability in ψ ──


def test_omega_stability_trivial_cases(long_range_phase):
    quadratic = PhaseProfile.quadratic([1.0], [[1.0]], [0.0])
    perturbation = PolynomialField({(1,): 1.0}, 0, 1, 1)
    rows = omega_stability(long_range_phase, quadratic, perturbation, [0.0], [64.0])
    assert rows[0].deviation == 0.0
    linear = PhaseProfile.linear([1.0], [0.0])
    rows = omega_stability(long_range_phase, linear, perturbation, [1e-2, 1e-1], [64.0, 256.0])
    assert all(row.deviation == pytest.approx(0.0, abs=1e-12) for row in rows)


def test_omega_is_lipschitz_in_sigma(long_range_phase):
    psi = PhaseProfile.quadratic([1.0], [[1.0]], [0.0])
    perturbation = PolynomialField({(2,): 1.0}, 0, 1, 1)
    rows = omega_stability(long_range_phase, psi, perturbation, [1e-3, 1e-2, 1e-1], [32.0, 128.0, 512.0])
    ratios = [row.deviation / row.sigma for row in rows]
    assert max(ratios) <= 10.0 * max(min(ratios), 1e-12)
