"""Tests for operators.direct_integral."""

import math

import numpy as np
import pytest

from operators.direct_integral import (
    Diffeo,
    KernelSlice,
    LevelFunction,
    SphericalKernel,
    amplitude_application,
    bilinear_invariance,
    change_variables,
    cone_cotangent,
    conormal_mask,
    identity_application,
    kernel_slice,
    level_kernel,
    richardson_limit,
    sandwich_form,
    sandwich_table,
    shell_pairing,
    sphere_point,
    spherical_adjoint,
    spherical_kernel,
    spherical_transform,
    spherical_weight,
)
from operators.errors import ChartError, DomainError, PreconditionError, ResolutionError, SingularityError
from operators.fields import ConstantField
from operators.pdo_numerics import GridFunction, GridSpec
from operators.symbols import OscillatingAmplitude, OscillatingSymbol, zero_phase
from processors.archetypes import masked_amplitude
from processors.kernel_processor import shipped_diffeos
from processors.sandwich_processor import AGREEMENT_TOL, SandwichProcessor, relative_gap

SIGMA = 0.3


def gaussian(x):
    return np.exp(-0.5 * np.sum(np.asarray(x) ** 2, axis=-1) / SIGMA ** 2)


def constant_amplitude(d=2):
    return OscillatingAmplitude.from_symbol(OscillatingSymbol(zero_phase(d), ConstantField(1.0, 2, d), 0.0))


# ── Diffeomorphisms ──


@pytest.mark.parametrize("index", range(6))
def test_shipped_diffeos_pass_probes(index, rng):
    diffeo, lower, upper = shipped_diffeos()[index]
    check = diffeo.probe(rng, lower, upper, 200)
    assert check.passed(), f"{diffeo.name}: {check}"


def test_diffeo_constructors_reject_bad_input():
    with pytest.raises(DomainError):
        Diffeo.sine_warp(1.0)
    with pytest.raises(SingularityError):
        Diffeo.linear([[1.0, 2.0], [2.0, 4.0]])


def test_chi_cutoff():
    diffeo = Diffeo.identity(1, chi_radius=0.5)
    x = np.zeros((3, 1))
    xp = np.array([[0.2], [0.75], [1.5]])
    chi = diffeo.chi(x, xp)
    assert chi[0] == 1.0
    assert 0.0 < chi[1] < 1.0
    assert chi[2] == 0.0
    assert Diffeo.identity(1).chi_support == math.inf


# ── Level functions ──


def test_flat_level_lift():
    level = LevelFunction.flat(2)
    np.testing.assert_allclose(level.lift(np.array([[0.3]]), 0.7), [[0.3, 0.7]])
    q = level.q_field(np.array([[0.0, 0.1]]), np.array([[0.5, 0.9]]))
    np.testing.assert_allclose(q, [[0.0, 1.0]])


def test_radial_lift_and_chart():
    level = LevelFunction.radial_square(2)
    np.testing.assert_allclose(level.lift(np.array([[0.6]]), 1.0), [[0.6, 0.8]], rtol=1e-14)
    with pytest.raises(ChartError):
        level.lift(np.array([[0.6]]), 0.25)
    chart = level.chart()
    y = np.array([[0.1, 1.2], [-0.3, 0.9]])
    np.testing.assert_allclose(chart.forward(chart.inverse(y)), y, rtol=1e-14)


def test_q_field_is_a_secant():
    """⟨x − x′, 𝐪(x, x′)⟩ = P(x) − P(x′)."""
    level = LevelFunction.radial_square(2)
    x = np.array([[0.2, 1.0]])
    xp = np.array([[-0.1, 0.7]])
    q = level.q_field(x, xp)
    assert float(np.sum((x - xp) * q)) == pytest.approx(float(level.value(x) - level.value(xp)), rel=1e-14)


# ── Change of variables ──


def test_identity_change_keeps_amplitude(rng):
    def amp(x, xp, xi):
        return np.exp(-xp[..., 0] ** 2) * (1.0 + 1j * xi[..., 0])

    changed = change_variables(amp, Diffeo.identity(1))
    assert changed.remainder.vanishes
    y = rng.uniform(-1.0, 1.0, (10, 1))
    yp = rng.uniform(-1.0, 1.0, (10, 1))
    eta = rng.uniform(-20.0, 20.0, (10, 1))
    np.testing.assert_allclose(changed.amplitude(y, yp, eta), amp(y, yp, eta), rtol=1e-14)


def test_zero_amplitude_has_zero_remainder():
    changed = change_variables(lambda x, xp, xi: np.zeros(()), Diffeo.sine_warp(0.3, 1, chi_radius=0.5))
    spec = GridSpec((-2.0,), (2.0,), (16,))
    x = np.zeros((2, 1))
    xp = np.array([[0.1], [1.5]])
    assert np.all(changed.remainder(x, xp, spec) == 0.0)


def test_change_rejects_dimension_mismatch():
    with pytest.raises(DomainError):
        change_variables(constant_amplitude(2), Diffeo.identity(1))


def test_bilinear_form_through_identity():
    spec = GridSpec((-2.0,), (2.0,), (64,))

    def amp(x, xp, xi):
        return 1.0 / (1.0 + xp[..., 0] ** 2)

    check = bilinear_invariance(amp, Diffeo.identity(1), gaussian, lambda x: gaussian(x - 0.1), spec, spec)
    assert check.remainder == 0.0
    assert check.relative < 1e-12


# ── Kernel slices ──


def test_cone_cotangent():
    assert cone_cotangent(0.3) == pytest.approx(0.7 / math.sqrt(1.0 - 0.49))


def test_mask_width_range():
    with pytest.raises(DomainError):
        conormal_mask(constant_amplitude(), LevelFunction.flat(2), 1.0)


def test_flat_diagonal_slice_gains_one_order():
    """For a constant amplitude the η_d window scales with |η₀|, so the slice is linear in |η₀|."""
    masked = conormal_mask(constant_amplitude(), LevelFunction.flat(2), 0.3)
    kernel = level_kernel(masked, LevelFunction.flat(2), 0.5, 0.5)
    assert kernel.is_diagonal
    assert kernel.order_m == 1.0
    y0 = np.zeros((2, 1))
    values = kernel.diagonal(y0, np.array([[4.0], [16.0]]))
    assert np.all(np.real(values) > 0.0)
    assert values[1] / values[0] == pytest.approx(4.0, rel=1e-10)


def test_slice_needs_masked_amplitude():
    moved = change_variables(lambda x, xp, xi: np.ones(()), Diffeo.identity(2)).amplitude
    with pytest.raises(PreconditionError):
        kernel_slice(moved, 1.0, 1.0, eps=0.3)
    with pytest.raises(DomainError):
        kernel_slice(moved, 1.0, 1.0)
    with pytest.raises(DomainError):
        kernel_slice(change_variables(lambda x, xp, xi: np.ones(()), Diffeo.identity(1)).amplitude, 1.0, 1.0, eps=0.3)


def test_slice_tabulation():
    kernel = KernelSlice(1.0, 0.9, lambda y0, y0p, eta0: y0[..., 0] + 1j * eta0[..., 0], 0.0, 1)
    rows = kernel.tabulate([0.0, 0.5], [0.1], [2.0, -3.0])
    assert len(rows) == 4
    assert rows[0] == (0.0, 0.1, 2.0, 0.0, 2.0)
    assert rows[-1] == (0.5, 0.1, -3.0, 0.5, -3.0)
    flat = KernelSlice(1.0, 1.0, lambda *args: np.zeros(()), 0.0, 2)
    with pytest.raises(DomainError):
        flat.tabulate([0.0], [0.0], [1.0])


# ── Mollifier sandwich ──


def test_richardson_limit_is_exact_on_even_polynomials():
    widths = (0.2, 0.1, 0.05)
    values = [3.0 + 2.0 * w ** 2 - w ** 4 + 0.5j * w ** 2 for w in widths]
    assert richardson_limit(widths, values) == pytest.approx(3.0, abs=1e-12)


def test_identity_sandwich_on_flat_levels():
    """⟨ψ_ν u, ψ_ν v⟩·2√π ε is the Gaussian-smoothed shell pairing."""
    spec = GridSpec((-1.0, -1.0), (1.0, 1.0), (32, 256))
    u = GridFunction.from_callable(spec, gaussian)
    nu, width = 0.2, 0.1
    value = sandwich_form(identity_application, LevelFunction.flat(2), nu, nu, width, width, u, u)
    s2 = SIGMA ** 2 / 2.0
    spread = s2 + width ** 2 / 2.0
    expected = math.sqrt(math.pi) * SIGMA * math.sqrt(s2 / spread) * math.exp(-(nu ** 2) / (2.0 * spread))
    assert complex(value).real * 2.0 * math.sqrt(math.pi) * width == pytest.approx(expected, rel=1e-4)
    assert abs(complex(value).imag) < 1e-12


def test_sandwich_rejects_unresolved_widths():
    spec = GridSpec.cube(2, -1.0, 1.0, 16)
    u = GridFunction.from_callable(spec, gaussian)
    with pytest.raises(ResolutionError):
        sandwich_form(identity_application, LevelFunction.flat(2), 0.0, 0.0, 0.05, 0.05, u, u)
    with pytest.raises(DomainError):
        sandwich_form(identity_application, LevelFunction.flat(2), 0.0, 0.0, 0.0, 0.1, u, u)


def test_sandwich_limit_matches_slice_pairing(default_cfg, rng):
    """Extrapolated ⟨A ψ_{ε,ν}u, ψ_{ε,μ}v⟩ agrees with ⟨Ã^♮(μ,ν)ũ(ν), ṽ(μ)⟩ to three digits."""
    assert AGREEMENT_TOL <= 1e-3
    k = default_cfg.kernel
    processor = SandwichProcessor(default_cfg, rng)
    U, V = processor.grid_functions()
    apply = amplitude_application(masked_amplitude(default_cfg))
    result = sandwich_table(apply, processor.level, k.mu, k.nu, U, V, k.widths)
    slice_value = processor.slice_pairing()
    assert abs(slice_value) > 0.0
    gap = relative_gap(result.limit, slice_value)
    assert gap <= AGREEMENT_TOL
    assert gap < relative_gap(result.values[0], slice_value)


def test_flat_shell_pairing():
    spec = GridSpec((-1.0,), (1.0,), (64,))
    value = shell_pairing(LevelFunction.flat(2), 0.2, gaussian, gaussian, spec)
    expected = math.sqrt(math.pi) * SIGMA * math.exp(-0.04 / SIGMA ** 2)
    assert complex(value).real == pytest.approx(expected, rel=1e-5)


# ── Spherical normalization ──


def test_sphere_point():
    omega = sphere_point(4.0, np.array([[0.0], [1.2]]))
    np.testing.assert_allclose(np.linalg.norm(omega, axis=-1), 1.0, rtol=1e-14)
    np.testing.assert_allclose(omega[1], [0.6, 0.8], rtol=1e-14)
    with pytest.raises(ChartError):
        sphere_point(1.0, np.array([[1.0]]))
    with pytest.raises(DomainError):
        sphere_point(0.0, np.array([[0.0]]))


def test_spherical_weight_and_adjoint_invert():
    lam = 2.0

    def f(omega):
        return omega[..., 0] ** 2 + 3.0 * omega[..., 1]

    theta = np.linspace(0.2, math.pi - 0.2, 9)
    omega = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    roundtrip = spherical_adjoint(lam, spherical_weight(lam, f, 2), 2)(omega)
    np.testing.assert_allclose(roundtrip, f(omega), rtol=1e-12)


def test_weight_of_W_is_the_level_transport():
    """Z(λ)(Wu)(λ, ·) = ũ(·, λ) for P = |x|²."""
    lam = 1.5
    y0 = np.linspace(-1.0, 1.0, 11)[:, None]
    via_sphere = spherical_weight(lam, lambda omega: spherical_transform(gaussian, lam, omega), 2)(y0)
    direct = LevelFunction.radial_square(2).transport(gaussian, lam)(y0)
    np.testing.assert_allclose(via_sphere, direct, rtol=1e-12)


def test_spherical_kernel_chart_checks():
    flat_mask = conormal_mask(constant_amplitude(), LevelFunction.flat(2), 0.3)
    with pytest.raises(DomainError):
        spherical_kernel(flat_mask, 1.0, 1.0)
    kernel = SphericalKernel(KernelSlice(1.0, 1.0, lambda *args: np.zeros(()), 0.0, 1), 2)
    with pytest.raises(ChartError):
        kernel.pairing(lambda om: om[..., 0], lambda om: om[..., 0], GridSpec((-1.5,), (1.5,), (16,)))
