"""Tests for operators.pdo_numerics."""

import numpy as np
import pytest

from operators.errors import DivergenceError, DomainError
from operators.fields import ConstantField, PolynomialField
from operators.pdo_numerics import (
    AmplitudeOperator,
    GridFunction,
    GridSpec,
    QuadratureBox,
    SymbolOperator,
    apply_amplitude_pdo,
    apply_symbol_pdo,
    band_excess,
    forward_transform,
    identity_matrix,
    inverse_transform,
    kernel_of,
    materialize,
    multiplication_matrix,
    norm_and_spectrum_probe,
    product_symbol_quadrature,
    symbol_from_amplitude,
)
from operators.symbols import XI, OscillatingAmplitude, OscillatingSymbol, PlainSymbol, japanese_bracket

SPEC = GridSpec((-8.0,), (8.0,), (64,))


def gaussian(x):
    return np.exp(-0.5 * x[..., 0] ** 2)


def xi_symbol():
    return PlainSymbol(PolynomialField({(1,): 1.0}, XI, 2, 1), 1.0)


@pytest.mark.parametrize(
    "lower, upper, points",
    [((0.0,), (0.0,), (64,)), ((1.0,), (0.0,), (64,)), ((0.0,), (1.0,), (48,)), ((0.0,), (1.0,), (4,))],
)
def test_grid_validation(lower, upper, points):
    with pytest.raises(DomainError):
        GridSpec(lower, upper, points)


def test_grid_geometry():
    spec = GridSpec.cube(2, -1.0, 1.0, 16)
    assert spec.size == 256
    assert spec.cell_volume == pytest.approx((2.0 / 16) ** 2)
    assert spec.coordinates().shape == (256, 2)
    assert spec.nyquist == pytest.approx(np.pi / (2.0 / 16))
    assert spec.refine().points == (32, 32)


def test_gaussian_transform():
    u = GridFunction.from_callable(SPEC, gaussian)
    u_hat = forward_transform(u)
    xi = SPEC.frequencies()[:, 0]
    np.testing.assert_allclose(u_hat, np.exp(-0.5 * xi ** 2), atol=1e-12)
    np.testing.assert_allclose(inverse_transform(u_hat, SPEC).values, u.values, atol=1e-12)


def test_band_excess():
    smooth = GridFunction.from_callable(SPEC, gaussian)
    rough = GridFunction.from_callable(SPEC, lambda x: np.cos(30 * SPEC.frequency_steps[0] * x[:, 0]))
    assert band_excess(smooth) < 1e-12
    assert band_excess(rough) > 0.99


def test_inner_product_and_norm():
    u = GridFunction.from_callable(SPEC, gaussian)
    assert u.norm() == pytest.approx(np.pi ** 0.25, rel=1e-10)
    assert u.inner(u) == pytest.approx(u.norm() ** 2)
    with pytest.raises(DomainError):
        u.inner(GridFunction.zeros(SPEC.refine()))


# ── Operator application ──


def test_identity_symbol():
    one = PlainSymbol(ConstantField(1.0, 2, 1), 0.0)
    u = GridFunction.from_callable(SPEC, gaussian)
    np.testing.assert_allclose(apply_symbol_pdo(one, u).values, u.values, atol=1e-12)


def test_xi_symbol_differentiates():
    u = GridFunction.from_callable(SPEC, gaussian)
    expected = 1j * SPEC.coordinates()[:, 0] * u.values
    np.testing.assert_allclose(apply_symbol_pdo(xi_symbol(), u).values, expected, atol=1e-10)


def test_dimension_mismatch():
    u = GridFunction.from_callable(GridSpec.cube(2, -1.0, 1.0, 8), lambda x: np.ones(len(x)))
    with pytest.raises(DomainError):
        apply_symbol_pdo(xi_symbol(), u)


def test_non_finite_symbol():
    u = GridFunction.from_callable(SPEC, gaussian)
    with pytest.raises(DomainError):
        apply_symbol_pdo(lambda x, xi: np.full(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), np.nan), u)


def test_output_mask_restricts_rows():
    u = GridFunction.from_callable(SPEC, gaussian)
    mask = SPEC.coordinates()[:, 0] > 0
    full = apply_symbol_pdo(xi_symbol(), u)
    part = apply_symbol_pdo(xi_symbol(), u, output_mask=mask)
    np.testing.assert_allclose(part.values[mask], full.values[mask], atol=1e-12)
    assert np.all(part.values[~mask] == 0)


def test_dense_amplitude_of_multiplier():
    """𝐚(x, x′, ξ) = w(x′) acts as multiplication by w."""

    def amp(x, xp, xi):
        return 1.0 / (1.0 + xp[..., 0] ** 2)

    u = GridFunction.from_callable(SPEC, gaussian)
    result = apply_amplitude_pdo(amp, u)
    expected = u.values / (1.0 + SPEC.coordinates()[:, 0] ** 2)
    np.testing.assert_allclose(result.values, expected, atol=1e-12)


def test_factored_amplitude_matches_symbol(long_range_phase):
    a = OscillatingSymbol(long_range_phase, japanese_bracket(0.0, 1), 0.0)
    u = GridFunction.from_callable(SPEC, gaussian)
    direct = apply_symbol_pdo(a, u)
    through_amplitude = apply_amplitude_pdo(OscillatingAmplitude.from_symbol(a), u)
    np.testing.assert_allclose(through_amplitude.values, direct.values, atol=1e-11)


# ── Matrices ──


def test_symbol_matrix_matches_application():
    spec = GridSpec((-4.0,), (4.0,), (32,))
    u = GridFunction.from_callable(spec, lambda x: np.exp(-x[:, 0] ** 2))
    M = SymbolOperator(xi_symbol(), spec).matrix()
    np.testing.assert_allclose(M.apply(u).values, apply_symbol_pdo(xi_symbol(), u).values, atol=1e-10)


def test_materialize_callable_matches_matrix():
    spec = GridSpec((-4.0,), (4.0,), (16,))
    op = SymbolOperator(xi_symbol(), spec)
    by_delta = materialize(lambda v: apply_symbol_pdo(xi_symbol(), v), spec)
    np.testing.assert_allclose(by_delta.entries, op.matrix().entries, atol=1e-10)
    with pytest.raises(DomainError):
        materialize(op, spec.refine())


def test_factored_amplitude_matrix(long_range_phase):
    spec = GridSpec((-4.0,), (4.0,), (16,))
    a = OscillatingSymbol(long_range_phase, japanese_bracket(0.0, 1), 0.0)
    amp = OscillatingAmplitude.from_symbol(a)
    dense = AmplitudeOperator(lambda x, xp, xi: amp(x, xp, xi), spec).matrix()
    np.testing.assert_allclose(AmplitudeOperator(amp, spec).matrix().entries, dense.entries, atol=1e-10)


def test_spectrum_probe():
    spec = GridSpec((-1.0,), (1.0,), (16,))
    identity = norm_and_spectrum_probe(identity_matrix(spec))
    assert identity.operator_norm == pytest.approx(1.0)
    np.testing.assert_allclose(identity.singular_values, 1.0)
    weight = norm_and_spectrum_probe(multiplication_matrix(spec, lambda x: 2.0 + x[:, 0]))
    assert weight.operator_norm == pytest.approx(2.0 + spec.axes()[0].max())
    assert weight.tail_ratio(100) == 0.0


# ── Kernels and symbol quadratures ──


def test_kernel_diverges_on_diagonal():
    with pytest.raises(DivergenceError):
        kernel_of(lambda x, xp, xi: np.ones(()), [0.0], [0.0], SPEC)


def test_kernel_of_constant_vanishes_off_diagonal():
    h = SPEC.steps[0]
    value = kernel_of(lambda x, xp, xi: np.ones(()), [0.0], [h], SPEC)
    assert abs(value) < 1e-12


def test_symbol_from_amplitude_recovers_right_factor():
    def amp(x, xp, xi):
        return np.exp(-(xp[..., 0] ** 2) / 0.18)

    box = QuadratureBox((-3.0,), (3.0,))
    for x in (0.0, 0.2):
        value = symbol_from_amplitude(amp, [x], [3.0], box)
        assert value == pytest.approx(np.exp(-x ** 2 / 0.18), abs=1e-7)


def test_product_symbol_quadrature_of_multiplier():
    def a1(y, xi):
        return np.exp(-(y[..., 0] ** 2) / 0.18)

    def a2(y, xi):
        return np.ones(())

    value = product_symbol_quadrature(a1, a2, [0.1], [5.0], QuadratureBox((-3.0,), (3.0,)))
    assert value == pytest.approx(np.exp(-0.01 / 0.18), abs=1e-7)
