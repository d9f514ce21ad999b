"""Tests for operators.calculus."""

import numpy as np
import pytest

from operators.calculus import (
    band_pass,
    check_diagonal_phase,
    direct_quadrature,
    expand_amplitude_to_symbol,
    expand_left_product,
    expand_right_product,
    product_remainder_ladder,
    split_singular_part,
    taylor_rest,
)
from operators.errors import PreconditionError, UnsupportedOrderError
from operators.fields import PolynomialField, multiply
from operators.pdo_numerics import GridSpec, QuadratureBox, forward_transform
from operators.symbols import (
    XI,
    OscillatingAmplitude,
    OscillatingSymbol,
    japanese_bracket,
    model_phase,
    spatial_profile,
    zero_phase,
)
from processors.selftest_processor import classical_cases, monomial

PROBES = [(0.3, 1.7), (-1.2, 0.5), (2.0, -3.0)]


def bump_symbol(phase, order_m=0.0, center=0.0, width=1.0):
    base = multiply(spatial_profile(1, [center], width), japanese_bracket(order_m, 1))
    return OscillatingSymbol(phase, base, order_m)


def value(expansion, p, q):
    return complex(np.asarray(expansion.truncated_sum(np.array([p]), np.array([q]))).reshape(-1)[0])


# ── Classical limits ──


@pytest.mark.parametrize("case", range(3))
def test_zero_phase_products_are_classical(case):
    label, expansion, exact = classical_cases()[case]
    for p, q in PROBES:
        assert value(expansion, p, q) == pytest.approx(complex(exact(p, q)), abs=1e-9), label


def test_right_product_first_order_term():
    """D∘x = xD − i: the |α| = 1 term carries the −i."""
    phase = zero_phase(1)
    expansion = expand_right_product(monomial(0, 1, phase), monomial(1, 0, phase), 2)
    term = expansion.term((1,))
    assert complex(np.asarray(term.evaluate(np.array([0.7]), np.array([2.0]))).reshape(-1)[0]) == pytest.approx(-1j)
    assert term.declared_order == pytest.approx(0.0)


def test_amplitude_expansion_of_classical_product():
    """𝐚 = ξ·x′ has symbol xξ − i."""
    phase = zero_phase(1)
    amp = OscillatingAmplitude.from_product(monomial(0, 1, phase), monomial(1, 0, phase))
    expansion = expand_amplitude_to_symbol(amp, 2)
    for p, q in PROBES:
        assert value(expansion, p, q) == pytest.approx(p * q - 1j, abs=1e-9)


# ── Preconditions ──


def test_products_need_one_phase():
    a1 = bump_symbol(model_phase("long_range", 1, r=0.5))
    a2 = bump_symbol(model_phase("long_range", 1, r=0.5))
    with pytest.raises(PreconditionError):
        expand_right_product(a1, a2, 2)
    with pytest.raises(PreconditionError):
        expand_left_product(a1, a2, 2)


def test_diagonal_phase_must_vanish(long_range_phase):
    amp = OscillatingAmplitude.from_right_symbol(bump_symbol(long_range_phase))
    with pytest.raises(PreconditionError, match="diagonal"):
        check_diagonal_phase(amp)
    with pytest.raises(PreconditionError):
        expand_amplitude_to_symbol(amp, 2)


def test_difference_phase_passes_diagonal_check(long_range_phase):
    a = bump_symbol(long_range_phase)
    assert check_diagonal_phase(OscillatingAmplitude.from_product(a, a)) < 1e-10


def test_expansion_beyond_oracle(long_range_phase):
    a = bump_symbol(long_range_phase)
    with pytest.raises(UnsupportedOrderError):
        expand_right_product(a, a, 10)


# ── Oscillating expansions ──


def test_leading_right_term_is_modulus_squared(long_range_phase, rng):
    a = bump_symbol(long_range_phase, order_m=0.5)
    expansion = expand_right_product(a, a, 3)
    x = rng.uniform(-0.8, 0.8, (10, 1))
    xi = rng.uniform(-200.0, 200.0, (10, 1))
    leading = expansion.term((0,)).evaluate(x, xi)
    np.testing.assert_allclose(leading, np.abs(a(x, xi)) ** 2, rtol=1e-12, atol=1e-15)
    assert expansion.order_r == 0.5
    assert [t.declared_order for t in expansion.terms] == pytest.approx([1.0, 0.5, 0.0])


def test_amplitude_expansion_terms_decay(long_range_phase):
    """Each term falls off at its declared order along |ξ|."""
    a1 = bump_symbol(long_range_phase)
    a2 = bump_symbol(long_range_phase, center=0.1, width=0.9)
    expansion = expand_amplitude_to_symbol(OscillatingAmplitude.from_product(a1, a2), 3)
    x = np.linspace(-0.6, 0.6, 13)[:, None]
    radii = np.geomspace(4.0, 256.0, 7)
    for term in expansion.terms[1:]:
        sup = [np.abs(term.evaluate(x, np.full((1, 1), s))).max() for s in radii]
        slope = np.polyfit(np.log(radii), np.log(sup), 1)[0]
        assert slope <= term.declared_order + 0.2


def test_band_pass_is_normalized_and_banded():
    spec = GridSpec((-2.0,), (2.0,), (64,))
    u = band_pass(spec, 8.0)
    assert u.norm() == pytest.approx(1.0)
    radius = np.abs(spec.frequencies()[:, 0])
    outside = (radius < 8.0) | (radius > 16.0)
    assert np.abs(forward_transform(u)[outside]).max() < 1e-12
    with pytest.raises(PreconditionError):
        band_pass(spec, 1e-3)


def test_right_product_remainder_decays():
    phase = zero_phase(1)
    a1 = bump_symbol(phase)
    a2 = bump_symbol(phase, center=0.1, width=0.9)
    rows = product_remainder_ladder(a1, a2, 2, GridSpec((-2.0,), (2.0,), (64,)), [4.0, 8.0, 16.0])
    assert [row.lam for row in rows] == [4.0, 8.0, 16.0]
    assert rows[-1].error < rows[0].error


def test_remainder_ladder_rejects_unknown_side():
    phase = zero_phase(1)
    a = bump_symbol(phase)
    with pytest.raises(ValueError):
        product_remainder_ladder(a, a, 2, GridSpec((-2.0,), (2.0,), (16,)), [2.0], side="middle")


# ── Singular part ──


def test_singular_symbol_is_product_of_bases(long_range_phase, rng):
    a = bump_symbol(long_range_phase)
    split = split_singular_part(a, a)
    x = rng.uniform(-1.0, 1.0, (20, 1))
    xi = rng.uniform(-50.0, 50.0, (20, 1))
    np.testing.assert_allclose(split.symbol(x, xi), np.abs(a.base(x, xi)) ** 2, rtol=1e-12, atol=1e-15)


def test_singular_split_needs_order_zero(long_range_phase):
    with pytest.raises(PreconditionError):
        split_singular_part(bump_symbol(long_range_phase, order_m=1.0), bump_symbol(long_range_phase))


def test_zero_second_factor_leaves_full_products(long_range_phase):
    a1 = bump_symbol(long_range_phase)
    zero = OscillatingSymbol(long_range_phase, PolynomialField({(0,): 0.0}, XI, 2, 1), 0.0)
    matrices = split_singular_part(a1, zero).residual_matrices(GridSpec((-2.0,), (2.0,), (16,)))
    assert np.abs(matrices["B"].entries).max() == 0.0
    np.testing.assert_allclose(matrices["right"].entries, matrices["product"].entries)


# ── Taylor formula with remainder ──


def z_bump(center=0.0, width=0.8):
    return spatial_profile(1, [center], width)


def test_taylor_rest_of_zeta_independent_field():
    f = z_bump()
    box = QuadratureBox((-1.5,), (1.5,))
    rest = taylor_rest(f, 1, box)
    assert rest.head == pytest.approx(1.0)
    assert abs(rest.rest_quadrature()) < 1e-8
    assert direct_quadrature(f, box) == pytest.approx(rest.head, abs=1e-5)


def test_taylor_head_of_linear_zeta():
    f = z_bump(center=0.2)
    p = multiply(f, PolynomialField({(1,): 1.0}, XI, 2, 1))
    rest = taylor_rest(p, 2, QuadratureBox((-1.5,), (1.5,)))
    origin = np.zeros(1)
    expected = -1j * complex(f.derivative(((1,), (0,)), origin, origin))
    assert rest.head == pytest.approx(expected)
    assert abs(rest.rest_quadrature()) < 1e-8


def test_taylor_head_plus_rest_matches_direct():
    p = multiply(z_bump(center=0.1), japanese_bracket(-2.0, 1))
    box = QuadratureBox((-1.5,), (1.5,))
    rest = taylor_rest(p, 1, box)
    assert rest.head + rest.rest_quadrature() == pytest.approx(direct_quadrature(p, box), abs=1e-4)


def test_taylor_rest_support_leak():
    with pytest.raises(PreconditionError, match="leaks"):
        taylor_rest(z_bump(width=1.0), 1, QuadratureBox((-0.3,), (0.3,)))
