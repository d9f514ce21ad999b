"""Tests for operators.fock."""

import itertools
import math

import numpy as np
import pytest

from operators.errors import ConditioningError, DomainError, RangeError
from operators.fock import SymTensor, apply_S, apply_T, dim_M, solve_R, sorted_indices


@pytest.mark.parametrize("n, d, expected", [(1, 4, 4), (2, 3, 6), (3, 2, 4), (0, 5, 1), (4, 1, 1)])
def test_dim_M(n, d, expected):
    assert dim_M(n, d) == expected
    assert len(sorted_indices(n, d)) == expected


def test_dim_M_bounds():
    with pytest.raises(DomainError):
        dim_M(-1, 2)
    with pytest.raises(DomainError):
        dim_M(2, 0)
    with pytest.raises(RangeError):
        dim_M(17, 2)


def test_lookup_is_symmetric(rng):
    psi = SymTensor.random(3, 3, rng)
    for idx in sorted_indices(3, 3):
        for perm in itertools.permutations(idx):
            assert psi[perm] == psi[idx]


def test_coefficient_count_is_checked():
    with pytest.raises(DomainError):
        SymTensor(2, 3, np.zeros(5))


def test_T_on_vectors_is_inner_product(rng):
    psi = SymTensor.random(1, 4, rng)
    t = rng.standard_normal(4)
    out = apply_T(psi, t)
    assert out.degree == 0
    assert out.values[0] == pytest.approx(float(psi.values @ t))


def test_T_with_unit_direction_picks_last_index(rng):
    psi = SymTensor.random(3, 3, rng)
    t = np.array([0.0, 1.0, 0.0])
    out = apply_T(psi, t)
    for beta in out.indices:
        assert out[beta] == pytest.approx(psi[beta + (1,)])


def test_T_rejects_degree_zero():
    with pytest.raises(DomainError):
        apply_T(SymTensor(0, 2, [1.0]), [1.0, 0.0])


def test_S_on_scalar():
    out = apply_S(SymTensor(0, 3, [2.0]), [1.0, -1.0, 0.5])
    np.testing.assert_allclose(out.values, [2.0, -2.0, 1.0])


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_S_in_one_dimension(n):
    out = apply_S(SymTensor(n, 1, [3.0]), [2.0])
    assert out.values[0] == pytest.approx(3.0 * 2.0 * (n + 1))


def test_S_hand_enumerated():
    out = apply_S(SymTensor(1, 2, [1.0, 0.0]), [0.0, 1.0])
    assert out[(0, 0)] == 0.0
    assert out[(0, 1)] == 1.0
    assert out[(1, 1)] == 0.0


@pytest.mark.parametrize("n, d", [(n, d) for n in range(1, 6) for d in range(1, 5)])
def test_commutation_relation(n, d, rng):
    psi = SymTensor.random(n, d, rng)
    t = rng.standard_normal(d)
    lhs = apply_T(apply_S(psi, t), t)
    rhs = psi.scale(float(t @ t)) + apply_S(apply_T(psi, t), t)
    np.testing.assert_allclose(lhs.values, rhs.values, rtol=0, atol=1e-12 * max(1.0, lhs.norm()))


def test_solve_R_scalar_case():
    out = solve_R(SymTensor(0, 1, [3.0]), [1.5])
    assert out.values[0] == pytest.approx(2.0)


@pytest.mark.parametrize("n, d", [(1, 2), (2, 3), (3, 3), (4, 2), (5, 4)])
def test_solve_R_is_right_inverse(n, d, rng):
    t = rng.standard_normal(d)
    F = apply_T(SymTensor.random(n, d, rng), t)
    residual = apply_T(solve_R(F, t), t) - F
    assert residual.norm() < 1e-12 * max(1.0, F.norm())


def test_solve_R_scales_like_inverse_norm(rng):
    F = SymTensor.random(2, 3, rng)
    t = rng.standard_normal(3)
    t /= np.linalg.norm(t)
    ratios = []
    for c in (1.0, 2.0, 4.0, 8.0):
        psi = solve_R(F, c * t)
        assert (apply_T(psi, c * t) - F).norm() < 1e-12
        ratios.append(psi.norm() * c)
    assert max(ratios) / min(ratios) == pytest.approx(1.0, rel=1e-10)


def test_solve_R_rejects_tiny_direction():
    with pytest.raises(ConditioningError):
        solve_R(SymTensor(1, 2, [1.0, 1.0]), [1e-13, 0.0])


def test_csv_round_trip(tmp_path, rng):
    psi = SymTensor.random(3, 2, rng)
    path = tmp_path / "psi.csv"
    psi.to_csv(path)
    back = SymTensor.from_csv(path, 3, 2)
    np.testing.assert_allclose(back.values, psi.values, rtol=1e-12)
    assert math.isclose(back.norm(), psi.norm(), rel_tol=1e-12)
