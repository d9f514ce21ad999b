"""Smooth fields with derivative oracles.

A field is a function of several point groups, each a point in ℝ^d:
symbols use the groups (x, ξ), amplitudes (x, x′, ξ), phase profiles (x).
Derivatives are requested with one multi-index per group, in group order.

Fields compose (sums, products, slot embeddings) and every composite
supplies exact derivatives through the Leibniz rule.  Radial profiles are
differentiated through q = |t|² with a set-partition chain rule, which
keeps the oracles exact up to the order the profile supports.
"""

import math
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from operators.errors import DomainError, UnsupportedOrderError
from operators.multiindex import (
    MultiIndex,
    compose_derivative,
    falling_factorial,
    index_list,
    order,
    partial_bell,
    set_partitions,
    sub_indices,
    subtract,
)

Orders = tuple[MultiIndex, ...]

DEFAULT_MAX_ORDER = 8
SMOOTHSTEP_DEGREE = 8


def as_points(p, d: int) -> np.ndarray:
    """Coerce input to a float array whose last axis has length ``d``."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != d:
        raise DomainError(f"expected points in R^{d}, got trailing axis {arr.shape[-1]}")
    return arr


class SmoothField(ABC):
    """Base class: a smooth function of ``groups`` points in ℝ^d."""

    def __init__(self, groups: int, dimension: int, max_order: int = DEFAULT_MAX_ORDER):
        self.groups = groups
        self.dimension = dimension
        self.max_order = max_order

    def depends_on(self, group: int) -> bool:
        return True

    def zero_orders(self) -> Orders:
        return tuple((0,) * self.dimension for _ in range(self.groups))

    def normalize_orders(self, orders) -> Orders:
        if orders is None:
            return self.zero_orders()
        if len(orders) != self.groups:
            raise DomainError(f"expected {self.groups} multi-indices, got {len(orders)}")
        result = []
        for alpha in orders:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dimension or any(a < 0 for a in alpha):
                raise DomainError(f"invalid multi-index {alpha} for dimension {self.dimension}")
            result.append(alpha)
        return tuple(result)

    def __call__(self, *points) -> np.ndarray:
        return self.derivative(None, *points)

    def derivative(self, orders, *points) -> np.ndarray:
        """Evaluate the mixed derivative given by ``orders`` at ``points``.

        Raises:
            UnsupportedOrderError: total order exceeds the field's oracle.
        """
        orders = self.normalize_orders(orders)
        total = sum(order(alpha) for alpha in orders)
        if total > self.max_order:
            raise UnsupportedOrderError(
                f"{type(self).__name__} supplies derivatives up to order "
                f"{self.max_order}, requested {total}"
            )
        if len(points) != self.groups:
            raise DomainError(f"expected {self.groups} point arguments, got {len(points)}")
        pts = [as_points(p, self.dimension) for p in points]
        shape = np.broadcast_shapes(*(p.shape[:-1] for p in pts))
        value = np.asarray(self._derivative(orders, pts))
        if value.shape == shape:
            return value
        return np.broadcast_to(value, shape).copy()

    def other_groups_active(self, orders: Orders, group: int) -> bool:
        return any(order(alpha) for g, alpha in enumerate(orders) if g != group)

    @abstractmethod
    def _derivative(self, orders: Orders, points: list[np.ndarray]) -> np.ndarray:
        """Unbroadcast derivative; result only needs to broadcast to the point shape."""


class ConstantField(SmoothField):
    def __init__(self, value, groups: int, dimension: int):
        super().__init__(groups, dimension, max_order=64)
        self.value = value

    def depends_on(self, group: int) -> bool:
        return False

    def _derivative(self, orders, points):
        if any(order(alpha) for alpha in orders):
            return np.zeros(())
        return np.asarray(self.value)


# ── Radial profiles R(q), q = |t|² ──


@lru_cache(maxsize=None)
def smoothstep_polynomial(degree: int = SMOOTHSTEP_DEGREE) -> Polynomial:
    """Polynomial smoothstep S on [0,1] with ``degree`` vanishing derivatives at both ends."""
    k = degree
    coeffs = np.zeros(2 * k + 2)
    for j in range(k + 1):
        coeffs[k + 1 + j] = math.comb(k + j, j) * math.comb(2 * k + 1, k - j) * (-1) ** j
    return Polynomial(coeffs)


def smoothstep_derivatives(t: np.ndarray, n: int) -> list[np.ndarray]:
    """S^{(j)}(t) for j = 0..n with S clamped to 0 below 0 and 1 above 1."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    poly = smoothstep_polynomial()
    result = []
    for j in range(n + 1):
        inner = poly.deriv(j)(tc) if j else poly(tc)
        if j == 0:
            result.append(np.where(t >= 1.0, 1.0, np.where(inside, inner, 0.0)))
        else:
            result.append(np.where(inside, inner, 0.0))
    return result


class RadialProfile(ABC):
    """A one-variable function R(q) with derivatives up to a fixed order."""

    max_order: int = DEFAULT_MAX_ORDER

    @abstractmethod
    def derivatives(self, q: np.ndarray, n: int) -> list[np.ndarray]:
        """Return [R(q), R'(q), ..., R^{(n)}(q)]."""


class PowerProfile(RadialProfile):
    """R(q) = (1+q)^{m/2}, i.e. the Japanese bracket ⟨t⟩^m."""

    max_order = 64

    def __init__(self, m: float):
        self.m = m

    def derivatives(self, q, n):
        half = self.m / 2.0
        return [falling_factorial(half, k) * (1.0 + q) ** (half - k) for k in range(n + 1)]


class GaussianProfile(RadialProfile):
    """R(q) = exp(-q)."""

    max_order = 64

    def derivatives(self, q, n):
        e = np.exp(-q)
        return [(-1.0) ** k * e for k in range(n + 1)]


class BumpProfile(RadialProfile):
    """R(q) = exp(1 - 1/(1-q)) for q < 1 and 0 otherwise; R(0) = 1."""

    def derivatives(self, q, n):
        q = np.asarray(q, dtype=float)
        inside = q < 1.0 - 1e-10
        qs = np.where(inside, q, 0.0)
        gap = 1.0 - qs
        h = [1.0 - 1.0 / gap]
        h.extend(-math.factorial(j) / gap ** (j + 1) for j in range(1, n + 1))
        e = np.where(inside, np.exp(h[0]), 0.0)
        result = [e]
        for k in range(1, n + 1):
            bell = sum(partial_bell(k, j, h[1:]) for j in range(1, k + 1))
            result.append(np.where(inside, e * bell, 0.0))
        return result


class SFunctionProfile(RadialProfile):
    """R(q) = F(√q) for an F that is constant on [0, flat_radius]."""

    def __init__(self, flat_radius: float, flat_value: float):
        if flat_radius <= 0:
            raise DomainError("flat_radius must be positive")
        self.flat_radius = flat_radius
        self.flat_value = flat_value

    @abstractmethod
    def s_derivatives(self, s: np.ndarray, n: int) -> list[np.ndarray]:
        """Return [F(s), ..., F^{(n)}(s)]."""

    def derivatives(self, q, n):
        q = np.asarray(q, dtype=float)
        flat = q <= self.flat_radius ** 2
        qs = np.where(flat, self.flat_radius ** 2, q)
        s = np.sqrt(qs)
        outer = self.s_derivatives(s, n)
        inner = [falling_factorial(0.5, i) * qs ** (0.5 - i) for i in range(1, n + 1)]
        result = []
        for k in range(n + 1):
            value = compose_derivative(outer, inner, k)
            fill = self.flat_value if k == 0 else 0.0
            result.append(np.where(flat, fill, value))
        return result


class CutoffPowerProfile(SFunctionProfile):
    """F(s) = χ(s)·s^r with χ the smoothstep from 0 (s <= lower) to 1 (s >= upper)."""

    def __init__(self, r: float, lower: float = 1.0, upper: float = 2.0):
        if not 0 < lower < upper:
            raise DomainError(f"cutoff edges must satisfy 0 < lower < upper, got {lower}, {upper}")
        super().__init__(flat_radius=lower, flat_value=0.0)
        self.r = r
        self.lower = lower
        self.upper = upper

    def s_derivatives(self, s, n):
        width = self.upper - self.lower
        chi = smoothstep_derivatives((s - self.lower) / width, n)
        chi = [c / width ** j for j, c in enumerate(chi)]
        power = [falling_factorial(self.r, j) * s ** (self.r - j) for j in range(n + 1)]
        return [
            sum(math.comb(j, i) * chi[i] * power[j - i] for i in range(j + 1))
            for j in range(n + 1)
        ]


class PlateauProfile(SFunctionProfile):
    """F(s) = 1 on [0, inner], smoothly down to 0 at ``outer``."""

    def __init__(self, inner: float, outer: float):
        if not 0 < inner < outer:
            raise DomainError(f"plateau radii must satisfy 0 < inner < outer, got {inner}, {outer}")
        super().__init__(flat_radius=inner, flat_value=1.0)
        self.inner = inner
        self.outer = outer

    def s_derivatives(self, s, n):
        width = self.outer - self.inner
        step = smoothstep_derivatives((s - self.inner) / width, n)
        result = [1.0 - step[0]]
        result.extend(-step[j] / width ** j for j in range(1, n + 1))
        return result


@lru_cache(maxsize=None)
def _radial_partitions(n: int):
    return tuple(p for p in set_partitions(n) if all(len(block) <= 2 for block in p))


class RadialField(SmoothField):
    """f = R(|(p − center)/scale|²) in one point group."""

    def __init__(
        self,
        profile: RadialProfile,
        group: int,
        groups: int,
        dimension: int,
        center: Optional[Sequence[float]] = None,
        scale: float = 1.0,
    ):
        super().__init__(groups, dimension, max_order=profile.max_order)
        if scale <= 0:
            raise DomainError(f"scale must be positive, got {scale}")
        self.profile = profile
        self.group = group
        self.center = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        self.scale = float(scale)

    def depends_on(self, group: int) -> bool:
        return group == self.group

    def _derivative(self, orders, points):
        if self.other_groups_active(orders, self.group):
            return np.zeros(())
        alpha = orders[self.group]
        n = order(alpha)
        t = (points[self.group] - self.center) / self.scale
        q = np.sum(t * t, axis=-1)
        derivs = self.profile.derivatives(q, n)
        if n == 0:
            return derivs[0]
        axes = index_list(alpha)
        total = np.zeros(())
        for partition in _radial_partitions(n):
            factor = derivs[len(partition)]
            for block in partition:
                if len(block) == 1:
                    factor = factor * (2.0 * t[..., axes[block[0]]] / self.scale)
                elif axes[block[0]] == axes[block[1]]:
                    factor = factor * (2.0 / self.scale ** 2)
                else:
                    factor = None
                    break
            if factor is not None:
                total = total + factor
        return total


class PolynomialField(SmoothField):
    """Σ c_α (p − center)^α in one point group; coefficients may be complex."""

    def __init__(
        self,
        coefficients: Mapping[MultiIndex, complex],
        group: int,
        groups: int,
        dimension: int,
        center: Optional[Sequence[float]] = None,
    ):
        super().__init__(groups, dimension, max_order=64)
        self.coefficients = {tuple(k): v for k, v in coefficients.items()}
        self.group = group
        self.center = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)

    def depends_on(self, group: int) -> bool:
        return group == self.group

    def _derivative(self, orders, points):
        if self.other_groups_active(orders, self.group):
            return np.zeros(())
        beta = orders[self.group]
        p = points[self.group] - self.center
        total = np.zeros(())
        for alpha, coeff in self.coefficients.items():
            if any(a < b for a, b in zip(alpha, beta)):
                continue
            term = coeff * math.prod(falling_factorial(a, b) for a, b in zip(alpha, beta))
            for axis, (a, b) in enumerate(zip(alpha, beta)):
                if a > b:
                    term = term * p[..., axis] ** (a - b)
            total = total + term
        return total


class ProductField(SmoothField):
    """Pointwise product f·g with Leibniz-rule derivatives."""

    def __init__(self, left: SmoothField, right: SmoothField):
        _check_compatible(left, right)
        super().__init__(left.groups, left.dimension, min(left.max_order, right.max_order))
        self.left = left
        self.right = right

    def depends_on(self, group: int) -> bool:
        return self.left.depends_on(group) or self.right.depends_on(group)

    def _derivative(self, orders, points):
        per_group = []
        for g, alpha in enumerate(orders):
            options = []
            for gamma, coeff in sub_indices(alpha):
                rest = subtract(alpha, gamma)
                if order(gamma) and not self.left.depends_on(g):
                    continue
                if order(rest) and not self.right.depends_on(g):
                    continue
                options.append((gamma, rest, coeff))
            if not options:
                return np.zeros(())
            per_group.append(options)
        total = np.zeros(())
        for choice in _cartesian(per_group):
            left_orders = tuple(c[0] for c in choice)
            right_orders = tuple(c[1] for c in choice)
            coeff = math.prod(c[2] for c in choice)
            total = total + coeff * (
                self.left._derivative(left_orders, points)
                * self.right._derivative(right_orders, points)
            )
        return total


class SumField(SmoothField):
    """Linear combination Σ c_j f_j."""

    def __init__(self, terms: Sequence[tuple[complex, SmoothField]]):
        if not terms:
            raise DomainError("SumField needs at least one term")
        first = terms[0][1]
        for _, field in terms[1:]:
            _check_compatible(first, field)
        super().__init__(first.groups, first.dimension, min(f.max_order for _, f in terms))
        self.terms = list(terms)

    def depends_on(self, group: int) -> bool:
        return any(f.depends_on(group) for _, f in self.terms)

    def _derivative(self, orders, points):
        total = np.zeros(())
        for coeff, field in self.terms:
            if any(order(alpha) and not field.depends_on(g) for g, alpha in enumerate(orders)):
                continue
            total = total + coeff * field._derivative(orders, points)
        return total


class SlotField(SmoothField):
    """Embed a field into a larger group layout: inner group i reads outer group ``slots[i]``."""

    def __init__(self, inner: SmoothField, slots: Sequence[int], groups: int):
        if len(slots) != inner.groups:
            raise DomainError(f"need {inner.groups} slots, got {len(slots)}")
        super().__init__(groups, inner.dimension, inner.max_order)
        self.inner = inner
        self.slots = tuple(slots)

    def depends_on(self, group: int) -> bool:
        return group in self.slots and self.inner.depends_on(self.slots.index(group))

    def _derivative(self, orders, points):
        for g, alpha in enumerate(orders):
            if g not in self.slots and order(alpha):
                return np.zeros(())
        inner_orders = tuple(orders[s] for s in self.slots)
        inner_points = [points[s] for s in self.slots]
        return self.inner._derivative(inner_orders, inner_points)


class FiniteDifferenceField(SmoothField):
    """Wrap a plain vectorized callable; derivatives by nested central differences.

    Frequency groups use the step ``step·(1+|ξ|)``.
    """

    def __init__(
        self,
        func: Callable[..., np.ndarray],
        groups: int,
        dimension: int,
        frequency_groups: Sequence[int] = (),
        step: float = 1e-4,
        max_order: int = 2,
    ):
        super().__init__(groups, dimension, max_order)
        self.func = func
        self.frequency_groups = tuple(frequency_groups)
        self.step = step

    def _derivative(self, orders, points):
        axes = [(g, k) for g, alpha in enumerate(orders) for k in index_list(alpha)]
        return self._difference(axes, points)

    def _difference(self, axes, points):
        if not axes:
            return np.asarray(self.func(*points))
        (group, axis), rest = axes[0], axes[1:]
        base = points[group]
        h = np.full(base.shape[:-1], self.step)
        if group in self.frequency_groups:
            h = self.step * (1.0 + np.linalg.norm(base, axis=-1))
        shift = np.zeros_like(base)
        shift[..., axis] = h
        plus = list(points)
        minus = list(points)
        plus[group] = base + shift
        minus[group] = base - shift
        return (self._difference(rest, plus) - self._difference(rest, minus)) / (2.0 * h)


def multiply(*fields: SmoothField) -> SmoothField:
    result = fields[0]
    for field in fields[1:]:
        result = ProductField(result, field)
    return result


def _check_compatible(f: SmoothField, g: SmoothField) -> None:
    if f.groups != g.groups or f.dimension != g.dimension:
        raise DomainError(
            f"incompatible fields: groups {f.groups}/{g.groups}, dimension {f.dimension}/{g.dimension}"
        )


def _cartesian(options: list[list]):
    if not options:
        yield ()
        return
    for head in options[0]:
        for tail in _cartesian(options[1:]):
            yield (head,) + tail


class ConjugateField(SmoothField):
    """Complex conjugate of a field; derivatives in real variables commute with conjugation."""

    def __init__(self, inner: SmoothField):
        super().__init__(inner.groups, inner.dimension, inner.max_order)
        self.inner = inner

    def depends_on(self, group: int) -> bool:
        return self.inner.depends_on(group)

    def _derivative(self, orders, points):
        return np.conj(self.inner._derivative(orders, points))
