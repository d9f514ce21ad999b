"""
Phase functions, oscillating symbols and amplitudes.

Symbols live on the point groups (x, ξ); amplitudes on (x, x′, ξ).
An oscillating symbol is a = e^{iΦ}b with Φ ∈ S^r and b ∈ S^m; its class is
S^m_{1−r, r}.  Class membership is declared by the constructor and can be
spot-checked with probe_seminorm, never proven.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from logger_setup import get_logger
from operators.errors import DomainError, UnsupportedOrderError
from operators.fields import (
    BumpProfile,
    ConjugateField,
    ConstantField,
    CutoffPowerProfile,
    PlateauProfile,
    PolynomialField,
    PowerProfile,
    ProductField,
    RadialField,
    SlotField,
    SmoothField,
    SumField,
    multiply,
)
from operators.multiindex import order, set_partitions, sub_indices, subtract, unit_index, zero_index

logger = get_logger()

# Point-group layout
SYMBOL_GROUPS = 2
AMPLITUDE_GROUPS = 3
X, XI = 0, 1
AX, AXP, AXI = 0, 1, 2


@dataclass(frozen=True)
class SymbolClass:
    """Declared class S^m_{ρ,δ}: |∂^α_ξ ∂^β_x f| ≲ (1+|ξ|)^{m − ρ|α| + δ|β|}."""

    m: float
    rho: float = 1.0
    delta: float = 0.0

    def exponent(self, alpha: Sequence[int], beta: Sequence[int]) -> float:
        return self.m - self.rho * order(alpha) + self.delta * order(beta)


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def cube(cls, d: int, lower: float, upper: float) -> "Box":
        return cls(np.full(d, float(lower)), np.full(d, float(upper)))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lower) & (points <= self.upper), axis=-1)


class PhaseFunction:
    """A real phase Φ(x, ξ) (or Θ(x, x′, ξ)) of declared order r ∈ [0, 1)."""

    def __init__(self, field: SmoothField, order_r: float, kind: str = "custom"):
        if not 0.0 <= order_r < 1.0:
            raise DomainError(f"phase order r must lie in [0, 1), got {order_r}")
        self.field = field
        self.order_r = float(order_r)
        self.kind = kind

    @property
    def dimension(self) -> int:
        return self.field.dimension

    @property
    def groups(self) -> int:
        return self.field.groups

    @property
    def is_zero(self) -> bool:
        return isinstance(self.field, ConstantField) and self.field.value == 0

    @property
    def symbol_class(self) -> SymbolClass:
        return SymbolClass(self.order_r, 1.0, 0.0)

    def __call__(self, *points) -> np.ndarray:
        return np.real(self.field(*points))

    def derivative(self, orders, *points) -> np.ndarray:
        return np.real(self.field.derivative(orders, *points))

    def deriv(self, alpha, beta, x, xi) -> np.ndarray:
        """∂^α_ξ ∂^β_x Φ(x, ξ) for a symbol-layout phase."""
        return self.derivative((beta, alpha), x, xi)


def phase_factor_derivative(phase: PhaseFunction, orders, points, cache: dict) -> np.ndarray:
    """e^{−iΦ} ∂^O e^{iΦ} as a sum over set partitions of the derivative axes.

    ``cache`` maps per-block orders to phase derivatives already evaluated at ``points``.
    """
    axes = [(g, k) for g, alpha in enumerate(orders) for k, count in enumerate(alpha) for _ in range(count)]
    if not axes:
        return np.ones(())
    d = phase.dimension
    total = np.zeros((), dtype=complex)
    for partition in set_partitions(len(axes)):
        term = np.ones((), dtype=complex)
        for block in partition:
            counts = [[0] * d for _ in range(phase.groups)]
            for i in block:
                g, k = axes[i]
                counts[g][k] += 1
            key = tuple(tuple(c) for c in counts)
            if key not in cache:
                cache[key] = phase.derivative(key, *points)
            term = term * (1j * cache[key])
        total = total + term
    return total


class OscillatingField:
    """e^{iΦ}·b on a common point-group layout; shared by symbols and amplitudes."""

    groups: int = SYMBOL_GROUPS

    def __init__(
        self,
        phase: PhaseFunction,
        base: SmoothField,
        order_m: float,
        support: Optional[Box] = None,
    ):
        if phase.groups != self.groups or base.groups != self.groups:
            raise DomainError(
                f"{type(self).__name__} expects {self.groups} point groups, "
                f"got phase {phase.groups} and base {base.groups}"
            )
        if phase.dimension != base.dimension:
            raise DomainError(f"phase dimension {phase.dimension} != base dimension {base.dimension}")
        self.phase = phase
        self.base = base
        self.order_m = float(order_m)
        self.support = support

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def max_order(self) -> int:
        return min(self.base.max_order, self.phase.field.max_order)

    def __call__(self, *points) -> np.ndarray:
        return np.exp(1j * self.phase(*points)) * self.base(*points)

    def reduced_derivative(self, orders, *points) -> np.ndarray:
        """e^{−iΦ} ∂^O (e^{iΦ} b) by the Leibniz rule over γ ≤ O."""
        orders = self.base.normalize_orders(orders)
        if sum(order(alpha) for alpha in orders) > self.max_order:
            raise UnsupportedOrderError(
                f"oscillating {type(self).__name__} supplies derivatives up to order {self.max_order}"
            )
        cache: dict = {}
        total = np.zeros((), dtype=complex)
        for gammas in _per_group_sub_indices(orders):
            gamma = tuple(g for g, _ in gammas)
            coeff = np.prod([c for _, c in gammas])
            rest = tuple(subtract(o, g) for o, g in zip(orders, gamma))
            if any(order(r) and not self.base.depends_on(i) for i, r in enumerate(rest)):
                continue
            factor = phase_factor_derivative(self.phase, gamma, points, cache)
            total = total + coeff * factor * self.base.derivative(rest, *points)
        return total

    def derivative(self, orders, *points) -> np.ndarray:
        return np.exp(1j * self.phase(*points)) * self.reduced_derivative(orders, *points)

    def support_violation(self, *points) -> float:
        """Largest |b| found at probe points outside the declared x-support."""
        if self.support is None:
            return 0.0
        outside = ~self.support.contains(np.asarray(points[0], dtype=float))
        values = np.abs(self.base(*points))
        values = np.broadcast_to(values, np.broadcast_shapes(values.shape, outside.shape))
        mask = np.broadcast_to(outside, values.shape)
        return float(values[mask].max()) if mask.any() else 0.0


class OscillatingSymbol(OscillatingField):
    """a(x, ξ) = e^{iΦ(x,ξ)} b(x, ξ) with Φ ∈ S^r and b ∈ S^m."""

    groups = SYMBOL_GROUPS

    @property
    def symbol_class(self) -> SymbolClass:
        r = self.phase.order_r
        return SymbolClass(self.order_m, 1.0 - r, r)

    def deriv(self, alpha, beta, x, xi) -> np.ndarray:
        return self.derivative((beta, alpha), x, xi)


class OscillatingAmplitude(OscillatingField):
    """𝐚(x, x′, ξ) = e^{iΘ(x,x′,ξ)} 𝐛(x, x′, ξ).

    ``factors`` optionally holds callables (left(x, ξ), right(x′, ξ)) with
    𝐚 = left·right, which lets quadratures sum over x′ first.
    """

    groups = AMPLITUDE_GROUPS

    def __init__(
        self,
        phase: PhaseFunction,
        base: SmoothField,
        order_m: float,
        support: Optional[Box] = None,
        factors: Optional[tuple[Callable, Callable]] = None,
    ):
        super().__init__(phase, base, order_m, support)
        self.factors = factors

    @property
    def symbol_class(self) -> SymbolClass:
        r = self.phase.order_r
        return SymbolClass(self.order_m, 1.0 - r, r)

    @classmethod
    def from_symbol(cls, a: "SymbolLike") -> "OscillatingAmplitude":
        """x′-independent amplitude 𝐚(x, x′, ξ) = a(x, ξ)."""
        phase, base = _symbol_parts(a)
        theta = PhaseFunction(SlotField(phase.field, (AX, AXI), AMPLITUDE_GROUPS), phase.order_r, "left_slot")
        amp_base = SlotField(base, (AX, AXI), AMPLITUDE_GROUPS)

        def right(xp, xi):
            return np.ones(())

        support = getattr(a, "support", None)
        return cls(theta, amp_base, a.order_m, support, factors=(a, right))

    @classmethod
    def from_right_symbol(cls, a: "SymbolLike") -> "OscillatingAmplitude":
        """x-independent amplitude 𝐚(x, x′, ξ) = a(x′, ξ)."""
        phase, base = _symbol_parts(a)
        theta = right_slot_phase(phase)
        amp_base = SlotField(base, (AXP, AXI), AMPLITUDE_GROUPS)

        def left(x, xi):
            return np.ones(())

        return cls(theta, amp_base, a.order_m, getattr(a, "support", None), factors=(left, a))

    @classmethod
    def from_product(cls, left: "SymbolLike", right: "SymbolLike") -> "OscillatingAmplitude":
        """Amplitude a_L(x, ξ)·conj(a_R(x′, ξ)) of the operator product A_L A_R*."""
        phase_l, base_l = _symbol_parts(left)
        phase_r, base_r = _symbol_parts(right)
        if phase_l is phase_r and not phase_l.is_zero:
            theta = difference_phase(phase_l)
        else:
            theta_field = SumField(
                [
                    (1.0, SlotField(phase_l.field, (AX, AXI), AMPLITUDE_GROUPS)),
                    (-1.0, SlotField(phase_r.field, (AXP, AXI), AMPLITUDE_GROUPS)),
                ]
            )
            theta = PhaseFunction(theta_field, max(phase_l.order_r, phase_r.order_r), "product")
        base = ProductField(
            SlotField(base_l, (AX, AXI), AMPLITUDE_GROUPS),
            SlotField(ConjugateField(base_r), (AXP, AXI), AMPLITUDE_GROUPS),
        )

        def right_factor(xp, xi):
            return np.conj(right(xp, xi))

        return cls(
            theta,
            base,
            left.order_m + right.order_m,
            getattr(left, "support", None),
            factors=(left, right_factor),
        )


class PlainSymbol:
    """A non-oscillating symbol b(x, ξ) with a declared class."""

    def __init__(self, field: SmoothField, symbol_class: Union[SymbolClass, float], support: Optional[Box] = None):
        if field.groups != SYMBOL_GROUPS:
            raise DomainError(f"symbols use {SYMBOL_GROUPS} point groups, got {field.groups}")
        if not isinstance(symbol_class, SymbolClass):
            symbol_class = SymbolClass(float(symbol_class))
        self.field = field
        self.symbol_class = symbol_class
        self.support = support

    @property
    def dimension(self) -> int:
        return self.field.dimension

    @property
    def order_m(self) -> float:
        return self.symbol_class.m

    @property
    def max_order(self) -> int:
        return self.field.max_order

    def __call__(self, x, xi) -> np.ndarray:
        return self.field(x, xi)

    def derivative(self, orders, x, xi) -> np.ndarray:
        return self.field.derivative(orders, x, xi)

    def reduced_derivative(self, orders, x, xi) -> np.ndarray:
        return self.field.derivative(orders, x, xi)

    def deriv(self, alpha, beta, x, xi) -> np.ndarray:
        return self.field.derivative((beta, alpha), x, xi)


SymbolLike = Union[OscillatingSymbol, PlainSymbol]


def _symbol_parts(a: SymbolLike) -> tuple[PhaseFunction, SmoothField]:
    if isinstance(a, OscillatingSymbol):
        return a.phase, a.base
    if isinstance(a, PlainSymbol):
        return zero_phase(a.dimension), a.field
    raise DomainError(f"expected a symbol, got {type(a).__name__}")


def _per_group_sub_indices(orders):
    options = [list(sub_indices(alpha)) for alpha in orders]

    def walk(i):
        if i == len(options):
            yield ()
            return
        for head in options[i]:
            for tail in walk(i + 1):
                yield (head,) + tail

    return walk(0)


# ── Probing ──


@dataclass(frozen=True)
class ProbePlan:
    """Probe points; every x is paired with every ξ."""

    x: np.ndarray
    xi: np.ndarray

    @classmethod
    def dyadic(
        cls,
        box: Box,
        xi_min: float,
        xi_max: float,
        rng: np.random.Generator,
        x_count: int = 16,
        shells: int = 8,
        directions: int = 4,
    ) -> "ProbePlan":
        d = box.dimension
        x = box.lower + (box.upper - box.lower) * rng.random((x_count, d))
        radii = np.geomspace(xi_min, xi_max, shells)
        dirs = rng.standard_normal((directions, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        xi = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        return cls(x, xi)


def probe_seminorm(f, alpha, beta, K: Box, probes: ProbePlan) -> float:
    """Empirical lower bound for the (α, β) semi-norm of ``f`` on ``K``.

    Returns max |∂^α_ξ ∂^β_x f| · (1+|ξ|)^{−(m − ρ|α| + δ|β|)} over the probes
    whose x lies in ``K``, with (m, ρ, δ) taken from ``f.symbol_class``.

    Raises:
        DomainError: no probe point lies in ``K``.
        UnsupportedOrderError: the oracle of ``f`` cannot supply the order.
    """
    x = np.asarray(probes.x, dtype=float)
    xi = np.asarray(probes.xi, dtype=float)
    x = x[K.contains(x)]
    if len(x) == 0 or len(xi) == 0:
        raise DomainError("probe plan has no points inside K")
    values = np.abs(f.deriv(alpha, beta, x[:, None, :], xi[None, :, :]))
    weight = (1.0 + np.linalg.norm(xi, axis=-1)) ** (-f.symbol_class.exponent(alpha, beta))
    return float(np.max(values * weight[None, :]))


# ── Model constructors ──


def zero_phase(d: int, groups: int = SYMBOL_GROUPS) -> PhaseFunction:
    return PhaseFunction(ConstantField(0.0, groups, d), 0.0, "zero")


def spatial_profile(
    d: int,
    center: Sequence[float],
    width: float,
    groups: int = SYMBOL_GROUPS,
    group: int = X,
    profile: str = "bump",
    flat: float = 0.5,
) -> SmoothField:
    """A compactly supported profile in one spatial group, equal to 1 at ``center``.

    ``bump`` is exp(1 − 1/(1−|t|²)); ``plateau`` is ≡ 1 on |t| ≤ ``flat``.
    """
    if profile == "bump":
        shape = BumpProfile()
    elif profile == "plateau":
        shape = PlateauProfile(flat, 1.0)
    else:
        raise DomainError(f"unknown spatial profile {profile!r}")
    return RadialField(shape, group, groups, d, center=center, scale=width)


def frequency_cutoff(d: int, lower: float = 1.0, upper: float = 2.0, groups: int = SYMBOL_GROUPS, group: int = XI) -> SmoothField:
    """χ(|ξ|): 0 for |ξ| ≤ lower, 1 for |ξ| ≥ upper."""
    return RadialField(CutoffPowerProfile(0.0, lower, upper), group, groups, d)


def japanese_bracket(m: float, d: int, groups: int = SYMBOL_GROUPS, group: int = XI) -> SmoothField:
    """⟨ξ⟩^m = (1+|ξ|²)^{m/2}."""
    return RadialField(PowerProfile(m), group, groups, d)


def model_phase(kind: str, d: int = 1, **params) -> PhaseFunction:
    """Build one of the shipped phase archetypes.

    Args:
        kind: ``long_range``, ``zero`` or ``linear``
        d: space dimension
        **params: for ``long_range``: r, center, width, amplitude, slope,
            profile (``bump``/``plateau``), flat, cutoff_lower, cutoff_upper.
            For ``linear``: c (vector), radius.

    Returns:
        PhaseFunction with analytic derivative oracles.

    Raises:
        DomainError: unknown kind or r outside [0, 1).
    """
    if kind == "zero":
        return zero_phase(d)

    if kind == "long_range":
        r = float(params.get("r", 0.5))
        if not 0.0 <= r < 1.0:
            raise DomainError(f"long_range phase needs r in [0, 1), got {r}")
        center = np.asarray(params.get("center", np.zeros(d)), dtype=float).reshape(d)
        width = float(params.get("width", 1.0))
        amplitude = float(params.get("amplitude", 1.0))
        slope = np.asarray(params.get("slope", np.zeros(d)), dtype=float).reshape(d)
        coefficients = {zero_index(d): amplitude}
        for k in range(d):
            if slope[k]:
                coefficients[unit_index(d, k)] = slope[k]
        v = multiply(
            PolynomialField(coefficients, X, SYMBOL_GROUPS, d, center=center),
            spatial_profile(
                d, center, width, profile=params.get("profile", "bump"), flat=float(params.get("flat", 0.5))
            ),
        )
        radial = RadialField(
            CutoffPowerProfile(r, float(params.get("cutoff_lower", 1.0)), float(params.get("cutoff_upper", 2.0))),
            XI,
            SYMBOL_GROUPS,
            d,
        )
        logger.debug(f"long_range phase: r={r}, center={center.tolist()}, width={width}, amplitude={amplitude}")
        return PhaseFunction(ProductField(v, radial), r, "long_range")

    if kind == "linear":
        c = np.asarray(params.get("c", np.ones(d)), dtype=float).reshape(d)
        radius = float(params.get("radius", 64.0))
        linear = PolynomialField({unit_index(d, k): c[k] for k in range(d)}, XI, SYMBOL_GROUPS, d)
        plateau = RadialField(PlateauProfile(radius, 2.0 * radius), XI, SYMBOL_GROUPS, d)
        return PhaseFunction(ProductField(linear, plateau), 0.0, "linear")

    raise DomainError(f"unknown phase kind {kind!r}")


def difference_phase(phase: PhaseFunction) -> PhaseFunction:
    """Θ(x, x′, ξ) = Φ(x, ξ) − Φ(x′, ξ); vanishes on the diagonal."""
    field = SumField(
        [
            (1.0, SlotField(phase.field, (AX, AXI), AMPLITUDE_GROUPS)),
            (-1.0, SlotField(phase.field, (AXP, AXI), AMPLITUDE_GROUPS)),
        ]
    )
    return PhaseFunction(field, phase.order_r, "difference")


def right_slot_phase(phase: PhaseFunction) -> PhaseFunction:
    """Θ(x, x′, ξ) = Φ(x′, ξ)."""
    return PhaseFunction(SlotField(phase.field, (AXP, AXI), AMPLITUDE_GROUPS), phase.order_r, "right_slot")


def left_slot_phase(phase: PhaseFunction) -> PhaseFunction:
    """Θ(x, x′, ξ) = Φ(x, ξ)."""
    return PhaseFunction(SlotField(phase.field, (AX, AXI), AMPLITUDE_GROUPS), phase.order_r, "left_slot")


def shift_phase(c: Sequence[float], d: int, lower: float = 1.0, upper: float = 2.0) -> PhaseFunction:
    """Θ(x, x′, ξ) = ⟨c, x′ − x⟩·χ(|ξ|)."""
    c = np.asarray(c, dtype=float).reshape(d)
    coeffs = {unit_index(d, k): c[k] for k in range(d)}
    difference = SumField(
        [
            (1.0, PolynomialField(coeffs, AXP, AMPLITUDE_GROUPS, d)),
            (-1.0, PolynomialField(coeffs, AX, AMPLITUDE_GROUPS, d)),
        ]
    )
    field = ProductField(difference, frequency_cutoff(d, lower, upper, AMPLITUDE_GROUPS, AXI))
    return PhaseFunction(field, 0.0, "shift")


def symbol_base(field: SmoothField, groups: int = AMPLITUDE_GROUPS, slots: Sequence[int] = (AX, AXI)) -> SmoothField:
    """Embed a symbol-layout field into the amplitude layout."""
    return SlotField(field, tuple(slots), groups)
