"""
Stationary-phase reductions.

Amplitude → symbol: the stationary point (z_s, η_s) of
    Ξ(z, η) = |ξ|^{−1} Θ(x, x+z, ξ+|ξ|η) − ⟨z, η⟩
gives Φ(x, ξ) = Θ(x, x+z_s, ξ+|ξ|η_s) − |ξ|⟨z_s, η_s⟩.

Action on an exponent e^{iλψ}: the stationary point y_s = x + Φ_ξ(x, λψ′(y_s))
gives the phase
    G(x, λ) = λ⟨x − y_s, ψ′(y_s)⟩ + Φ(x, λψ′(y_s)) + λψ(y_s) − λψ(x)
            = Φ(x, λψ′(x)) + λ^{−1+2r} Ω(x, λ).
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from config import (
    CONTRACTION_STALL_STEPS,
    EPS_LAMBDA_THRESHOLD,
    GAUSS_POINTS,
    IDENTITY_TOLERANCE,
    LAMBDA_MIN,
    MAX_ITER,
    SINGULAR_DET_TOLERANCE,
    TOL,
)
from logger_setup import get_logger
from operators.errors import (
    AliasingError,
    DivergenceError,
    PreconditionError,
    SingularityError,
)
from operators.fields import FiniteDifferenceField, PolynomialField, SmoothField, SumField
from operators.multiindex import MultiIndex, unit_index, zero_index
from operators.pdo_numerics import BAND_LIMIT_FRACTION, GridFunction, GridSpec, apply_symbol_pdo
from operators.symbols import AXI, AXP, XI, OscillatingAmplitude, OscillatingSymbol, PhaseFunction

logger = get_logger()


# ── Derivative helpers ──


def gradient(phase, group: int, points: Sequence[np.ndarray]) -> np.ndarray:
    """Stack of first derivatives in one point group, last axis d."""
    d = phase.dimension
    zero = zero_index(d)
    parts = []
    for k in range(d):
        orders = tuple(unit_index(d, k) if g == group else zero for g in range(phase.groups))
        parts.append(phase.derivative(orders, *points))
    return np.stack(parts, axis=-1)


def hessian(phase, first: int, second: int, points: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of second derivatives ∂_{first,i} ∂_{second,j}, last two axes d×d."""
    d = phase.dimension
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            counts = [list(zero_index(d)) for _ in range(phase.groups)]
            counts[first][i] += 1
            counts[second][j] += 1
            row.append(phase.derivative(tuple(tuple(c) for c in counts), *points))
        rows.append(np.stack(row, axis=-1))
    return np.stack(rows, axis=-2)


@lru_cache(maxsize=None)
def central_weights(order: int, accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central stencil for the ``order``-th derivative."""
    if order == 0:
        return np.zeros(1), np.ones(1)
    half = (order + 1) // 2 + accuracy // 2 - 1
    offsets = np.arange(-half, half + 1, dtype=float)
    n = len(offsets)
    vandermonde = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(vandermonde, rhs)


def finite_difference(func: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, alpha: MultiIndex, step: float) -> float:
    """∂^α func(x0) by a tensor product of 4th-order central stencils.

    ``func`` maps points of shape (P, d) to values of shape (P,).
    """
    x0 = np.asarray(x0, dtype=float)
    stencils = [central_weights(a) for a in alpha]
    grids = np.meshgrid(*[s[0] for s in stencils], indexing="ij")
    offsets = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weight_grids = np.meshgrid(*[s[1] for s in stencils], indexing="ij")
    weights = np.prod(np.stack([w.reshape(-1) for w in weight_grids], axis=-1), axis=-1)
    values = np.asarray(func(x0 + step * offsets))
    return float(np.real(np.sum(weights * values))) / step ** sum(alpha)


# ── Results ──


@dataclass
class StationaryPoint:
    """Fixed point with its certificate: iteration count, residual and iterate gaps."""

    location: np.ndarray
    eta: np.ndarray
    iterations: int
    residual: float
    gaps: list[float] = field(default_factory=list)

    def contraction_ratio(self, floor: float = 1e-14) -> float:
        """Largest ratio gap(p+1)/gap(p) among gaps above round-off."""
        ratios = [b / a for a, b in zip(self.gaps, self.gaps[1:]) if a > floor and b > floor]
        return max(ratios) if ratios else 0.0


def _iterate(step: Callable, start: tuple, tol: float, max_iter: int, what: str):
    """Run a fixed-point map until the max-norm gap drops below ``tol``."""
    state = start
    gaps: list[float] = []
    rising = 0
    for iteration in range(1, max_iter + 1):
        new_state = step(*state)
        gap = max(float(np.max(np.abs(n - o))) if np.size(n) else 0.0 for n, o in zip(new_state, state))
        gaps.append(gap)
        state = new_state
        logger.debug(f"{what} iteration {iteration}: gap {gap:.3e}")
        if gap < tol:
            return state, iteration, gaps
        rising = rising + 1 if len(gaps) > 1 and gap > gaps[-2] else 0
        if rising >= CONTRACTION_STALL_STEPS:
            raise DivergenceError(f"{what} does not contract: gap rose {rising} times in a row", gaps)
    raise DivergenceError(f"{what} did not reach tol {tol:.1e} in {max_iter} iterations", gaps)


# ── Amplitude → symbol ──


def solve_amplitude_stationary(
    theta: PhaseFunction,
    x,
    xi,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    lambda_min: float = LAMBDA_MIN,
) -> StationaryPoint:
    """Solve z = Θ_ξ(x, x+z, ξ+|ξ|η), η = |ξ|^{−1} Θ_y(x, x+z, ξ+|ξ|η) from z = η = 0.

    Raises:
        PreconditionError: |ξ| below ``lambda_min``.
        DivergenceError: the iteration does not contract.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    size = np.linalg.norm(xi, axis=-1)[..., None]
    if np.min(size) < lambda_min:
        raise PreconditionError(f"|ξ| = {float(np.min(size)):.3g} is below λ_min = {lambda_min}")
    shape = np.broadcast_shapes(x.shape, xi.shape)

    def step(z, eta):
        points = (x, x + z, xi + size * eta)
        return gradient(theta, AXI, points), gradient(theta, AXP, points) / size

    start = (np.zeros(shape), np.zeros(shape))
    (z, eta), iterations, gaps = _iterate(step, start, tol, max_iter, "amplitude stationary point")
    new_z, new_eta = step(z, eta)
    residual = max(float(np.max(np.abs(new_z - z))), float(np.max(np.abs(new_eta - eta))))
    return StationaryPoint(z, eta, iterations, residual, gaps)


@dataclass(frozen=True)
class HessianProbe:
    det_abs: float
    signature: int
    matrix: np.ndarray


def hessian_probe(theta: PhaseFunction, x, xi, at: tuple) -> HessianProbe:
    """|det| and signature of the (2d)×(2d) Hessian of Ξ in (z, η).

    Blocks: Ξ_zz = |ξ|^{−1}Θ_yy, Ξ_zη = Θ_yξ − I, Ξ_ηη = |ξ|Θ_ξξ.

    Raises:
        SingularityError: |det| below 1e−8.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    z, eta = (np.asarray(v, dtype=float) for v in at)
    d = theta.dimension
    size = float(np.linalg.norm(xi))
    points = (x, x + z, xi + size * eta)
    zz = hessian(theta, AXP, AXP, points) / size
    zeta = hessian(theta, AXP, AXI, points) - np.eye(d)
    ee = size * hessian(theta, AXI, AXI, points)
    matrix = np.block([[zz, zeta], [zeta.T, ee]])
    det = abs(float(np.linalg.det(matrix)))
    if det < SINGULAR_DET_TOLERANCE:
        raise SingularityError(f"Hessian of the amplitude phase is singular: |det| = {det:.3e}")
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    signature = int(np.sum(eigenvalues > 0) - np.sum(eigenvalues < 0))
    return HessianProbe(det, signature, matrix)


@dataclass(frozen=True)
class AmplitudeSymbolReport:
    phi_value: float
    b_leading: complex
    phi0_value: float
    point: StationaryPoint


def reduced_phase(theta: PhaseFunction, x, xi, **solver) -> tuple[np.ndarray, StationaryPoint]:
    """Φ(x, ξ) = Θ(x, x+z_s, ξ+|ξ|η_s) − |ξ|⟨z_s, η_s⟩ for broadcastable point arrays."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    shape = np.broadcast_shapes(x.shape, xi.shape)
    x = np.broadcast_to(x, shape)
    xi = np.broadcast_to(xi, shape)
    point = solve_amplitude_stationary(theta, x, xi, **solver)
    size = np.linalg.norm(xi, axis=-1)
    z, eta = point.location, point.eta
    phi = theta(x, x + z, xi + size[..., None] * eta) - size * np.sum(z * eta, axis=-1)
    return phi, point


def symbol_from_oscillating_amplitude(amp: OscillatingAmplitude, x, xi, **solver) -> AmplitudeSymbolReport:
    """Leading phase and amplitude of the symbol of an oscillating-amplitude PDO.

    Φ = Θ(x, x+z_s, ξ+|ξ|η_s) − |ξ|⟨z_s, η_s⟩, Φ₀ = Φ − Θ(x, x, ξ), b ≈ 𝐛(x, x, ξ).
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    phi, point = reduced_phase(amp.phase, x, xi, **solver)
    phi = float(phi)
    diagonal = float(amp.phase(x, x, xi))
    b = complex(amp.base(x, x, xi))
    return AmplitudeSymbolReport(phi, b, phi - diagonal, point)


def reduced_symbol(amp: OscillatingAmplitude, step: float = 1e-4, **solver) -> OscillatingSymbol:
    """The oscillating symbol e^{iΦ}𝐛(x, x, ξ) read off an amplitude pointwise.

    Derivatives of Φ and of the base come from central differences.
    """
    d = amp.dimension

    def phase(x, xi):
        return reduced_phase(amp.phase, x, xi, **solver)[0]

    def base(x, xi):
        return amp.base(x, x, xi)

    phi = PhaseFunction(FiniteDifferenceField(phase, 2, d, (XI,), step), amp.phase.order_r, "reduced")
    return OscillatingSymbol(phi, FiniteDifferenceField(base, 2, d, (XI,), step), amp.order_m, amp.support)


# ── Exponent action ──


class PhaseProfile:
    """A real phase ψ(x) with derivative oracles, valid on a ball U around ``center``."""

    def __init__(self, field: SmoothField, center: Sequence[float], radius: float = 0.5):
        if field.groups != 1:
            raise PreconditionError("a phase profile is a function of one point group")
        self.field = field
        self.center = np.asarray(center, dtype=float).reshape(field.dimension)
        self.radius = radius

    @classmethod
    def polynomial(cls, coefficients: dict, center: Sequence[float], radius: float = 0.5) -> "PhaseProfile":
        """ψ(x) = Σ c_α (x − center)^α."""
        center = np.asarray(center, dtype=float).reshape(-1)
        d = len(center)
        return cls(PolynomialField(coefficients, 0, 1, d, center=center), center, radius)

    @classmethod
    def linear(cls, xi0: Sequence[float], center: Sequence[float], radius: float = 0.5) -> "PhaseProfile":
        xi0 = np.asarray(xi0, dtype=float).reshape(-1)
        return cls.polynomial({unit_index(len(xi0), k): xi0[k] for k in range(len(xi0))}, center, radius)

    @classmethod
    def quadratic(cls, xi0, hess, center, radius: float = 0.5) -> "PhaseProfile":
        """ψ(x) = ⟨ξ₀, x−x₀⟩ + ½⟨H(x−x₀), x−x₀⟩."""
        xi0 = np.asarray(xi0, dtype=float).reshape(-1)
        d = len(xi0)
        hess = np.asarray(hess, dtype=float).reshape(d, d)
        coefficients: dict = {}
        for k in range(d):
            coefficients[unit_index(d, k)] = xi0[k]
        for i in range(d):
            for j in range(d):
                key = tuple(unit_index(d, i)[m] + unit_index(d, j)[m] for m in range(d))
                coefficients[key] = coefficients.get(key, 0.0) + 0.5 * hess[i, j]
        return cls.polynomial(coefficients, center, radius)

    def perturbed(self, sigma: float, perturbation: SmoothField) -> "PhaseProfile":
        """ψ + σ·perturbation on the same neighborhood."""
        return PhaseProfile(SumField([(1.0, self.field), (sigma, perturbation)]), self.center, self.radius)

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def value(self, y) -> np.ndarray:
        return np.real(self.field(y))

    def gradient(self, y) -> np.ndarray:
        return np.real(gradient(self.field, 0, (np.asarray(y, dtype=float),)))

    def hessian(self, y) -> np.ndarray:
        return np.real(hessian(self.field, 0, 0, (np.asarray(y, dtype=float),)))

    def check_assumption(self, c_min: float, probes: int = 9) -> float:
        """min |ψ′| on a probe grid of U.

        Raises:
            PreconditionError: |ψ′| drops below ``c_min`` on U.
        """
        d = self.dimension
        axes = [np.linspace(c - self.radius, c + self.radius, probes) for c in self.center]
        grids = np.meshgrid(*axes, indexing="ij")
        y = np.stack([g.reshape(-1) for g in grids], axis=-1)
        y = y[np.linalg.norm(y - self.center, axis=-1) <= self.radius + 1e-12]
        smallest = float(np.min(np.linalg.norm(self.gradient(y), axis=-1)))
        if smallest < c_min:
            raise PreconditionError(f"|ψ′| = {smallest:.3e} < {c_min} on U (d = {d})")
        return smallest


def solve_exponent_stationary(
    phi: PhaseFunction,
    psi: PhaseProfile,
    x,
    lam: float,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    lambda_min: float = LAMBDA_MIN,
) -> StationaryPoint:
    """Solve y = x + Φ_ξ(x, λψ′(y)) from y = x; ``x`` may hold many points.

    Raises:
        PreconditionError: λ below ``lambda_min`` or ψ′(x) = 0.
        DivergenceError: the iteration does not contract.
    """
    x = np.asarray(x, dtype=float)
    if lam < lambda_min:
        raise PreconditionError(f"λ = {lam} is below λ_min = {lambda_min}")
    if np.min(np.linalg.norm(psi.gradient(x), axis=-1)) == 0.0:
        raise PreconditionError("ψ′(x) vanishes at a requested point")

    def step(y):
        return (x + gradient(phi, XI, (x, lam * psi.gradient(y))),)

    (y,), iterations, gaps = _iterate(step, (x.copy(),), tol, max_iter, "exponent stationary point")
    residual = float(np.max(np.abs(step(y)[0] - y)))
    return StationaryPoint(y, psi.gradient(y), iterations, residual, gaps)


@dataclass
class ExponentPhaseReport:
    G: np.ndarray
    omega: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    phi_leading: np.ndarray
    y_s: np.ndarray
    eta_s: np.ndarray
    b_leading: Optional[np.ndarray] = None
    identity_gap: float = 0.0


def exponent_phase(
    phi: PhaseFunction,
    psi: PhaseProfile,
    x,
    lam: float,
    base: Optional[SmoothField] = None,
    gauss_points: int = GAUSS_POINTS,
    **solver,
) -> ExponentPhaseReport:
    """G(x, λ) at the stationary point together with Ω = Ω₁ + Ω₂ from the t-integral forms.

    Raises:
        PreconditionError: G and Φ(x, λψ′(x)) + λ^{−1+2r}Ω disagree beyond 1e−9 relative.
    """
    x = np.asarray(x, dtype=float)
    r = phi.order_r
    point = solve_exponent_stationary(phi, psi, x, lam, **solver)
    y, eta = point.location, point.eta
    grad_x = psi.gradient(x)
    G = (
        lam * np.sum((x - y) * eta, axis=-1)
        + phi(x, lam * eta)
        + lam * psi.value(y)
        - lam * psi.value(x)
    )
    leading = phi(x, lam * grad_x)

    nodes, weights = roots_legendre(gauss_points)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    delta = y - x
    omega1 = np.zeros(G.shape)
    omega2 = np.zeros(G.shape)
    for tq, wq in zip(t, w):
        Y = x + tq * delta
        H = psi.hessian(Y)
        phi_xi = gradient(phi, XI, (x, lam * psi.gradient(Y)))
        omega1 = omega1 + wq * np.einsum("...ij,...j,...i->...", H, phi_xi, delta)
        omega2 = omega2 - wq * tq * np.einsum("...ij,...j,...i->...", H, delta, delta)
    scale = lam ** (2.0 - 2.0 * r)
    omega1 = scale * omega1
    omega2 = scale * omega2
    omega = omega1 + omega2

    reconstructed = leading + lam ** (-1.0 + 2.0 * r) * omega
    magnitude = np.maximum(1.0, np.maximum(np.abs(G), np.abs(leading)))
    gap = float(np.max(np.abs(G - reconstructed) / magnitude))
    if gap > IDENTITY_TOLERANCE:
        raise PreconditionError(f"Ω quadrature does not reproduce G: relative gap {gap:.3e}")
    b = None if base is None else base(x, lam * grad_x)
    return ExponentPhaseReport(G, omega, omega1, omega2, leading, y, eta, b, gap)


def omega_closed_form(phi: PhaseFunction, psi: PhaseProfile, x, lam: float) -> np.ndarray:
    """½ λ^{2−2r} ⟨ψ″(x)Φ_ξ, Φ_ξ⟩ with Φ_ξ at (x, λψ′(x)); the leading term of Ω."""
    x = np.asarray(x, dtype=float)
    phi_xi = gradient(phi, XI, (x, lam * psi.gradient(x)))
    H = psi.hessian(x)
    return 0.5 * lam ** (2.0 - 2.0 * phi.order_r) * np.einsum("...ij,...j,...i->...", H, phi_xi, phi_xi)


# ── Weyl-type functions and the exponent action ──


def weyl_function(spec: GridSpec, psi: PhaseProfile, x0, lam: float, eps: float, bump: Callable) -> GridFunction:
    """u_{λ,ε}(x) = e^{iλψ(x)} ε^{−d/2} f((x−x₀)/ε), normalized on the grid."""
    x = spec.coordinates()
    x0 = np.asarray(x0, dtype=float)
    f = bump((x - x0) / eps)
    values = np.where(f != 0.0, np.exp(1j * lam * psi.value(x)), 0.0) * f * eps ** (-spec.dimension / 2)
    u = GridFunction(spec, values)
    norm = u.norm()
    if norm == 0.0:
        raise PreconditionError("the bump does not meet any grid point")
    return u * (1.0 / norm)


def standard_bump(w: np.ndarray) -> np.ndarray:
    """exp(1 − 1/(1−|w|²)) on |w| < 1."""
    q = np.sum(np.asarray(w) ** 2, axis=-1)
    inside = q < 1.0
    out = np.zeros(q.shape)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
    return out


def check_aliasing(spec: GridSpec, psi: PhaseProfile, points: np.ndarray, lam: float) -> float:
    """Largest |λψ′| over ``points`` relative to the grid Nyquist frequency.

    Raises:
        AliasingError: above 0.8·Nyquist on any axis.
    """
    if len(points) == 0:
        return 0.0
    freq = np.max(np.abs(lam * psi.gradient(points)), axis=0)
    ratio = float(np.max(freq / spec.nyquist))
    if ratio > BAND_LIMIT_FRACTION:
        raise AliasingError(f"λψ′ reaches {ratio:.2f}·Nyquist (limit {BAND_LIMIT_FRACTION})")
    return ratio


@dataclass
class ExponentAction:
    approx: GridFunction
    exact: GridFunction
    residual_l2: float
    outside_mass: float


def act_on_exponent(
    symbol,
    psi: PhaseProfile,
    x0,
    lam: float,
    eps: float,
    spec: GridSpec,
    bump: Callable = standard_bump,
    outer_radius: float = 2.0,
    threshold: float = EPS_LAMBDA_THRESHOLD,
    **solver,
) -> ExponentAction:
    """Compare A u_{λ,ε} with e^{iG(x,λ)} b(x, λψ′(x)) u_{λ,ε} on the grid.

    ``outside_mass`` is ‖A u‖ restricted to |x−x₀| > outer_radius·ε.

    Raises:
        PreconditionError: ε·λ^{1−r} below ``threshold``.
        AliasingError: λψ′ beyond 0.8·Nyquist on the bump support.
    """
    r = symbol.phase.order_r
    if eps * lam ** (1.0 - r) < threshold:
        raise PreconditionError(f"ελ^(1−r) = {eps * lam ** (1.0 - r):.3g} is below {threshold}")
    x0 = np.asarray(x0, dtype=float)
    u = weyl_function(spec, psi, x0, lam, eps, bump)
    x = spec.coordinates()
    active = np.flatnonzero(u.values != 0.0)
    check_aliasing(spec, psi, x[active], lam)

    exact = apply_symbol_pdo(symbol, u)
    approx_values = np.zeros(spec.size, dtype=complex)
    if len(active):
        report = exponent_phase(symbol.phase, psi, x[active], lam, base=symbol.base, **solver)
        approx_values[active] = np.exp(1j * report.G) * report.b_leading * u.values[active]
    approx = GridFunction(spec, approx_values)
    residual = (exact - approx).norm()
    outside = np.linalg.norm(x - x0, axis=-1) > outer_radius * eps
    outside_mass = exact.restrict(outside).norm()
    logger.debug(f"exponent action λ={lam}, ε={eps:.3g}: residual {residual:.3e}, outside {outside_mass:.3e}")
    return ExponentAction(approx, exact, residual, outside_mass)


# ── Stability in ψ ──


@dataclass(frozen=True)
class OmegaDeviation:
    sigma: float
    lam: float
    deviation: float


def omega_stability(
    phi: PhaseFunction,
    psi: PhaseProfile,
    perturbation: SmoothField,
    sigmas: Sequence[float],
    lambdas: Sequence[float],
    points: Optional[np.ndarray] = None,
    **solver,
) -> list[OmegaDeviation]:
    """max_x |Ω − Ω̆| for ψ̆ = ψ + σ·perturbation over a (σ, λ) ladder."""
    if points is None:
        d = psi.dimension
        offsets = np.linspace(-0.5, 0.5, 5) * psi.radius
        points = psi.center + np.stack([offsets] * d, axis=-1)
    rows = []
    for lam in lambdas:
        base = exponent_phase(phi, psi, points, lam, **solver).omega
        for sigma in sigmas:
            perturbed = exponent_phase(phi, psi.perturbed(sigma, perturbation), points, lam, **solver).omega
            rows.append(OmegaDeviation(float(sigma), float(lam), float(np.max(np.abs(base - perturbed)))))
    return rows
