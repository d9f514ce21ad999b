"""
Weyl sequences on the circle 𝕋_κ for PDOs with oscillating symbols.

For x₀ and ξ₀ ≠ 0 a λ-dependent polynomial phase

    ψ(x, λ) = Σ_{1≤|α|≤n+1} (α!)^{−1} ψ_α(λ) (x − x₀)^α,   ψ′(x₀) = ξ₀,

is built so that (∂^α G)(x₀, λ) = 0 for 1 ≤ |α| ≤ n.  The equations of order k
read T_{k+1}Ψ_{k+1} + P_k + λ^{−1+r}Ω_k = 0 with t = λ^{1−r}Φ_ξ(x₀, λξ₀), and
are solved for Ψ̃_k = T_{k+1}Ψ_{k+1} by a triangular iteration; Ψ_{k+1} = R_kΨ̃_k.

The functions u_{λ,ε} = e^{iλψ} ε^{−d/2} f((x−x₀)/ε) then satisfy
‖Au − e^{iG(x₀,λ)} b(x₀, λξ₀) u‖ → 0, and matching e^{iG(x₀,λ_p)} to a target
phase gives a Weyl sequence for every point of the circle.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from config import (
    ADMISSIBILITY_C0,
    BISECTION_STEPS,
    BUMP_WIDTH,
    COVERAGE_TARGETS,
    FD_STEP,
    INNER_TOL,
    LAMBDA_MIN,
    MAX_ITER,
    NOISE_FLOOR,
    PHASE_MATCH_TOL,
    TOL,
    U_RADIUS,
)
from logger_setup import get_logger
from operators.errors import (
    AliasingError,
    DivergenceError,
    DomainError,
    PreconditionError,
    RangeError,
)
from operators.fock import SymTensor, solve_R, sorted_indices
from operators.multiindex import MultiIndex, counts_from_axes, factorial, unit_index
from operators.pdo_numerics import GridFunction, GridSpec, apply_amplitude_pdo, apply_symbol_pdo
from operators.stationary_phase import (
    PhaseProfile,
    check_aliasing,
    exponent_phase,
    finite_difference,
    gradient,
    reduced_symbol,
    standard_bump,
    weyl_function,
)
from operators.symbols import AXI, XI, OscillatingAmplitude, OscillatingSymbol, PhaseFunction, zero_phase

logger = get_logger()


# ── Degree and schedule ──


def _exact(r: float) -> Fraction:
    return Fraction(r).limit_denominator(1_000_000)


def pick_degree(r: float) -> int:
    """Smallest n >= 0 with n + 1 > r/(1−r)."""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r}")
    q = _exact(r) / (1 - _exact(r))
    return math.floor(q)


def schedule_interval(r: float, n: int) -> tuple[Fraction, Fraction]:
    """Open interval of exponents s for ε = λ^{−s}: λ^{−1+r}ε^{−1} → 0 and λ^rε^{n+1} → 0."""
    return _exact(r) / (n + 1), 1 - _exact(r)


def schedule_admissible(s: float, r: float, n: int) -> bool:
    lower, upper = schedule_interval(r, n)
    return lower < _exact(s) < upper


# ── Phase conditions ──


@dataclass(frozen=True)
class PhaseConditions:
    """Empirical infima of |Φ_ξ(x₀,λξ₀)|λ^{1−r} and |Φ(x₀,λξ₀)|λ^{−r} over a ladder."""

    c_gradient: float
    c_growth: float

    def admissible(self, c0: float = ADMISSIBILITY_C0, need_gradient: bool = True) -> bool:
        return self.c_growth > c0 and (self.c_gradient > c0 or not need_gradient)

    def describe(self) -> str:
        return f"inf |Φ_ξ|λ^(1−r) = {self.c_gradient:.3e}, inf |Φ|λ^(−r) = {self.c_growth:.3e}"


def check_phase_conditions(phi: PhaseFunction, x0, xi0, lambdas: Sequence[float]) -> PhaseConditions:
    x0, xi0 = _point(x0, xi0)
    r = phi.order_r
    lambdas = np.asarray(lambdas, dtype=float)
    xi = lambdas[:, None] * xi0[None, :]
    x = np.broadcast_to(x0, xi.shape)
    grad = np.linalg.norm(gradient(phi, XI, (x, xi)), axis=-1)
    value = np.abs(phi(x, xi))
    return PhaseConditions(
        float(np.min(grad * lambdas ** (1.0 - r))),
        float(np.min(value * lambdas ** (-r))),
    )


def _point(x0, xi0) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xi0 = np.asarray(xi0, dtype=float).reshape(-1)
    if not np.any(xi0):
        raise DomainError("ξ₀ must be nonzero")
    if x0.shape != xi0.shape:
        raise DomainError(f"x₀ and ξ₀ have different dimensions: {x0.size} vs {xi0.size}")
    return x0, xi0


# ── Phase polynomial ──


@dataclass
class PhasePolynomial:
    """ψ(x) = ⟨ξ₀, x−x₀⟩ + Σ_{k≥2} Σ_{|α|=k} (α!)^{−1} ψ_α (x−x₀)^α with ψ_α read from Ψ_k."""

    center: np.ndarray
    xi0: np.ndarray
    tensors: list[SymTensor] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def degree(self) -> int:
        return 1 + len(self.tensors)

    def coefficients(self) -> dict[MultiIndex, float]:
        d = self.dimension
        coefficients = {unit_index(d, k): float(self.xi0[k]) for k in range(d)}
        for tensor in self.tensors:
            for idx, value in zip(tensor.indices, tensor.values):
                alpha = counts_from_axes(idx, d)
                coefficients[alpha] = float(value) / factorial(alpha)
        return coefficients

    def profile(self, radius: float = U_RADIUS) -> PhaseProfile:
        return PhaseProfile.polynomial(self.coefficients(), self.center, radius)

    def __call__(self, x) -> np.ndarray:
        return self.profile().value(x)


@dataclass
class PhaseBuild:
    polynomial: PhasePolynomial
    lam: float
    gaps: list[float] = field(default_factory=list)
    derivative_check: dict = field(default_factory=dict)
    noise_floor: bool = False

    @property
    def max_derivative(self) -> float:
        """max |∂^αG(x₀, λ)| / λ^r over the checked orders."""
        return max(self.derivative_check.values(), default=0.0)


def _tensor(k: int, d: int, values: dict) -> SymTensor:
    return SymTensor.from_function(k, d, lambda idx: values[counts_from_axes(idx, d)])


def _derivative_tensor(func: Callable, x0: np.ndarray, k: int, step: float) -> SymTensor:
    d = len(x0)
    values = {}
    for idx in sorted_indices(k, d):
        alpha = counts_from_axes(idx, d)
        values[alpha] = finite_difference(func, x0, alpha, step)
    return _tensor(k, d, values)


def build_phase_polynomial(
    phi: PhaseFunction,
    x0,
    xi0,
    n: int,
    lam: float,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    fd_step: float = FD_STEP,
    verify: bool = True,
    radius: float = U_RADIUS,
    c_min: float = ADMISSIBILITY_C0,
    lambda_min: float = LAMBDA_MIN,
) -> PhaseBuild:
    """Solve (∂^αG)(x₀, λ) = 0, 1 ≤ |α| ≤ n, for the coefficients of ψ.

    P_k is read off the composite Φ(x, λψ′(x)) with ψ truncated at degree k,
    where the top coefficient enters only through the T-term. Ω_k are the
    k-th derivatives at x₀ of Ω(·, λ) for the current iterate. Both come from
    central differences with step ``fd_step``.

    Args:
        phi: phase Φ of the symbol
        x0, xi0: base point and ξ₀ = ψ′(x₀)
        n: number of vanishing derivative orders; n = 0 gives the linear phase
        lam: λ
        tol: stop when max_k |Ψ̃_k^(p) − Ψ̃_k^(p−1)| < tol
        verify: evaluate |∂^αG(x₀, λ)|/λ^r for 1 ≤ |α| ≤ n afterwards
        lambda_min: smallest admissible λ, also the floor of the inner stationary solves

    Raises:
        DivergenceError: the iterate gaps stop decreasing above the noise floor.
        ConditioningError: Φ_ξ(x₀, λξ₀) vanishes.
        PreconditionError: ψ′ drops below ``c_min`` on the validity ball.
    """
    x0, xi0 = _point(x0, xi0)
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if lam < lambda_min:
        raise PreconditionError(f"λ = {lam} is below λ_min = {lambda_min}")
    r = phi.order_r
    d = len(x0)
    solver = {"tol": INNER_TOL, "lambda_min": lambda_min}
    if n == 0:
        return PhaseBuild(PhasePolynomial(x0, xi0), lam)

    t = lam ** (1.0 - r) * gradient(phi, XI, (x0, lam * xi0))

    def polynomial(tildes: list[SymTensor]) -> PhasePolynomial:
        return PhasePolynomial(x0, xi0, [solve_R(tilde, t) for tilde in tildes])

    def p_term(k: int, tildes: list[SymTensor]) -> SymTensor:
        profile = polynomial(tildes[: k - 1]).profile(radius)
        composite = _derivative_tensor(lambda y: phi(y, lam * profile.gradient(y)), x0, k, fd_step)
        return composite.scale(lam ** (-r))

    def omega_terms(tildes: list[SymTensor]) -> list[SymTensor]:
        profile = polynomial(tildes).profile(radius)
        omega = lambda y: exponent_phase(phi, profile, y, lam, **solver).omega  # noqa: E731
        return [_derivative_tensor(omega, x0, k, fd_step) for k in range(1, n + 1)]

    p_first = p_term(1, [])
    tildes: list[SymTensor] = [p_first.scale(-1.0)]
    for k in range(2, n + 1):
        tildes.append(p_term(k, tildes).scale(-1.0))

    damping = lam ** (-1.0 + r)
    gaps: list[float] = []
    noise_floor = False
    for iteration in range(1, max_iter + 1):
        omegas = omega_terms(tildes)
        updated: list[SymTensor] = []
        for k in range(1, n + 1):
            head = p_first if k == 1 else p_term(k, updated)
            updated.append(head.scale(-1.0) - omegas[k - 1].scale(damping))
        gap = max((new - old).norm() for new, old in zip(updated, tildes))
        gaps.append(gap)
        tildes = updated
        logger.debug(f"phase polynomial λ={lam:.4g} iteration {iteration}: gap {gap:.3e}")
        if gap < tol:
            break
        if len(gaps) > 1 and gap >= gaps[-2]:
            if gap < NOISE_FLOOR:
                logger.warning(f"phase polynomial at λ={lam:.4g} accepted at noise floor, gap {gap:.3e}")
                noise_floor = True
                break
            raise DivergenceError(f"phase polynomial iteration does not contract at λ={lam:.4g}", gaps)
    else:
        raise DivergenceError(f"phase polynomial iteration did not reach tol {tol:.1e} at λ={lam:.4g}", gaps)

    poly = polynomial(tildes)
    poly.profile(radius).check_assumption(c_min)
    build = PhaseBuild(poly, lam, gaps, noise_floor=noise_floor)
    if verify:
        profile = poly.profile(radius)
        G = lambda y: exponent_phase(phi, profile, y, lam, **solver).G  # noqa: E731
        for k in range(1, n + 1):
            for idx in sorted_indices(k, d):
                alpha = counts_from_axes(idx, d)
                build.derivative_check[alpha] = abs(finite_difference(G, x0, alpha, fd_step)) / lam ** r
    return build


def quadratic_shortcut(phi: PhaseFunction, x0, xi0, lam: float) -> PhasePolynomial:
    """Degree-2 ψ with G₁(λ) = Φ_x(x₀,λξ₀) + λΨ₂Φ_ξ(x₀,λξ₀) = 0.

    In d = 1 this is Ψ₂ = −Φ_x/(λΦ_ξ); in general Ψ₂ = R₁(−λ^{−r}Φ_x).

    Raises:
        PreconditionError: r outside [1/2, 2/3).
        ConditioningError: Φ_ξ(x₀, λξ₀) vanishes.
    """
    x0, xi0 = _point(x0, xi0)
    r = phi.order_r
    if not Fraction(1, 2) <= _exact(r) < Fraction(2, 3):
        raise PreconditionError(f"the quadratic shortcut needs r in [1/2, 2/3), got {r}")
    d = len(x0)
    point = (x0, lam * xi0)
    t = lam ** (1.0 - r) * gradient(phi, XI, point)
    phi_x = gradient(phi, 0, point)
    rhs = SymTensor(1, d, -lam ** (-r) * phi_x)
    return PhasePolynomial(x0, xi0, [solve_R(rhs, t)])


# ── Phase matching ──


def phase_at(phi: PhaseFunction, x0, xi0, n: int, lam: float, **build) -> tuple[float, PhasePolynomial]:
    """G(x₀, λ) with ψ rebuilt at this λ."""
    poly = build_phase_polynomial(phi, x0, xi0, n, lam, verify=False, **build).polynomial
    floor = build.get("lambda_min", LAMBDA_MIN)
    report = exponent_phase(phi, poly.profile(), poly.center, lam, tol=INNER_TOL, lambda_min=floor)
    return float(report.G), poly


@dataclass(frozen=True)
class PhaseMatch:
    p: int
    lam: float
    G: float
    phase_error: float


def spread(values: list[int], count: Optional[int]) -> list[int]:
    """``count`` evenly spaced entries of ``values``, both ends included."""
    if count is None or count >= len(values):
        return values
    if count < 2:
        raise DomainError(f"a spread needs at least two rows, got {count}")
    picks = sorted({round(i * (len(values) - 1) / (count - 1)) for i in range(count)})
    return [values[i] for i in picks]


def find_lambda_for_phase(
    phi: PhaseFunction,
    x0,
    xi0,
    mu1: complex,
    n: int,
    lambda_min: float = LAMBDA_MIN,
    lambda_max: float = 512.0,
    p_values: Optional[Sequence[int]] = None,
    rows: Optional[int] = None,
    **build,
) -> list[PhaseMatch]:
    """λ_p with G(x₀, λ_p) = θ ± 2πp, e^{iθ} = μ₁, inside [lambda_min, lambda_max].

    The ladder is probed by doubling; each crossing is refined by a bracketed
    root search of at most 60 steps.  p counts in the direction of the drift of
    G, so λ_p increases with p.  ``lambda_min`` is also the solver floor.
    With ``rows`` only that many evenly spread p are refined, the first and
    last crossing always among them.

    Raises:
        RangeError: no crossing, or a requested p is not bracketed, or the
            phase error stays above 1e−8.
    """
    if abs(abs(mu1) - 1.0) > 1e-12:
        raise DomainError(f"μ₁ must lie on the unit circle, |μ₁| = {abs(mu1)}")
    probes = [float(lambda_min)]
    while probes[-1] * 2.0 <= lambda_max:
        probes.append(probes[-1] * 2.0)
    if probes[-1] < lambda_max:
        probes.append(float(lambda_max))
    values = [phase_at(phi, x0, xi0, n, lam, lambda_min=lambda_min, **build)[0] for lam in probes]
    drift = 1.0 if values[-1] >= values[0] else -1.0
    theta = float(np.angle(mu1))
    low, high = min(values), max(values)
    p_lo = math.ceil((low - theta) / (2 * math.pi)) if drift > 0 else math.ceil((theta - high) / (2 * math.pi))
    p_hi = math.floor((high - theta) / (2 * math.pi)) if drift > 0 else math.floor((theta - low) / (2 * math.pi))
    wanted = spread(list(range(p_lo, p_hi + 1)), rows) if p_values is None else list(p_values)
    if not wanted:
        raise RangeError(f"G(x₀, λ) never crosses arg μ₁ + 2πp for λ in [{lambda_min}, {lambda_max}]")

    def g(lam: float) -> float:
        return phase_at(phi, x0, xi0, n, lam, lambda_min=lambda_min, **build)[0]

    matches = []
    for p in wanted:
        target = theta + drift * 2.0 * math.pi * p
        bracket = next(
            (
                (probes[i], probes[i + 1])
                for i in range(len(probes) - 1)
                if (values[i] - target) * (values[i + 1] - target) <= 0.0
            ),
            None,
        )
        if bracket is None:
            raise RangeError(f"no bracket for p = {p} (target {target:.6g}) within λ ≤ {lambda_max}")
        lam = brentq(lambda s: g(s) - target, *bracket, xtol=1e-12 * bracket[0], maxiter=BISECTION_STEPS)
        G = g(lam)
        error = abs(np.exp(1j * G) - mu1)
        if error > PHASE_MATCH_TOL:
            raise RangeError(f"phase matching for p = {p} stalled at |e^(iG) − μ₁| = {error:.3e}")
        logger.debug(f"λ_{p} = {lam:.10g}, G = {G:.10g}")
        matches.append(PhaseMatch(p, float(lam), G, float(error)))
    return sorted(matches, key=lambda m: m.lam)


# ── Weyl sequences ──


@dataclass
class CoverageSchedule:
    """ε_p = λ_p^{−s} on [lambda_min, lambda_max]; bump f(w) = exp(1 − 1/(1 − |w/width|²)).

    ``rows`` caps the phase-matched λ_p kept per target; None keeps every crossing.
    """

    s: float
    n: int
    lambda_min: float = LAMBDA_MIN
    lambda_max: float = 512.0
    bump_width: float = BUMP_WIDTH
    rows: Optional[int] = None


@dataclass(frozen=True)
class WeylRow:
    p: int
    lam: float
    eps: float
    G: float
    phase_error: float
    residual: float
    note: str = ""


@dataclass
class WeylReport:
    """Residual rows ‖Au_p − μu_p‖ for one target μ on 𝕋_κ, ordered by p."""

    mu: complex
    mu0: complex
    s: float
    n: int
    rows: list[WeylRow] = field(default_factory=list)

    @property
    def residuals(self) -> list[float]:
        return [row.residual for row in self.rows if not row.note]

    def is_decreasing(self) -> bool:
        res = self.residuals
        return all(b < a for a, b in zip(res, res[1:]))

    def decrease_factor(self) -> float:
        res = self.residuals
        if len(res) < 2 or res[-1] == 0.0:
            return math.inf if res and res[0] > 0.0 else 1.0
        return res[0] / res[-1]


def scaled_bump(width: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda w: standard_bump(np.asarray(w) / width)


def weyl_sequence(
    phi: PhaseFunction,
    x0,
    xi0,
    lambdas: Sequence[float],
    s: float,
    spec: GridSpec,
    n: int,
    bump_width: float = BUMP_WIDTH,
) -> list[GridFunction]:
    """u_{λ,ε} for each λ with ε = λ^{−s}, each of unit grid norm.

    Raises:
        AliasingError: λψ′ on the bump support exceeds 0.8·Nyquist.
    """
    x0, xi0 = _point(x0, xi0)
    functions = []
    for lam in lambdas:
        profile = build_phase_polynomial(phi, x0, xi0, n, lam, verify=False).polynomial.profile()
        eps = lam ** (-s)
        u = weyl_function(spec, profile, x0, lam, eps, scaled_bump(bump_width))
        check_aliasing(spec, profile, spec.coordinates()[u.values != 0.0], lam)
        functions.append(u)
    return functions


def _residual_row(
    apply: Callable[[GridFunction], GridFunction],
    phi: PhaseFunction,
    x0: np.ndarray,
    xi0: np.ndarray,
    mu: complex,
    mu1: complex,
    lam: float,
    p: int,
    s: float,
    n: int,
    spec: GridSpec,
    bump_width: float,
    lambda_min: float = LAMBDA_MIN,
) -> WeylRow:
    build = build_phase_polynomial(phi, x0, xi0, n, lam, verify=False, lambda_min=lambda_min)
    profile = build.polynomial.profile()
    G = float(exponent_phase(phi, profile, x0, lam, tol=INNER_TOL, lambda_min=lambda_min).G)
    eps = lam ** (-s)
    u = weyl_function(spec, profile, x0, lam, eps, scaled_bump(bump_width))
    check_aliasing(spec, profile, spec.coordinates()[u.values != 0.0], lam)
    residual = (apply(u) - u * mu).norm()
    logger.debug(f"Weyl row p={p}, λ={lam:.6g}, ε={eps:.4g}: residual {residual:.4e}")
    return WeylRow(p, float(lam), float(eps), G, float(abs(np.exp(1j * G) - mu1)), float(residual))


def _apply_for(a) -> Callable[[GridFunction], GridFunction]:
    if isinstance(a, OscillatingAmplitude):
        return lambda u: apply_amplitude_pdo(a, u)
    return lambda u: apply_symbol_pdo(a, u)


def _phase_for(a) -> PhaseFunction:
    """Phase driving G: Φ of a symbol, or the pointwise reduced phase of an amplitude."""
    if isinstance(a, OscillatingAmplitude):
        return zero_phase(a.dimension) if a.phase.is_zero else reduced_symbol(a).phase
    if isinstance(a, OscillatingSymbol):
        return a.phase
    return zero_phase(a.dimension)


def _leading_value(a, x0: np.ndarray, xi: np.ndarray) -> complex:
    if isinstance(a, OscillatingAmplitude):
        return complex(a.base(x0, x0, xi))
    if isinstance(a, OscillatingSymbol):
        return complex(a.base(x0, xi))
    return complex(a(x0, xi))


def weyl_residuals(
    a,
    x0,
    xi0,
    mu: complex,
    lambdas: Sequence[float],
    s: float,
    spec: GridSpec,
    n: Optional[int] = None,
    bump_width: float = BUMP_WIDTH,
) -> WeylReport:
    """Residual rows ‖Au_λ − μu_λ‖ for given λ, without phase matching.

    ``a`` is an oscillating symbol or an oscillating amplitude; amplitudes are
    applied as amplitudes and their phase is reduced pointwise.  A zero phase
    uses the linear ψ.
    """
    x0, xi0 = _point(x0, xi0)
    lambdas = sorted(float(lam) for lam in lambdas)
    phi = _phase_for(a)
    if n is None:
        n = 0 if phi.is_zero else pick_degree(phi.order_r)
    mu0 = _leading_value(a, x0, lambdas[-1] * xi0)
    mu1 = mu / mu0 if mu0 != 0 else 0.0
    apply = _apply_for(a)
    report = WeylReport(complex(mu), mu0, s, n)
    for p, lam in enumerate(lambdas):
        report.rows.append(_residual_row(apply, phi, x0, xi0, mu, mu1, lam, p, s, n, spec, bump_width))
    return report


# ── Circle coverage ──


def circle_targets(mu0: complex, count: int = COVERAGE_TARGETS) -> list[complex]:
    """``count`` equispaced points μ = μ₀e^{2πik/count} on 𝕋_κ, κ = |μ₀|."""
    return [complex(mu0 * np.exp(2j * np.pi * k / count)) for k in range(count)]


def _coverage(
    apply: Callable[[GridFunction], GridFunction],
    phi: PhaseFunction,
    x0: np.ndarray,
    xi0: np.ndarray,
    mu0: complex,
    targets: Sequence[complex],
    schedule: CoverageSchedule,
    spec: GridSpec,
) -> list[WeylReport]:
    reports = []
    for mu in targets:
        mu1 = complex(mu / mu0)
        mu1 /= abs(mu1)
        report = WeylReport(complex(mu), mu0, schedule.s, schedule.n)
        matches = find_lambda_for_phase(
            phi, x0, xi0, mu1, schedule.n, schedule.lambda_min, schedule.lambda_max, rows=schedule.rows
        )
        logger.info(f"Target μ = {mu:.4f}: {len(matches)} phase-matched λ_p")
        for match in matches:
            try:
                row = _residual_row(
                    apply,
                    phi,
                    x0,
                    xi0,
                    mu,
                    mu1,
                    match.lam,
                    match.p,
                    schedule.s,
                    schedule.n,
                    spec,
                    schedule.bump_width,
                    schedule.lambda_min,
                )
            except AliasingError as e:
                logger.warning(f"Ladder for μ = {mu:.4f} truncated at λ = {match.lam:.6g}: {e}")
                report.rows.append(WeylRow(match.p, match.lam, match.lam ** (-schedule.s), match.G, match.phase_error, math.nan, "aliasing"))
                break
            report.rows.append(row)
        reports.append(report)
    return reports


def _check_schedule(schedule: CoverageSchedule, r: float) -> None:
    if not schedule_admissible(schedule.s, r, schedule.n):
        lower, upper = schedule_interval(r, schedule.n)
        raise DomainError(f"s = {schedule.s} is outside ({float(lower):.4g}, {float(upper):.4g}) for r = {r}, n = {schedule.n}")


def _ladder(schedule: CoverageSchedule) -> np.ndarray:
    return np.geomspace(schedule.lambda_min, schedule.lambda_max, 8)


def run_coverage_experiment(
    a: OscillatingSymbol,
    x0,
    xi0,
    targets: Optional[Sequence[complex]],
    schedule: CoverageSchedule,
    spec: GridSpec,
    c0: float = ADMISSIBILITY_C0,
) -> list[WeylReport]:
    """Weyl residual rows along phase-matched λ_p for each target μ on 𝕋_κ.

    Args:
        a: symbol of order 0
        targets: points of 𝕋_κ; None uses 8 equispaced points through μ₀
        schedule: s, n and the λ range

    Raises:
        PreconditionError: the growth or gradient condition fails on the ladder,
            or b(x₀, λξ₀) vanishes.
        DomainError: s outside the admissible interval.
    """
    x0, xi0 = _point(x0, xi0)
    phi = a.phase
    conditions = check_phase_conditions(phi, x0, xi0, _ladder(schedule))
    if not conditions.admissible(c0, need_gradient=schedule.n > 0):
        raise PreconditionError(f"phase conditions fail at x₀ = {x0.tolist()}: {conditions.describe()} (c₀ = {c0})")
    _check_schedule(schedule, phi.order_r)
    mu0 = _leading_value(a, x0, schedule.lambda_max * xi0)
    if abs(mu0) < 1e-12:
        raise PreconditionError("b(x₀, λξ₀) vanishes along the ladder")
    targets = circle_targets(mu0) if targets is None else list(targets)
    logger.info(f"Coverage run: κ = {abs(mu0):.6g}, {len(targets)} targets, s = {schedule.s}, n = {schedule.n}")
    return _coverage(_apply_for(a), phi, x0, xi0, mu0, targets, schedule, spec)


def run_coverage_amplitude(
    amp: OscillatingAmplitude,
    x0,
    xi0,
    targets: Optional[Sequence[complex]],
    schedule: CoverageSchedule,
    spec: GridSpec,
    c0: float = ADMISSIBILITY_C0,
) -> list[WeylReport]:
    """Coverage run for an amplitude-defined PDO.

    The hypotheses are read on the diagonal: |Θ(x₀,x₀,λξ₀)| ≥ cλ^r,
    |Θ_ξ(x₀,x₀,λξ₀)| ≥ cλ^{r−1} and 𝐛(x₀,x₀,λξ₀) → μ₀ ≠ 0.  G is built from the
    reduced symbol phase; residuals use the amplitude itself.
    """
    x0, xi0 = _point(x0, xi0)
    theta = amp.phase
    r = theta.order_r
    lambdas = _ladder(schedule)
    xi = lambdas[:, None] * xi0[None, :]
    x = np.broadcast_to(x0, xi.shape)
    growth = float(np.min(np.abs(theta(x, x, xi)) * lambdas ** (-r)))
    slope = float(np.min(np.linalg.norm(gradient(theta, AXI, (x, x, xi)), axis=-1) * lambdas ** (1.0 - r)))
    conditions = PhaseConditions(slope, growth)
    if not conditions.admissible(c0, need_gradient=schedule.n > 0):
        raise PreconditionError(f"diagonal amplitude conditions fail at x₀ = {x0.tolist()}: {conditions.describe()}")
    _check_schedule(schedule, r)
    mu0 = _leading_value(amp, x0, schedule.lambda_max * xi0)
    if abs(mu0) < 1e-12:
        raise PreconditionError("𝐛(x₀, x₀, λξ₀) vanishes along the ladder")
    targets = circle_targets(mu0) if targets is None else list(targets)
    phi = reduced_symbol(amp).phase
    logger.info(f"Amplitude coverage run: κ = {abs(mu0):.6g}, {len(targets)} targets")
    return _coverage(_apply_for(amp), phi, x0, xi0, mu0, targets, schedule, spec)


# ── Diagnostics ──


def _sphere_directions(d: int, count: int = 32) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        angles = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
    return np.vstack([np.eye(d), -np.eye(d), signs / math.sqrt(d)])


def taylor_control(phi: PhaseFunction, poly: PhasePolynomial, lam: float, eps: float, n: int) -> float:
    """max_{|x−x₀|≤ε} |G(x,λ) − G(x₀,λ)| / (λ^r ε^{n+1}), sampled on radii ε/2 and ε."""
    x0 = poly.center
    directions = _sphere_directions(poly.dimension)
    points = np.vstack([x0 + radius * directions for radius in (0.5 * eps, eps)])
    profile = poly.profile()
    G = exponent_phase(phi, profile, np.vstack([x0[None, :], points]), lam, tol=INNER_TOL).G
    return float(np.max(np.abs(G[1:] - G[0]))) / (lam ** phi.order_r * eps ** (n + 1))


def gram_matrix(functions: Sequence[GridFunction]) -> np.ndarray:
    """⟨u_p, u_q⟩ for a Weyl sequence."""
    count = len(functions)
    gram = np.empty((count, count), dtype=complex)
    for i, u in enumerate(functions):
        for j, v in enumerate(functions):
            gram[i, j] = u.inner(v)
    return gram
