"""Change of variables, direct-integral kernels and the mollifier sandwich.

A level function P splits x = (x₀, x_d) into chart coordinates y₀ = x₀,
y_d = P(x).  The operator-valued kernel Ã^♮(μ, ν) between the level sets
{P = ν} and {P = μ} is obtained two ways:

  * constructively, integrating the transformed amplitude over η_d
    (``level_kernel``), which needs the conormal mask so the integral runs
    over a finite window;
  * as the limit of ⟨A ψ_{ε,ν}u, ψ_{η,μ}v⟩ for shell mollifiers ψ
    (``sandwich_form`` / ``sandwich_table``).

The spherical case P = |x|² adds the unitary map W and the weights Z(λ).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from config import (
    CHI_WIDTH,
    DEGENERACY_DET,
    ETA_D_POINTS,
    GAUSS_POINTS,
    MIN_MOLLIFIER_CELLS,
    MOLLIFIER_SPREAD,
    MOLLIFIER_WIDTHS,
    NEWTON_STEPS,
    SHELL_CUTOFF,
    SLICE_PROBE_FREQUENCIES,
    SPHERE_CHART_MARGIN,
    SUPPORT_TOLERANCE,
)
from logger_setup import get_logger
from operators.errors import (
    ChartError,
    DomainError,
    PreconditionError,
    ResolutionError,
    SingularityError,
)
from operators.fields import smoothstep_derivatives
from operators.pdo_numerics import GridFunction, GridSpec, apply_amplitude_pdo
from operators.symbols import AMPLITUDE_GROUPS

logger = get_logger()

Application = Callable[[GridFunction, Optional[np.ndarray]], GridFunction]


def _step(t) -> np.ndarray:
    return smoothstep_derivatives(t, 0)[0]


def line_average(func: Callable[[np.ndarray], np.ndarray], x, xp, points: int = GAUSS_POINTS) -> np.ndarray:
    """∫₀¹ func(x + t(x′ − x)) dt by Gauss–Legendre on [0, 1]."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    nodes, weights = roots_legendre(points)
    total = np.zeros(())
    for t, w in zip(0.5 * (nodes + 1.0), 0.5 * weights):
        total = total + w * np.asarray(func(x + t * (xp - x)))
    return total


# ── Diffeomorphisms ──


@dataclass
class DiffeoCheck:
    secant: float
    roundtrip: float
    diagonal: float
    min_det: float

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.secant, self.roundtrip, self.diagonal) <= tol and self.min_det > DEGENERACY_DET


@dataclass
class Diffeo:
    """κ with its inverse, Jacobian rows ∂κ_i/∂x_j and the cutoff χ near the diagonal.

    G(x, x′) is the line average of κ′ along the segment, so that
    κ(x) − κ(x′) = G(x, x′)(x − x′) and G(x, x) = κ′(x).  ``chi_radius=None``
    means χ ≡ 1.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    dimension: int
    name: str = "custom"
    chi_radius: Optional[float] = None
    chi_width: float = CHI_WIDTH
    gauss_points: int = GAUSS_POINTS

    def G(self, x, xp) -> np.ndarray:
        return line_average(self.jacobian, x, xp, self.gauss_points)

    def chi(self, x, xp) -> np.ndarray:
        distance = np.linalg.norm(np.asarray(xp, dtype=float) - np.asarray(x, dtype=float), axis=-1)
        if self.chi_radius is None:
            return np.ones_like(distance)
        return 1.0 - _step((distance - self.chi_radius) / self.chi_width)

    @property
    def chi_support(self) -> float:
        return math.inf if self.chi_radius is None else self.chi_radius + self.chi_width

    def probe(self, rng: np.random.Generator, lower, upper, probes: int = 1000) -> DiffeoCheck:
        """Check the secant identity, the inverse and G(x,x) = κ′(x) on random pairs in the χ-support."""
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (self.dimension,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (self.dimension,))
        x = rng.uniform(lower, upper, size=(probes, self.dimension))
        reach = min(self.chi_support, float(np.min(upper - lower)) / 2)
        direction = rng.normal(size=(probes, self.dimension))
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        xp = x + direction * rng.uniform(0.0, reach, size=(probes, 1))

        G = self.G(x, xp)
        secant = self.forward(x) - self.forward(xp) - np.einsum("...ij,...j->...i", G, x - xp)
        scale = 1.0 + np.abs(self.forward(x))
        y = self.forward(x)
        roundtrip = self.forward(self.inverse(y)) - y
        diagonal = self.G(x, x) - self.jacobian(x)
        check = DiffeoCheck(
            secant=float(np.max(np.abs(secant) / scale)),
            roundtrip=float(np.max(np.abs(roundtrip) / scale)),
            diagonal=float(np.max(np.abs(diagonal))),
            min_det=float(np.min(np.abs(np.linalg.det(G)))),
        )
        logger.debug(f"diffeo {self.name}: {check}")
        return check

    # ── Shipped maps ──

    @classmethod
    def identity(cls, d: int, chi_radius: Optional[float] = None) -> "Diffeo":
        eye = np.eye(d)
        return cls(
            lambda x: np.asarray(x, dtype=float),
            lambda y: np.asarray(y, dtype=float),
            lambda x: np.broadcast_to(eye, np.shape(x) + (d,)),
            d,
            "identity",
            chi_radius,
        )

    @classmethod
    def linear(cls, M, chi_radius: Optional[float] = None) -> "Diffeo":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if abs(np.linalg.det(M)) < DEGENERACY_DET:
            raise SingularityError(f"linear map with det {np.linalg.det(M):.3e} is not invertible")
        M_inv = np.linalg.inv(M)
        d = M.shape[0]
        return cls(
            lambda x: np.asarray(x, dtype=float) @ M.T,
            lambda y: np.asarray(y, dtype=float) @ M_inv.T,
            lambda x: np.broadcast_to(M, np.shape(x) + (d,)),
            d,
            "linear",
            chi_radius,
        )

    @classmethod
    def sine_warp(cls, amplitude: float, d: int = 1, chi_radius: Optional[float] = None) -> "Diffeo":
        """κ_i(x) = x_i + a·sin(x_i) with |a| < 1; the inverse is found by Newton's method."""
        if not abs(amplitude) < 1.0:
            raise DomainError(f"sine warp needs |a| < 1, got {amplitude}")
        a = float(amplitude)

        def forward(x):
            x = np.asarray(x, dtype=float)
            return x + a * np.sin(x)

        def inverse(y):
            y = np.asarray(y, dtype=float)
            x = y.copy()
            for _ in range(NEWTON_STEPS):
                x = x - (x + a * np.sin(x) - y) / (1.0 + a * np.cos(x))
            return x

        def jacobian(x):
            x = np.asarray(x, dtype=float)
            return (1.0 + a * np.cos(x))[..., :, None] * np.eye(d)

        return cls(forward, inverse, jacobian, d, "sine_warp", chi_radius)

    @classmethod
    def bent_shear(cls, amplitude: float, chi_radius: Optional[float] = None) -> "Diffeo":
        """d=2: κ(x) = (x₁, x₂ + a·sin x₁); straightens the curves x₂ = c − a·sin x₁."""
        a = float(amplitude)

        def forward(x):
            x = np.asarray(x, dtype=float)
            return np.stack([x[..., 0], x[..., 1] + a * np.sin(x[..., 0])], axis=-1)

        def inverse(y):
            y = np.asarray(y, dtype=float)
            return np.stack([y[..., 0], y[..., 1] - a * np.sin(y[..., 0])], axis=-1)

        def jacobian(x):
            x = np.asarray(x, dtype=float)
            J = np.zeros(x.shape + (2,))
            J[..., 0, 0] = 1.0
            J[..., 1, 1] = 1.0
            J[..., 1, 0] = a * np.cos(x[..., 0])
            return J

        return cls(forward, inverse, jacobian, 2, "bent_shear", chi_radius)


# ── Level functions ──


@dataclass
class LevelFunction:
    """P with its gradient and the chart lift (y₀, λ) ↦ x with P(x) = λ and x₀ = y₀."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    lift_last: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dimension: int
    name: str = "custom"
    gauss_points: int = GAUSS_POINTS

    def lift(self, y0, lam) -> np.ndarray:
        """x = (y₀, p_λ(y₀)).

        Raises:
            ChartError: no point of the chart lies on {P = λ} over y₀, or P_d vanishes there.
        """
        y0 = np.asarray(y0, dtype=float)
        lam = np.asarray(lam, dtype=float)
        shape = np.broadcast_shapes(y0.shape[:-1], lam.shape)
        y0 = np.broadcast_to(y0, shape + (self.dimension - 1,))
        last = self.lift_last(y0, np.broadcast_to(lam, shape))
        x = np.concatenate([y0, np.asarray(last)[..., None]], axis=-1)
        normal = np.abs(self.gradient(x)[..., -1])
        if np.any(normal < DEGENERACY_DET):
            raise ChartError(f"P_d vanishes on the {self.name} chart (min |P_d| = {normal.min():.3e})")
        return x

    def q_field(self, x, xp) -> np.ndarray:
        """𝐪(x, x′) = ∫₀¹ ∇P(x + t(x′ − x)) dt, so ⟨x − x′, 𝐪⟩ = P(x) − P(x′)."""
        return line_average(self.gradient, x, xp, self.gauss_points)

    def chart(self) -> Diffeo:
        """κ(x) = (x₀, P(x)); its G-field has last row 𝐪 and det G = q_d."""
        d = self.dimension

        def forward(x):
            x = np.asarray(x, dtype=float)
            return np.concatenate([x[..., :-1], np.asarray(self.value(x))[..., None]], axis=-1)

        def inverse(y):
            y = np.asarray(y, dtype=float)
            return self.lift(y[..., :-1], y[..., -1])

        def jacobian(x):
            x = np.asarray(x, dtype=float)
            J = np.zeros(x.shape + (d,))
            J[..., : d - 1, : d - 1] = np.eye(d - 1)
            J[..., d - 1, :] = self.gradient(x)
            return J

        return Diffeo(forward, inverse, jacobian, d, f"{self.name}_chart", None, gauss_points=self.gauss_points)

    @classmethod
    def flat(cls, d: int) -> "LevelFunction":
        """P(x) = x_d."""
        unit = np.zeros(d)
        unit[-1] = 1.0
        return cls(
            lambda x: np.asarray(x, dtype=float)[..., -1],
            lambda x: np.broadcast_to(unit, np.shape(x)),
            lambda y0, lam: lam,
            d,
            "flat",
        )

    @classmethod
    def radial_square(cls, d: int) -> "LevelFunction":
        """P(x) = |x|² on the half space x_d > 0."""

        def lift_last(y0, lam):
            radicand = lam - np.sum(y0 * y0, axis=-1)
            if np.any(radicand <= 0.0):
                raise ChartError(f"level λ = {np.min(lam):.6g} does not reach |y₀| = {np.sqrt(np.max(np.sum(y0 * y0, axis=-1))):.6g}")
            return np.sqrt(radicand)

        return cls(
            lambda x: np.sum(np.asarray(x, dtype=float) ** 2, axis=-1),
            lambda x: 2.0 * np.asarray(x, dtype=float),
            lift_last,
            d,
            "radial_square",
        )

    def transport(self, u: Callable[[np.ndarray], np.ndarray], lam: float) -> Callable[[np.ndarray], np.ndarray]:
        """ũ(y₀, λ) = |P_d(x)|^{−1/2} u(x) at x = (y₀, p_λ(y₀))."""

        def restricted(y0):
            x = self.lift(y0, lam)
            return np.abs(self.gradient(x)[..., -1]) ** -0.5 * u(x)

        return restricted


# ── Change of variables ──


class TransformedAmplitude:
    """𝐚̃(y, y′, η) = α(x, x′)·𝐚(x, x′, ᵗG(x, x′)η) with x = κ^{−1}(y).

    α = |det κ′(x)·det κ′(x′)|^{−1/2}·|det G(x, x′)|·χ(x, x′).
    """

    groups = AMPLITUDE_GROUPS

    def __init__(self, amp, diffeo: Diffeo):
        self.amp = amp
        self.diffeo = diffeo
        self.order_m = float(getattr(amp, "order_m", 0.0))
        self.eps = getattr(amp, "eps", None)

    @property
    def dimension(self) -> int:
        return self.diffeo.dimension

    def weight(self, x, xp) -> np.ndarray:
        G = self.diffeo.G(x, xp)
        chi = self.diffeo.chi(x, xp)
        det_g = np.linalg.det(G)
        degenerate = (chi > 0.0) & (np.abs(det_g) < DEGENERACY_DET)
        if np.any(degenerate):
            raise SingularityError(
                f"det G = {np.min(np.abs(det_g[degenerate])):.3e} inside the χ-support of {self.diffeo.name}"
            )
        jac = np.abs(np.linalg.det(self.diffeo.jacobian(x)) * np.linalg.det(self.diffeo.jacobian(xp))) ** -0.5
        return jac * np.abs(det_g) * chi

    def __call__(self, y, yp, eta) -> np.ndarray:
        x = self.diffeo.inverse(y)
        xp = self.diffeo.inverse(yp)
        G = self.diffeo.G(x, xp)
        xi = np.einsum("...ji,...j->...i", G, np.asarray(eta, dtype=float))
        return self.weight(x, xp) * self.amp(x, xp, xi)


class RemainderKernel:
    """k₀(x, x′) of the part χ₀𝐚 = (1 − χ)𝐚 left in the original coordinates."""

    def __init__(self, amp, diffeo: Diffeo):
        self.amp = amp
        self.diffeo = diffeo

    @property
    def vanishes(self) -> bool:
        return self.diffeo.chi_radius is None

    def __call__(self, x, xp, spec: GridSpec) -> np.ndarray:
        """Kernel values at point pairs (x_i, x′_i) on the frequency grid of ``spec``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        chi0 = 1.0 - self.diffeo.chi(x, xp)
        out = np.zeros(np.broadcast_shapes(chi0.shape), dtype=complex)
        if self.vanishes:
            return out
        xi = spec.frequencies()
        scale = (2.0 * np.pi) ** (-spec.dimension) * spec.frequency_cell
        for i in np.flatnonzero(chi0 > 0.0):
            values = np.asarray(self.amp(x[i][None, :], xp[i][None, :], xi))
            out[i] = scale * chi0[i] * np.sum(np.exp(1j * xi @ (x[i] - xp[i])) * values)
        return out

    def pairing(self, u: GridFunction, v: GridFunction) -> complex:
        """⟨K₀u, v⟩ = Σ_i Σ_j k₀(x_i, x_j) u_j conj(v_i) h^{2d}."""
        if self.vanishes:
            return 0.0j
        spec = u.spec
        x = spec.coordinates()
        xi = spec.frequencies()
        inputs = np.flatnonzero(u.values != 0)
        outputs = np.flatnonzero(v.values != 0)
        scale = (2.0 * np.pi) ** (-spec.dimension) * spec.frequency_cell * spec.cell_volume ** 2
        total = 0.0j
        for i in outputs:
            chi0 = 1.0 - self.diffeo.chi(x[i][None, :], x[inputs])
            near = chi0 > 0.0
            if not near.any():
                continue
            xp = x[inputs][near]
            values = np.asarray(self.amp(x[i][None, None, :], xp[:, None, :], xi[None, :, :]))
            values = np.broadcast_to(values, (len(xp), len(xi)))
            kernel = np.sum(np.exp(1j * (x[i] - xp) @ xi.T) * values, axis=1) * chi0[near]
            total += np.conj(v.values[i]) * np.dot(kernel, u.values[inputs][near])
        return complex(scale * total)


@dataclass
class ChangedVariables:
    amplitude: TransformedAmplitude
    remainder: RemainderKernel


def change_variables(amp, diffeo: Diffeo) -> ChangedVariables:
    """Move the PDO with amplitude 𝐚 through the unitary (Fu)(κ(x)) = |det κ′(x)|^{−1/2}u(x).

    FAF^{−1} = Ã + K₀ with Ã the PDO of ``amplitude`` and K₀ a smoothing remainder.

    Raises:
        PreconditionError: the declared class has ρ + δ < 1.
        DomainError: dimension mismatch.
    """
    d = getattr(amp, "dimension", diffeo.dimension)
    if d != diffeo.dimension:
        raise DomainError(f"amplitude dimension {d} != diffeo dimension {diffeo.dimension}")
    declared = getattr(amp, "symbol_class", None)
    if declared is not None and declared.rho + declared.delta < 1.0 - 1e-12:
        raise PreconditionError(f"change of variables needs ρ + δ ≥ 1, got ρ={declared.rho}, δ={declared.delta}")
    logger.debug(f"change of variables through {diffeo.name}, χ radius {diffeo.chi_radius}")
    return ChangedVariables(TransformedAmplitude(amp, diffeo), RemainderKernel(amp, diffeo))


def transport(diffeo: Diffeo, u: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """(Fu)(y) = |det κ′(x)|^{−1/2} u(x), x = κ^{−1}(y)."""

    def moved(y):
        x = diffeo.inverse(y)
        return np.abs(np.linalg.det(diffeo.jacobian(x))) ** -0.5 * u(x)

    return moved


@dataclass
class BilinearCheck:
    direct: complex
    transformed: complex
    remainder: complex

    @property
    def difference(self) -> float:
        return abs(self.direct - self.transformed - self.remainder)

    @property
    def relative(self) -> float:
        return self.difference / max(abs(self.direct), 1e-300)


def bilinear_invariance(
    amp,
    diffeo: Diffeo,
    u: Callable[[np.ndarray], np.ndarray],
    v: Callable[[np.ndarray], np.ndarray],
    spec_x: GridSpec,
    spec_y: GridSpec,
) -> BilinearCheck:
    """Compare ⟨Au, v⟩ with ⟨Ãũ, ṽ⟩ + ⟨K₀u, v⟩."""
    changed = change_variables(amp, diffeo)
    U = GridFunction.from_callable(spec_x, u)
    V = GridFunction.from_callable(spec_x, v)
    direct = apply_amplitude_pdo(amp, U).inner(V)
    Ut = GridFunction.from_callable(spec_y, transport(diffeo, u))
    Vt = GridFunction.from_callable(spec_y, transport(diffeo, v))
    main = apply_amplitude_pdo(changed.amplitude, Ut).inner(Vt)
    rest = changed.remainder.pairing(U, V)
    check = BilinearCheck(direct, main, rest)
    logger.info(f"bilinear form through {diffeo.name}: direct {direct:.10e}, moved {main + rest:.10e}")
    return check


# ── Conormal mask ──


class MaskedAmplitude:
    """𝐚 times a cutoff vanishing where ξ is within the cone |⟨ξ,∇P(x)⟩| ≥ (1−ε)|ξ||∇P(x)|.

    The angular cutoff is S(((1−ε) − c)/(ε/2)) in c = |⟨ξ,∇P⟩|/(|ξ||∇P|).
    With ``local`` the cone is only removed for |x − x′| ≤ ε, fading out by
    |x − x′| = 3ε/2; otherwise it is removed for every pair, which keeps
    x′-free factors intact.
    """

    groups = AMPLITUDE_GROUPS

    def __init__(self, amp, level: LevelFunction, eps: float, local: bool = False):
        if not 0.0 < eps < 1.0:
            raise DomainError(f"mask width ε must lie in (0, 1), got {eps}")
        self.amp = amp
        self.level = level
        self.eps = float(eps)
        self.local = local
        self.order_m = float(getattr(amp, "order_m", 0.0))
        self.symbol_class = getattr(amp, "symbol_class", None)
        self.factors = None
        factors = getattr(amp, "factors", None)
        if factors is not None and not local:
            left, right = factors

            def masked_left(x, xi):
                return left(x, xi) * self.cone_factor(x, xi)

            self.factors = (masked_left, right)

    @property
    def dimension(self) -> int:
        return self.level.dimension

    def cone_factor(self, x, xi) -> np.ndarray:
        grad = self.level.gradient(np.asarray(x, dtype=float))
        xi = np.asarray(xi, dtype=float)
        dot = np.abs(np.sum(xi * grad, axis=-1))
        norm = np.linalg.norm(xi, axis=-1) * np.linalg.norm(grad, axis=-1)
        c = np.where(norm > 0.0, dot / np.where(norm > 0.0, norm, 1.0), 0.0)
        return _step(((1.0 - self.eps) - c) / (self.eps / 2.0))

    def mask(self, x, xp, xi) -> np.ndarray:
        cone = self.cone_factor(x, xi)
        if not self.local:
            return cone
        distance = np.linalg.norm(np.asarray(xp, dtype=float) - np.asarray(x, dtype=float), axis=-1)
        near = 1.0 - _step((distance - self.eps) / (self.eps / 2.0))
        return 1.0 - near * (1.0 - cone)

    def __call__(self, x, xp, xi) -> np.ndarray:
        return self.amp(x, xp, xi) * self.mask(x, xp, xi)


def conormal_mask(amp, level: LevelFunction, eps: float, local: bool = False) -> MaskedAmplitude:
    return MaskedAmplitude(amp, level, eps, local)


def cone_cotangent(eps: float) -> float:
    """c with |η_d| ≥ c|η₀| ⟺ |η_d| ≥ (1−ε)|η|."""
    cos = 1.0 - eps
    return cos / math.sqrt(1.0 - cos * cos)


# ── Kernel slices ──


def _trapezoid_weights(points: int) -> np.ndarray:
    w = np.full(points, 2.0 / (points - 1))
    w[0] = w[-1] = 1.0 / (points - 1)
    return w


@dataclass
class KernelSlice:
    """Ã^♮(μ, ν) as a PDO in y₀ with amplitude 𝐚̃^♮(y₀, y₀′, η₀; μ, ν) of order m + 1.

    Instances are amplitudes themselves, so the pairing ⟨Ã^♮ũ, ṽ⟩ is an
    ``apply_amplitude_pdo`` on a grid in y₀.
    """

    mu: float
    nu: float
    evaluator: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    order_m: float
    dimension: int

    groups = AMPLITUDE_GROUPS

    def __call__(self, y0, y0p, eta0) -> np.ndarray:
        return self.evaluator(y0, y0p, eta0)

    @property
    def is_diagonal(self) -> bool:
        return self.mu == self.nu

    def diagonal(self, y0, eta0) -> np.ndarray:
        return self.evaluator(y0, y0, eta0)

    def pairing(
        self,
        u_tilde: Callable[[np.ndarray], np.ndarray],
        v_tilde: Callable[[np.ndarray], np.ndarray],
        spec: GridSpec,
        input_threshold: float = SHELL_CUTOFF,
    ) -> complex:
        """⟨Ã^♮(μ,ν)ũ(ν), ṽ(μ)⟩ over a grid in y₀."""
        if spec.dimension != self.dimension:
            raise DomainError(f"slice acts in {self.dimension} variables, grid has {spec.dimension}")
        U = GridFunction.from_callable(spec, u_tilde)
        V = GridFunction.from_callable(spec, v_tilde)
        rows = np.abs(V.values) > input_threshold * np.abs(V.values).max(initial=0.0)
        return apply_amplitude_pdo(self, U, output_mask=rows, input_threshold=input_threshold).inner(V)

    def tabulate(self, y0: Sequence[float], y0p: Sequence[float], eta0: Sequence[float]) -> list[tuple]:
        """Rows (y₀, y₀′, η₀, Re, Im) over a product grid; one-dimensional y₀ only."""
        if self.dimension != 1:
            raise DomainError("tabulation is defined for one transverse variable")
        Y, Yp, E = np.meshgrid(np.asarray(y0, float), np.asarray(y0p, float), np.asarray(eta0, float), indexing="ij")
        values = self.evaluator(Y[..., None], Yp[..., None], E[..., None])
        return [
            (float(a), float(b), float(c), float(np.real(z)), float(np.imag(z)))
            for a, b, c, z in zip(Y.ravel(), Yp.ravel(), E.ravel(), np.asarray(values).ravel())
        ]


Window = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _slice_points(y0, y0p, eta0, mu, nu, eta_d):
    """Assemble y, y′, η with a trailing η_d axis of length K."""
    y0 = np.asarray(y0, dtype=float)
    y0p = np.asarray(y0p, dtype=float)
    eta0 = np.asarray(eta0, dtype=float)
    base = np.broadcast_shapes(y0.shape[:-1], y0p.shape[:-1], eta0.shape[:-1])
    k = eta_d.shape[-1]
    n0 = y0.shape[-1]

    def with_level(v, level):
        v = np.broadcast_to(v, base + (n0,))
        return np.concatenate([v, np.full(base + (1,), level)], axis=-1)[..., None, :]

    eta = np.concatenate(
        [np.broadcast_to(eta0[..., None, :], base + (k, n0)), np.broadcast_to(eta_d, base + (k,))[..., None]],
        axis=-1,
    )
    return with_level(y0, mu), with_level(y0p, nu), eta


def _integrate_eta_d(amp, mu: float, nu: float, window: Window, points: int):
    s = np.linspace(-1.0, 1.0, points)
    weights = _trapezoid_weights(points)

    def evaluate(y0, y0p, eta0):
        W = np.asarray(window(y0, y0p, eta0), dtype=float)
        eta_d = W[..., None] * s
        y, yp, eta = _slice_points(y0, y0p, eta0, mu, nu, eta_d)
        values = np.asarray(amp(y, yp, eta))
        values = np.broadcast_to(values, np.broadcast_shapes(values.shape, y.shape[:-2] + eta_d.shape[-1:]))
        if mu != nu:
            values = values * np.exp(1j * (mu - nu) * eta_d)
        return W * (values @ weights) / (2.0 * np.pi)

    return evaluate


def _default_probes(n0: int, y0_probe) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    center = np.zeros(n0) if y0_probe is None else np.asarray(y0_probe, dtype=float).reshape(n0)
    probes = []
    for magnitude in SLICE_PROBE_FREQUENCIES:
        for sign in (1.0, -1.0):
            eta0 = np.zeros(n0)
            eta0[0] = sign * magnitude
            probes.append((center, center, eta0))
    return probes


def check_masked(amp, mu: float, nu: float, window: Window, probes) -> None:
    """The amplitude must vanish for |η_d| beyond the window.

    Raises:
        PreconditionError: a probe finds non-negligible values outside the window.
    """
    for y0, y0p, eta0 in probes:
        W = float(np.asarray(window(y0[None, :], y0p[None, :], eta0[None, :])).reshape(-1)[0])
        inside = W * np.linspace(-1.0, 1.0, 33)
        outside = W * np.array([1.05, 1.5, 2.5, 5.0]) + 1e-6
        outside = np.concatenate([outside, -outside])
        eta_d = np.concatenate([inside, outside])[None, :]
        y, yp, eta = _slice_points(y0[None, :], y0p[None, :], eta0[None, :], mu, nu, eta_d)
        values = np.abs(np.asarray(amp(y, yp, eta))).reshape(-1)
        values = np.broadcast_to(values, (eta_d.shape[-1],)) if values.size == 1 else values
        scale = max(values[: inside.size].max(initial=0.0), 1e-300)
        leak = values[inside.size :].max(initial=0.0)
        if leak > SUPPORT_TOLERANCE * scale and leak > 0.0:
            raise PreconditionError(
                f"amplitude does not vanish beyond |η_d| = {W:.4g} at y₀={y0.tolist()}, η₀={eta0.tolist()} "
                f"(|𝐚̃| = {leak:.3e}); apply conormal_mask first"
            )


def kernel_slice(
    amp,
    mu: float,
    nu: float,
    eps: Optional[float] = None,
    window: Optional[Window] = None,
    points: int = ETA_D_POINTS,
    probes=None,
    y0_probe=None,
) -> KernelSlice:
    """The kernel slice of an amplitude in flat coordinates (y₀, y_d).

    𝐚̃^♮(y₀, y₀′, η₀; μ, ν) = (2π)^{−1} ∫ 𝐚̃(y₀, μ, y₀′, ν, η₀, η_d) e^{i(μ−ν)η_d} dη_d over
    |η_d| < c|η₀|, by the trapezoid rule.  For μ = ν the exponential drops out.

    Args:
        amp: amplitude in y coordinates vanishing for |η_d| ≥ (1−ε)|η|
        mu, nu: level values
        eps: cone width; defaults to ``amp.eps``
        window: optional override of the η_d half-width as a function of (y₀, y₀′, η₀)
        points: trapezoid nodes across the window
        probes: (y₀, y₀′, η₀) triples for the support check
        y0_probe: centre used by the default probes

    Raises:
        DomainError: d < 2 or no cone width available.
        PreconditionError: the amplitude is not masked.
    """
    d = getattr(amp, "dimension", None)
    if d is None or d < 2:
        raise DomainError(f"kernel slices need d ≥ 2, got {d}")
    if window is None:
        eps = getattr(amp, "eps", None) if eps is None else eps
        if eps is None:
            raise DomainError("kernel_slice needs the cone width ε of the mask")
        c = cone_cotangent(eps)

        def window(y0, y0p, eta0):
            return c * np.linalg.norm(np.asarray(eta0, dtype=float), axis=-1)

    if probes is None:
        probes = _default_probes(d - 1, y0_probe)
    check_masked(amp, mu, nu, window, probes)
    order_m = float(getattr(amp, "order_m", 0.0)) + 1.0
    logger.debug(f"kernel slice at (μ, ν) = ({mu}, {nu}), {points} η_d nodes")
    return KernelSlice(mu, nu, _integrate_eta_d(amp, mu, nu, window, points), order_m, d - 1)


def level_window(level: LevelFunction, mu: float, nu: float, eps: float) -> Window:
    """Half-width in η_d beyond which ξ = (η₀ + 𝐪₀η_d, q_dη_d) lies in the masked cone about ∇P(x)."""
    cone = math.acos(1.0 - eps)

    def window(y0, y0p, eta0):
        x = level.lift(y0, mu)
        xp = level.lift(y0p, nu)
        q = level.q_field(x, xp)
        grad = level.gradient(x)
        q_norm = np.linalg.norm(q, axis=-1)
        cos = np.abs(np.sum(q * grad, axis=-1)) / (q_norm * np.linalg.norm(grad, axis=-1))
        spare = cone - np.arccos(np.clip(cos, -1.0, 1.0))
        if np.any(spare <= 0.0):
            raise PreconditionError(
                f"𝐪(x, x′) leaves the masked cone about ∇P(x) (spare angle {np.min(spare):.3e}) at levels ({mu}, {nu})"
            )
        return np.linalg.norm(np.asarray(eta0, dtype=float), axis=-1) / (q_norm * np.sin(spare))

    return window


def level_kernel(
    amp,
    level: LevelFunction,
    mu: float,
    nu: float,
    eps: Optional[float] = None,
    points: int = ETA_D_POINTS,
    probes=None,
    y0_probe=None,
) -> KernelSlice:
    """Ã^♮(μ, ν) in the coordinates y₀ = x₀, y_d = P(x).

    The amplitude is 𝐚̃^♮ = (2π)^{−1} α ∫ 𝐚(x(μ), x′(ν), (η₀ + 𝐪₀η_d, q_dη_d)) e^{i(μ−ν)η_d} dη_d
    with α = |P_d(x)P_d(x′)|^{−1/2}|q_d|.

    Raises:
        ChartError: P_d vanishes or the level set leaves the chart.
        PreconditionError: the amplitude is not masked about ∇P.
    """
    eps = getattr(amp, "eps", None) if eps is None else eps
    if eps is None:
        raise DomainError("level_kernel needs a conormally masked amplitude")
    changed = change_variables(amp, level.chart())
    window = level_window(level, mu, nu, eps)
    return kernel_slice(changed.amplitude, mu, nu, eps, window, points, probes, y0_probe)


# ── Mollifier sandwich ──


def mollifier(level: LevelFunction, lam: float, width: float) -> Callable[[np.ndarray], np.ndarray]:
    """ψ_{ε,λ}(x) = ε^{−1} g((P(x) − λ)/ε) with g the unit Gaussian density."""

    def psi(x):
        t = (level.value(x) - lam) / width
        return np.exp(-0.5 * t * t) / (math.sqrt(2.0 * math.pi) * width)

    return psi


def _check_resolution(level: LevelFunction, width: float, u: GridFunction) -> None:
    spec = u.spec
    active = np.abs(u.values) > SHELL_CUTOFF * np.abs(u.values).max(initial=0.0)
    if not active.any():
        return
    grad = np.linalg.norm(level.gradient(spec.coordinates()[active]), axis=-1).max()
    extent = 2.0 * MOLLIFIER_SPREAD * width / max(grad, 1e-300)
    cells = extent / float(np.max(spec.steps))
    if cells < MIN_MOLLIFIER_CELLS:
        raise ResolutionError(
            f"mollifier of width {width} spans {cells:.2f} grid cells (< {MIN_MOLLIFIER_CELLS}); refine the grid"
        )


def amplitude_application(amp, input_threshold: float = SHELL_CUTOFF) -> Application:
    def apply(u: GridFunction, output_mask: Optional[np.ndarray] = None) -> GridFunction:
        return apply_amplitude_pdo(amp, u, output_mask=output_mask, input_threshold=input_threshold)

    return apply


def identity_application(u: GridFunction, output_mask: Optional[np.ndarray] = None) -> GridFunction:
    return u


def sandwich_form(
    apply: Application,
    level: LevelFunction,
    mu: float,
    nu: float,
    eps: float,
    eta: float,
    u: GridFunction,
    v: GridFunction,
) -> complex:
    """⟨A(ψ_{ε,ν}u), ψ_{η,μ}v⟩ on the grid of u.

    Raises:
        ResolutionError: a mollifier spans fewer than four grid cells.
    """
    if eps <= 0.0 or eta <= 0.0:
        raise DomainError(f"mollifier widths must be positive, got ({eps}, {eta})")
    spec = u.spec
    _check_resolution(level, eps, u)
    _check_resolution(level, eta, v)
    x = spec.coordinates()
    source = GridFunction(spec, mollifier(level, nu, eps)(x) * u.values)
    target = GridFunction(spec, mollifier(level, mu, eta)(x) * v.values)
    magnitude = np.abs(target.values)
    rows = magnitude > SHELL_CUTOFF * magnitude.max(initial=0.0)
    image = apply(source, rows)
    return image.restrict(rows).inner(target.restrict(rows))


def richardson_limit(widths: Sequence[float], values: Sequence[complex]) -> complex:
    """Value at width 0 of the polynomial in width² through the samples."""
    h2 = np.asarray(widths, dtype=float) ** 2
    V = np.vander(h2, increasing=True)
    coefficients = np.linalg.solve(V, np.asarray(values, dtype=complex))
    return complex(coefficients[0])


@dataclass
class SandwichTable:
    mu: float
    nu: float
    widths: list[float]
    values: list[complex]
    limit: complex

    def rows(self) -> list[tuple]:
        rows = [(w, z.real, z.imag, abs(z)) for w, z in zip(self.widths, self.values)]
        rows.append((0.0, self.limit.real, self.limit.imag, abs(self.limit)))
        return rows


def sandwich_table(
    apply: Application,
    level: LevelFunction,
    mu: float,
    nu: float,
    u: GridFunction,
    v: GridFunction,
    widths: Sequence[float] = MOLLIFIER_WIDTHS,
) -> SandwichTable:
    """Sandwich values with ε = η running through ``widths`` and their extrapolated limit."""
    widths = [float(w) for w in widths]
    logger.info(f"Sandwich at (μ, ν) = ({mu}, {nu}) over widths {widths}")
    values = []
    for w in widths:
        value = sandwich_form(apply, level, mu, nu, w, w, u, v)
        logger.debug(f"  width {w}: {value:.10e}")
        values.append(value)
    limit = richardson_limit(widths, values) if len(widths) > 1 else values[0]
    return SandwichTable(mu, nu, widths, values, limit)


def shell_pairing(
    level: LevelFunction,
    lam: float,
    u: Callable[[np.ndarray], np.ndarray],
    v: Callable[[np.ndarray], np.ndarray],
    spec: GridSpec,
) -> complex:
    """⟨ũ(λ), ṽ(λ)⟩ = ∫ ũ(y₀, λ) conj ṽ(y₀, λ) dy₀ over a grid in y₀."""
    U = GridFunction.from_callable(spec, level.transport(u, lam))
    V = GridFunction.from_callable(spec, level.transport(v, lam))
    return U.inner(V)


# ── Spherical normalization ──


def sphere_point(lam: float, y0) -> np.ndarray:
    """ω(y₀) = (y₀/λ^{1/2}, (1 − |y₀|²/λ)^{1/2}) on the upper hemisphere.

    Raises:
        ChartError: |y₀| is too close to λ^{1/2}.
    """
    y0 = np.asarray(y0, dtype=float)
    if lam <= 0.0:
        raise DomainError(f"spherical levels must be positive, got {lam}")
    ratio = np.sum(y0 * y0, axis=-1) / lam
    if np.any(ratio >= 1.0 - SPHERE_CHART_MARGIN):
        raise ChartError(
            f"|y₀| = {np.sqrt(ratio.max() * lam):.6g} is outside the hemisphere chart of λ = {lam} (λ^1/2 = {math.sqrt(lam):.6g})"
        )
    top = np.sqrt(1.0 - ratio)
    return np.concatenate([y0 / math.sqrt(lam), top[..., None]], axis=-1)


def spherical_transform(u: Callable[[np.ndarray], np.ndarray], lam, omega) -> np.ndarray:
    """(Wu)(λ, ω) = 2^{−1/2} λ^{(d−2)/4} u(λ^{1/2}ω); unitary L²(ℝ^d) → L²(ℝ₊ × S^{d−1})."""
    omega = np.asarray(omega, dtype=float)
    lam = np.asarray(lam, dtype=float)
    d = omega.shape[-1]
    return 2.0 ** -0.5 * lam ** ((d - 2) / 4.0) * u(np.sqrt(lam)[..., None] * omega)


def spherical_weight(lam: float, f: Callable[[np.ndarray], np.ndarray], d: int) -> Callable[[np.ndarray], np.ndarray]:
    """Z(λ)f(y₀) = λ^{−(d−2)/4}(λ − |y₀|²)^{−1/4} f(ω(y₀)).

    With this weight Z(λ)(Wu)(λ, ·) = ũ(·, λ) for the chart of P = |x|², and Z(λ)
    is an isometry from the upper hemisphere onto L²(dy₀).
    """

    def weighted(y0):
        omega = sphere_point(lam, y0)
        radial = lam - np.sum(np.asarray(y0, dtype=float) ** 2, axis=-1)
        return lam ** (-(d - 2) / 4.0) * radial ** -0.25 * f(omega)

    return weighted


def spherical_adjoint(lam: float, g: Callable[[np.ndarray], np.ndarray], d: int) -> Callable[[np.ndarray], np.ndarray]:
    """Z*(λ)g(ω) = λ^{(d−2)/4}(λ − |y₀|²)^{1/4} g(y₀) with y₀ = λ^{1/2}ω₀."""

    def pulled(omega):
        omega = np.asarray(omega, dtype=float)
        y0 = math.sqrt(lam) * omega[..., :-1]
        radial = lam - np.sum(y0 * y0, axis=-1)
        return lam ** ((d - 2) / 4.0) * radial ** 0.25 * g(y0)

    return pulled


@dataclass
class SphericalKernel:
    """Â^♮(μ, ν) = Z*(μ) Ã^♮(μ, ν) Z(ν), acting on functions of ω ∈ S^{d−1}."""

    level_slice: KernelSlice
    dimension: int

    @property
    def mu(self) -> float:
        return self.level_slice.mu

    @property
    def nu(self) -> float:
        return self.level_slice.nu

    def pairing(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        g: Callable[[np.ndarray], np.ndarray],
        spec: GridSpec,
    ) -> complex:
        """⟨Â^♮(μ,ν)f, g⟩_{S^{d−1}} = ⟨Ã^♮(μ,ν)Z(ν)f, Z(μ)g⟩ over a y₀ grid inside the chart."""
        corners = np.array([spec.lower, spec.upper])
        radius = float(np.max(np.linalg.norm(corners, axis=-1)))
        for lam in (self.mu, self.nu):
            if radius ** 2 >= lam * (1.0 - SPHERE_CHART_MARGIN):
                raise ChartError(f"y₀ grid of radius {radius:.4g} leaves the chart of level {lam}")
        d = self.dimension
        return self.level_slice.pairing(spherical_weight(self.nu, f, d), spherical_weight(self.mu, g, d), spec)


def spherical_kernel(
    amp,
    mu: float,
    nu: float,
    eps: Optional[float] = None,
    points: int = ETA_D_POINTS,
    y0_probe=None,
) -> SphericalKernel:
    """Â^♮(μ, ν) for P = |x|², with the diagonal at μ = ν.

    Raises:
        ChartError: the probes leave the hemisphere chart.
    """
    d = getattr(amp, "dimension", None)
    if d is None or d < 2:
        raise DomainError(f"spherical kernels need d ≥ 2, got {d}")
    if d != 2:
        logger.warning(f"spherical kernel in d = {d}: only d = 2 is exercised by the shipped checks")
    level = getattr(amp, "level", None) or LevelFunction.radial_square(d)
    if level.name != "radial_square":
        raise DomainError(f"spherical kernels use P = |x|², the amplitude is masked for {level.name}")
    slice_ = level_kernel(amp, level, mu, nu, eps, points, y0_probe=y0_probe)
    return SphericalKernel(slice_, d)
