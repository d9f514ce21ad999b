"""
Truncated asymptotic expansions for oscillating symbols and amplitudes.

    amplitude → symbol   a_α = (∂^α_ξ D^α_{x′} 𝐚)(x, x, ξ)
    A₁A₂*                g_α = ∂^α_ξ (a₁(x, ξ) · D^α_{x′} conj(a₂(x′, ξ)))|_{x′=x}
    A₂*A₁                h_α = D^α_x (a₁ · conj(∂^α_ξ a₂))

with D = −i∂.  Every term is built from reduced derivatives
e^{−iΦ}∂(e^{iΦ}b), so the oscillating factors cancel exactly and the terms
are plain symbols of order m − |α|(1−r).
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from config import GAUSS_POINTS, DIAGONAL_PHASE_TOLERANCE
from logger_setup import get_logger
from operators.errors import PreconditionError, UnsupportedOrderError
from operators.fields import ConjugateField, ProductField, SmoothField
from operators.multiindex import (
    MultiIndex,
    factorial,
    graded_multi_indices,
    multi_indices,
    order,
    sub_indices,
    subtract,
    zero_index,
)
from operators.pdo_numerics import (
    GridFunction,
    GridSpec,
    QuadratureBox,
    SymbolOperator,
    inverse_transform,
    materialize,
    norm_and_spectrum_probe,
    oscillatory_double_integral,
)
from operators.symbols import (
    OscillatingAmplitude,
    PlainSymbol,
    SymbolClass,
    SymbolLike,
)

logger = get_logger()


@dataclass(frozen=True)
class ExpansionTerm:
    alpha: MultiIndex
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    declared_order: float


@dataclass(frozen=True)
class ExpansionResult:
    """Terms t_α for |α| <= N−1 in graded lexicographic order."""

    terms: tuple[ExpansionTerm, ...]
    truncation: int
    order_m: float
    order_r: float
    dimension: int

    def term(self, alpha: Sequence[int]) -> ExpansionTerm:
        alpha = tuple(alpha)
        for t in self.terms:
            if t.alpha == alpha:
                return t
        raise KeyError(alpha)

    def truncated_sum(self, x, xi) -> np.ndarray:
        """Σ_{|α|<=N−1} (α!)^{−1} t_α(x, ξ)."""
        total = np.zeros((), dtype=complex)
        for t in self.terms:
            total = total + t.evaluate(x, xi) / factorial(t.alpha)
        return total

    __call__ = truncated_sum

    def as_symbol(self) -> "ExpansionSymbol":
        return ExpansionSymbol(self)


class ExpansionSymbol:
    """Truncated sum of an expansion, usable wherever a symbol callable is."""

    def __init__(self, expansion: ExpansionResult):
        self.expansion = expansion
        self.dimension = expansion.dimension
        self.order_m = expansion.order_m
        self.symbol_class = SymbolClass(expansion.order_m, 1.0, 0.0)

    def __call__(self, x, xi) -> np.ndarray:
        return self.expansion.truncated_sum(x, xi)


def _check_orders(obj, needed: int, what: str) -> None:
    if needed > obj.max_order:
        raise UnsupportedOrderError(
            f"{what} needs derivatives of order {needed}, the oracle supplies {obj.max_order}"
        )


def _phase_order(a) -> float:
    phase = getattr(a, "phase", None)
    return phase.order_r if phase is not None else 0.0


def _default_diagonal_probes(amp) -> tuple[np.ndarray, np.ndarray]:
    d = amp.dimension
    if amp.support is not None:
        axes = [np.linspace(lo, hi, 5) for lo, hi in zip(amp.support.lower, amp.support.upper)]
    else:
        axes = [np.linspace(-1.0, 1.0, 5)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    x = np.stack([g.reshape(-1) for g in grids], axis=-1)
    radii = np.geomspace(1.0, 1024.0, 11)
    directions = np.concatenate([np.eye(d), -np.eye(d)])
    xi = (radii[:, None, None] * directions[None]).reshape(-1, d)
    return x, xi


def check_diagonal_phase(amp: OscillatingAmplitude, probes=None, tol: float = DIAGONAL_PHASE_TOLERANCE) -> float:
    """Max |Θ(x, x, ξ)| over probes.

    Raises:
        PreconditionError: the diagonal phase exceeds ``tol``; names the worst probe.
    """
    x, xi = probes if probes is not None else _default_diagonal_probes(amp)
    values = np.abs(amp.phase(x[:, None, :], x[:, None, :], xi[None, :, :]))
    worst = float(values.max())
    if worst >= tol:
        i, k = np.unravel_index(np.argmax(values), values.shape)
        raise PreconditionError(
            f"phase does not vanish on the diagonal: |Θ(x, x, ξ)| = {worst:.3e} "
            f"at x = {x[i].tolist()}, ξ = {xi[k].tolist()}"
        )
    return worst


def expand_amplitude_to_symbol(amp: OscillatingAmplitude, N: int, probes=None) -> ExpansionResult:
    """Symbol expansion a = Σ (α!)^{−1} a_α of an amplitude with Θ(x, x, ξ) = 0.

    Args:
        amp: oscillating amplitude
        N: truncation order; terms with |α| <= N−1 are built
        probes: optional (x, ξ) probe arrays for the diagonal check

    Raises:
        PreconditionError: Θ(x, x, ξ) does not vanish on a probe.
        UnsupportedOrderError: the oracle cannot supply order 2(N−1).
    """
    check_diagonal_phase(amp, probes)
    _check_orders(amp, 2 * (N - 1), "amplitude expansion")
    d = amp.dimension
    r = amp.phase.order_r
    zero = zero_index(d)
    terms = []
    for alpha in graded_multi_indices(d, N - 1):
        def evaluate(x, xi, alpha=alpha):
            value = amp.reduced_derivative((zero, alpha, alpha), x, x, xi)
            return (-1j) ** order(alpha) * value

        terms.append(ExpansionTerm(alpha, evaluate, amp.order_m - order(alpha) * (1.0 - r)))
    logger.debug(f"amplitude expansion: {len(terms)} terms, N={N}, r={r}")
    return ExpansionResult(tuple(terms), N, amp.order_m, r, d)


def _check_shared_phase(a1: SymbolLike, a2: SymbolLike) -> None:
    p1 = getattr(a1, "phase", None)
    p2 = getattr(a2, "phase", None)
    if p1 is p2:
        return
    if (p1 is None or p1.is_zero) and (p2 is None or p2.is_zero):
        return
    raise PreconditionError("product expansions require both symbols to share one phase function Φ")


def expand_right_product(a1: SymbolLike, a2: SymbolLike, N: int) -> ExpansionResult:
    """Symbol expansion of G = A₁A₂* with terms g_α.

    g_α is the amplitude term of a₁(x, ξ)·conj(a₂(x′, ξ)), so the x-derivatives
    of a₂ enter as conj((−D)^α a₂) = (−i)^{|α|} conj(∂^α_x a₂).

    Raises:
        PreconditionError: the symbols do not share one phase object.
    """
    _check_shared_phase(a1, a2)
    _check_orders(a1, N - 1, "right product")
    _check_orders(a2, 2 * (N - 1), "right product")
    d = a1.dimension
    r = max(_phase_order(a1), _phase_order(a2))
    m = a1.order_m + a2.order_m
    zero = zero_index(d)
    terms = []
    for alpha in graded_multi_indices(d, N - 1):
        def evaluate(x, xi, alpha=alpha):
            total = np.zeros((), dtype=complex)
            for gamma, coeff in sub_indices(alpha):
                left = a1.reduced_derivative((zero, gamma), x, xi)
                right = a2.reduced_derivative((alpha, subtract(alpha, gamma)), x, xi)
                total = total + coeff * left * np.conj(right)
            return (-1j) ** order(alpha) * total

        terms.append(ExpansionTerm(alpha, evaluate, m - order(alpha) * (1.0 - r)))
    return ExpansionResult(tuple(terms), N, m, r, d)


def expand_left_product(a1: SymbolLike, a2: SymbolLike, N: int) -> ExpansionResult:
    """Symbol expansion of H = A₂*A₁ with terms h_α.

    Raises:
        PreconditionError: the symbols do not share one phase object.
    """
    _check_shared_phase(a1, a2)
    _check_orders(a1, N - 1, "left product")
    _check_orders(a2, 2 * (N - 1), "left product")
    d = a1.dimension
    r = max(_phase_order(a1), _phase_order(a2))
    m = a1.order_m + a2.order_m
    zero = zero_index(d)
    terms = []
    for alpha in graded_multi_indices(d, N - 1):
        def evaluate(x, xi, alpha=alpha):
            total = np.zeros((), dtype=complex)
            for gamma, coeff in sub_indices(alpha):
                left = a1.reduced_derivative((gamma, zero), x, xi)
                right = a2.reduced_derivative((subtract(alpha, gamma), alpha), x, xi)
                total = total + coeff * left * np.conj(right)
            return (-1j) ** order(alpha) * total

        terms.append(ExpansionTerm(alpha, evaluate, m - order(alpha) * (1.0 - r)))
    return ExpansionResult(tuple(terms), N, m, r, d)


# ── Band-pass probes ──


def band_pass(spec: GridSpec, lam: float) -> GridFunction:
    """Unit-norm function whose spectrum is a smooth bump on |ξ| ∈ [Λ, 2Λ]."""
    radius = np.linalg.norm(spec.frequencies(), axis=-1)
    t = (radius - 1.5 * lam) / (0.5 * lam)
    inside = np.abs(t) < 1.0
    bump = np.zeros_like(t)
    bump[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    u = inverse_transform(bump.astype(complex), spec)
    norm = u.norm()
    if norm == 0.0:
        raise PreconditionError(f"band [{lam}, {2 * lam}] holds no grid frequency")
    return u * (1.0 / norm)


@dataclass(frozen=True)
class LadderRow:
    lam: float
    error: float


def product_remainder_ladder(
    a1: SymbolLike,
    a2: SymbolLike,
    N: int,
    spec: GridSpec,
    lambdas: Sequence[float],
    side: str = "right",
) -> list[LadderRow]:
    """‖(Ĝ − Ĝ_N) u_Λ‖ on band-pass inputs for the matrix product and its expansion.

    ``side`` selects A₁A₂* (right) or A₂*A₁ (left).
    """
    M1 = materialize(SymbolOperator(a1, spec), spec)
    M2 = materialize(SymbolOperator(a2, spec), spec)
    if side == "right":
        product = M1 @ M2.adjoint()
        expansion = expand_right_product(a1, a2, N)
    elif side == "left":
        product = M2.adjoint() @ M1
        expansion = expand_left_product(a1, a2, N)
    else:
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    truncated = materialize(SymbolOperator(expansion.as_symbol(), spec), spec)
    difference = product - truncated
    rows = []
    for lam in lambdas:
        u = band_pass(spec, lam)
        rows.append(LadderRow(float(lam), difference.apply(u).norm()))
        logger.debug(f"{side} product remainder at Λ={lam}: {rows[-1].error:.3e}")
    return rows


# ── Singular part ──


@dataclass
class SingularSplit:
    """B = b₁·conj(b₂) and probes of the residual operators A₁A₂* − B, A₂*A₁ − B."""

    symbol: PlainSymbol
    a1: SymbolLike
    a2: SymbolLike

    def residual_matrices(self, spec: GridSpec) -> dict:
        M1 = materialize(SymbolOperator(self.a1, spec), spec)
        M2 = materialize(SymbolOperator(self.a2, spec), spec)
        B = materialize(SymbolOperator(self.symbol, spec), spec)
        return {
            "right": M1 @ M2.adjoint() - B,
            "left": M2.adjoint() @ M1 - B,
            "product": M1 @ M2.adjoint(),
            "B": B,
        }

    def residual_norm_probe(self, spec: GridSpec) -> dict:
        """Singular values of A₁A₂* − B and A₂*A₁ − B on ``spec``."""
        matrices = self.residual_matrices(spec)
        return {key: norm_and_spectrum_probe(matrices[key]) for key in ("right", "left")}

    def band_responses(self, spec: GridSpec, lambdas: Sequence[float]) -> list[dict]:
        """‖R u_Λ‖ for each residual and for B; the residuals decay in Λ, B does not."""
        matrices = self.residual_matrices(spec)
        rows = []
        for lam in lambdas:
            u = band_pass(spec, lam)
            rows.append({key: matrices[key].apply(u).norm() for key in ("right", "left", "B")} | {"lam": float(lam)})
        return rows


def _base_field(a: SymbolLike) -> SmoothField:
    return a.field if isinstance(a, PlainSymbol) else a.base


def split_singular_part(a1: SymbolLike, a2: SymbolLike) -> SingularSplit:
    """Extract the non-compact part B with symbol b₁·conj(b₂).

    Raises:
        PreconditionError: nonzero orders or different phases.
    """
    if a1.order_m != 0 or a2.order_m != 0:
        raise PreconditionError(f"singular split needs m₁ = m₂ = 0, got {a1.order_m}, {a2.order_m}")
    _check_shared_phase(a1, a2)
    b1 = _base_field(a1)
    b2 = _base_field(a2)
    symbol = PlainSymbol(ProductField(b1, ConjugateField(b2)), SymbolClass(0.0), support=a1.support)
    return SingularSplit(symbol, a1, a2)


# ── Taylor formula with remainder ──


@dataclass
class TaylorRest:
    """Head Σ_{|α|<=N−1} (α!)^{−1}(∂^α_ζ D^α_z p)(0,0) and the remainder quadrature."""

    head: complex
    field: SmoothField
    N: int
    box: QuadratureBox
    gauss_points: int

    def rest_quadrature(self) -> complex:
        """p^{(N)} after integrating ζ^α e^{−i⟨z,ζ⟩} by parts in z."""
        d = self.field.dimension
        nodes, weights = roots_legendre(self.gauss_points)
        t_nodes = 0.5 * (nodes + 1.0)
        t_weights = 0.5 * weights
        total = 0.0 + 0.0j
        for alpha in multi_indices(d, self.N):
            orders = (alpha, alpha)
            inner = 0.0 + 0.0j
            for t, w in zip(t_nodes, t_weights):
                value = oscillatory_double_integral(
                    lambda z, zeta, t=t: self.field.derivative(orders, z, t * zeta), self.box
                )
                inner += w * (1.0 - t) ** (self.N - 1) * value
            total += (-1j) ** self.N * inner / factorial(alpha)
        return complex(self.N * total)


def taylor_rest(p: SmoothField, N: int, box: QuadratureBox, gauss_points: int = GAUSS_POINTS, leak_tol: float = 1e-12) -> TaylorRest:
    """Split (2π)^{−d}∫∫ p(z, ζ) e^{−i⟨z,ζ⟩} dz dζ into a Taylor head and a remainder.

    Raises:
        PreconditionError: p does not vanish on the boundary of the z-box.
        UnsupportedOrderError: p cannot supply order 2N.
    """
    _check_orders(p, 2 * N, "Taylor remainder")
    _check_support_inside(p, box, leak_tol)
    d = p.dimension
    origin = np.zeros(d)
    head = 0.0 + 0.0j
    for alpha in graded_multi_indices(d, N - 1):
        value = complex(p.derivative((alpha, alpha), origin, origin))
        head += (-1j) ** order(alpha) * value / factorial(alpha)
    return TaylorRest(head, p, N, box, gauss_points)


def direct_quadrature(p: SmoothField, box: QuadratureBox) -> complex:
    """(2π)^{−d}∫∫ p(z, ζ) e^{−i⟨z,ζ⟩} dz dζ by nested sums, z first."""
    return oscillatory_double_integral(lambda z, zeta: p(z, zeta), box)


def _check_support_inside(p: SmoothField, box: QuadratureBox, tol: float) -> None:
    z = box.z_points()
    lower = np.array(box.z_lower)
    upper = np.array(box.z_upper)
    edge = np.any(np.isclose(z, lower) | np.isclose(z, upper), axis=-1)
    zeta = box.zeta_points()[:: max(1, len(box.zeta_points()) // 64)]
    interior = np.abs(p(z[:, None, :], zeta[None, :, :]))
    scale = float(interior.max()) or 1.0
    leak = float(interior[edge].max()) if edge.any() else 0.0
    if leak > tol * scale:
        raise PreconditionError(f"p leaks outside the z-box: boundary value {leak:.3e} vs max {scale:.3e}")
