"""compose: decay of the product expansions and their remainders.

Three experiments, each isolated from the others:

  terms      sup_x |t_α(x, ξ)| along a |ξ| ladder for g_α, h_α and the
             amplitude terms a_α of a₁(x,ξ)·conj(a₂(x′,ξ))
  remainder  ‖(G − G_N) u_Λ‖ for band-pass u_Λ, both product orders
  singular   band responses and singular values of A₁A₂* − B, A₂*A₁ − B
"""

from typing import Optional

import numpy as np

from config import (
    B_RESPONSE_FLOOR,
    EXPANSION_ORDER,
    NOISE_FLOOR,
    REMAINDER_ORDER,
    SINGULAR_TAIL_INDEX,
    X_PROBES,
)
from logger_setup import get_logger
from operators.calculus import (
    ExpansionResult,
    expand_amplitude_to_symbol,
    expand_left_product,
    expand_right_product,
    product_remainder_ladder,
    split_singular_part,
)
from operators.pdo_numerics import BAND_LIMIT_FRACTION, GridSpec, norm_and_spectrum_probe
from operators.symbols import OscillatingAmplitude
from processors.archetypes import grid_1d, phase_from, symbol_from
from processors.slope_regression import check_slope, fit_loglog, ladder_table
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()


def alpha_label(prefix: str, alpha) -> str:
    return prefix + "".join(str(a) for a in alpha)


def x_probes(cfg: ExperimentConfig, d: int, count: int = X_PROBES) -> np.ndarray:
    """Points across the bump support along x₁, other coordinates at the center."""
    center = np.zeros(d)
    given = np.asarray(cfg.phase.center[:d], dtype=float)
    center[: len(given)] = given
    offsets = np.linspace(-1.0, 1.0, count + 2)[1:-1] * cfg.phase.width
    x = np.repeat(center[None, :], count, axis=0)
    x[:, 0] += offsets
    return x


def frequency_ladder(cfg: ExperimentConfig, d: int) -> tuple[np.ndarray, np.ndarray]:
    """|ξ| ladder and the points |ξ|·ξ₀/|ξ₀|."""
    radii = np.asarray(cfg.ladder.xi_values())
    direction = np.zeros(d)
    given = np.asarray(cfg.point.xi0[:d], dtype=float)
    direction[: len(given)] = given
    if not np.any(direction):
        direction[0] = 1.0
    direction /= np.linalg.norm(direction)
    return radii, radii[:, None] * direction[None, :]


def term_sup(expansion: ExpansionResult, x: np.ndarray, xi: np.ndarray) -> dict[tuple, np.ndarray]:
    """sup over x probes of |t_α(x, ξ_k)| for every term."""
    out = {}
    for term in expansion.terms:
        values = np.abs(np.asarray(term.evaluate(x[:, None, :], xi[None, :, :])))
        values = np.broadcast_to(values, (len(x), len(xi)))
        out[term.alpha] = values.max(axis=0)
    return out


def band_ladder(cfg: ExperimentConfig, spec: GridSpec) -> list[float]:
    """|ξ| ladder points whose band [Λ, 2Λ] stays below 0.8·Nyquist."""
    limit = BAND_LIMIT_FRACTION * float(np.min(spec.nyquist))
    lambdas = [lam for lam in cfg.ladder.xi_values() if 2.0 * lam <= limit]
    if len(lambdas) < 2:
        lambdas = list(np.geomspace(limit / 16.0, limit / 2.0, 4))
        logger.warning(f"|ξ| ladder exceeds the grid band; using Λ in [{lambdas[0]:.4g}, {lambdas[-1]:.4g}]")
    return [float(lam) for lam in lambdas]


class ComposeProcessor:
    """Slope reports for the asymptotic product and amplitude expansions."""

    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("compose")

    def run(self) -> ExperimentOutcome:
        cfg = self.cfg
        logger.info(f"Compose run '{cfg.name}': r = {cfg.phase.r}, m = {cfg.phase.m}, d = {cfg.dimension}")
        for side in ("right", "left"):
            guarded(self.outcome, f"{side} product terms", lambda side=side: self.expansion_terms(side))
        guarded(self.outcome, "amplitude terms", self.amplitude_terms)
        for side in ("right", "left"):
            guarded(self.outcome, f"{side} product remainder", lambda side=side: self.remainder(side))
        guarded(self.outcome, "singular part", self.singular_part)
        return self.outcome

    # ── Term decay ──

    def _symbols(self, d: int, m: Optional[float] = None):
        phase = phase_from(self.cfg, d)
        a1 = symbol_from(self.cfg, phase, m=m)
        a2 = symbol_from(self.cfg, phase, m=m, shift=0.1 * self.cfg.phase.width, width_scale=0.9)
        return a1, a2

    def _term_report(self, name: str, prefix: str, expansion: ExpansionResult, identity: str) -> None:
        d = expansion.dimension
        radii, xi = frequency_ladder(self.cfg, d)
        sups = term_sup(expansion, x_probes(self.cfg, d), xi)
        series = {alpha_label(prefix, alpha): values for alpha, values in sups.items()}
        fits = {key: fit_loglog(radii, values) for key, values in series.items()}
        self.outcome.tables.append(
            ladder_table(name, "xi", radii, series, identity, "|ξ| dimensionless; sup_x |t_α| absolute", fits)
        )
        for term in expansion.terms:
            key = alpha_label(prefix, term.alpha)
            if float(np.max(sups[term.alpha])) <= NOISE_FLOOR * 1e-6:
                self.outcome.verification.add(f"{name} {key}", True, "term vanishes on the probes")
                continue
            check_slope(self.outcome.verification, f"{name} {key}", fits[key], term.declared_order)

    def expansion_terms(self, side: str) -> None:
        a1, a2 = self._symbols(self.cfg.dimension)
        if side == "right":
            expansion = expand_right_product(a1, a2, EXPANSION_ORDER)
            identity = "g_α = ∂^α_ξ(a₁ D^α_{x′} conj a₂) ∈ S^{m−|α|(1−r)}"
        else:
            expansion = expand_left_product(a1, a2, EXPANSION_ORDER)
            identity = "h_α = D^α_x(a₁ conj ∂^α_ξ a₂) ∈ S^{m−|α|(1−r)}"
        self._term_report(f"compose_{side}_terms", "g" if side == "right" else "h", expansion, identity)

    def amplitude_terms(self) -> None:
        a1, a2 = self._symbols(self.cfg.dimension)
        amp = OscillatingAmplitude.from_product(a1, a2)
        expansion = expand_amplitude_to_symbol(amp, EXPANSION_ORDER)
        self._term_report(
            "compose_amplitude_terms", "a", expansion, "a_α = ∂^α_ξ D^α_{x′} 𝐚|_{x′=x} ∈ S^{m−|α|(1−r)}"
        )

    # ── Matrix remainders ──

    def remainder(self, side: str) -> None:
        spec = grid_1d(self.cfg)
        a1, a2 = self._symbols(1)
        lambdas = band_ladder(self.cfg, spec)
        logger.info(f"{side} product remainder on {spec.points[0]} points, Λ = {[round(v, 2) for v in lambdas]}")
        rows = product_remainder_ladder(a1, a2, REMAINDER_ORDER, spec, lambdas, side=side)
        errors = [row.error for row in rows]
        fit = fit_loglog(lambdas, errors)
        bound = a1.order_m + a2.order_m - REMAINDER_ORDER * (1.0 - a1.phase.order_r)
        product = "A₁A₂*" if side == "right" else "A₂*A₁"
        self.outcome.tables.append(
            ladder_table(
                f"compose_{side}_remainder",
                "lam",
                lambdas,
                {"error": errors},
                f"‖({product} − Op(Σ_{{|α|<{REMAINDER_ORDER}}} t_α/α!))u_Λ‖ = O(Λ^{{{bound:.4g}}})",
                "Λ dimensionless; error in L² grid norm",
                {"error": fit},
            )
        )
        check_slope(self.outcome.verification, f"{side} product remainder slope", fit, bound)

    def singular_part(self) -> None:
        spec = grid_1d(self.cfg)
        a1, a2 = self._symbols(1, m=0.0)
        split = split_singular_part(a1, a2)
        lambdas = band_ladder(self.cfg, spec)
        responses = split.band_responses(spec, lambdas)

        table = ReportTable(
            "compose_singular_responses",
            ["lam", "right", "left", "B"],
            identity="A₁A₂* − B and A₂*A₁ − B compact: ‖R u_Λ‖ → 0, ‖B u_Λ‖ does not",
            units="Λ dimensionless; responses in L² grid norm",
            x="lam",
        )
        for row in responses:
            table.add(row["lam"], row["right"], row["left"], row["B"])
        self.outcome.tables.append(table)

        first, last = responses[0], responses[-1]
        for key in ("right", "left"):
            self.outcome.verification.add(
                f"{key} residual band response decays",
                last[key] < first[key],
                f"{first[key]:.3e} → {last[key]:.3e}",
            )
        self.outcome.verification.add(
            "B band response persists",
            last["B"] >= B_RESPONSE_FLOOR * first["B"],
            f"{first['B']:.3e} → {last['B']:.3e}",
        )

        matrices = split.residual_matrices(spec)
        probes = {key: norm_and_spectrum_probe(matrices[key]) for key in ("right", "left", "product")}
        sigma = ReportTable(
            "compose_singular_values",
            ["k", "right", "left", "product"],
            identity="singular values of A₁A₂* − B, A₂*A₁ − B and A₁A₂*",
            units="σ_k in L² operator norm",
            x="k",
        )
        for k in range(min(4 * SINGULAR_TAIL_INDEX, spec.size)):
            sigma.add(k + 1, *[float(probes[key].singular_values[k]) for key in ("right", "left", "product")])
        sigma.notes["tail ratio"] = " ".join(
            f"{key}={probes[key].tail_ratio(SINGULAR_TAIL_INDEX - 1):.6e}" for key in ("right", "left", "product")
        )
        self.outcome.tables.append(sigma)
        logger.info(
            f"σ_{SINGULAR_TAIL_INDEX}/σ_1: residual {probes['right'].tail_ratio(SINGULAR_TAIL_INDEX - 1):.3e}, "
            f"product {probes['product'].tail_ratio(SINGULAR_TAIL_INDEX - 1):.3e}"
        )


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return ComposeProcessor(cfg, rng).run()
