"""stationary: fixed points, the phase G(x, λ) and its correction Ω.

  points      y = x + Φ_ξ(x, λψ′(y)) along a λ ladder with ψ quadratic
  polynomial  iterate gaps of the phase-polynomial construction per iteration p
  action      ‖A u_{λ,ε} − e^{iG}b u_{λ,ε}‖ with ε = λ^{−s}
  stability   max_x |Ω − Ω̆| for ψ̆ = ψ + σ·(x₁ − x₀)²
"""

import math

import numpy as np

from config import NOISE_FLOOR
from logger_setup import get_logger
from operators.errors import AliasingError
from operators.fields import PolynomialField
from operators.multiindex import unit_index
from operators.stationary_phase import (
    PhaseProfile,
    act_on_exponent,
    exponent_phase,
    gradient,
    omega_closed_form,
    omega_stability,
    solve_exponent_stationary,
)
from operators.symbols import XI
from operators.weyl_spectrum import build_phase_polynomial
from processors.amp2sym_processor import CONTRACTION_FROM, CONTRACTION_LIMIT, off_center_point
from processors.archetypes import components, grid_1d, phase_from, symbol_from
from processors.slope_regression import check_slope, fit_loglog
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

ACTION_EXPONENT = 0.3
STABILITY_SIGMAS = (1e-3, 1e-2, 1e-1)
STABILITY_LAMBDAS = 4
LIPSCHITZ_SPREAD = 10.0
PROBE_OFFSETS = (-0.1, 0.0, 0.1)


def quadratic_profile(cfg: ExperimentConfig, x0: np.ndarray) -> PhaseProfile:
    """ψ(x) = ⟨ξ₀, x−x₀⟩ + ½|x−x₀|²."""
    d = len(x0)
    return PhaseProfile.quadratic(components(cfg.point.xi0, d), np.eye(d), x0)


def _resolved(values) -> list[float]:
    """Entries under the absolute noise floor become NaN and drop out of fits."""
    return [v if v > NOISE_FLOOR else math.nan for v in values]


class StationaryProcessor:
    """Ladders for the exponent stationary point and the phase polynomial."""

    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("stationary")
        self.solver = {"tol": cfg.tolerances.tol, "max_iter": cfg.tolerances.max_iter}

    def run(self) -> ExperimentOutcome:
        logger.info(f"Stationary run '{self.cfg.name}': r = {self.cfg.phase.r}, d = {self.cfg.dimension}")
        guarded(self.outcome, "exponent stationary points", self.stationary_points)
        guarded(self.outcome, "phase polynomial gaps", self.polynomial_gaps)
        guarded(self.outcome, "exponent action", self.exponent_action)
        guarded(self.outcome, "Ω stability in ψ", self.stability)
        return self.outcome

    # ── Fixed points and Ω ──

    def stationary_points(self) -> None:
        cfg = self.cfg
        d = cfg.dimension
        phi = phase_from(cfg, d)
        r = phi.order_r
        center = off_center_point(cfg, d)
        psi = quadratic_profile(cfg, center)
        x = np.repeat(center[None, :], len(PROBE_OFFSETS), axis=0)
        x[:, 0] += PROBE_OFFSETS
        lambdas = cfg.ladder.lambdas()
        check = self.outcome.verification

        table = ReportTable(
            "stationary_points",
            ["lam", "iterations", "residual", "contraction", "displacement", "first_gap", "omega", "omega_closed", "omega_gap", "identity_gap"],
            identity="y_s = x + Φ_ξ(x, λψ′(y_s)); G = Φ(x, λψ′(x)) + λ^{−1+2r}Ω, Ω = ½λ^{2−2r}⟨ψ″Φ_ξ, Φ_ξ⟩ + O(λ^{−(1−r)})",
            units="λ dimensionless; distances in x units; phases in radians",
            x="lam",
            loglog=True,
        )
        displacement, first_gap, omega, omega_gap = [], [], [], []
        for lam in lambdas:
            report = exponent_phase(phi, psi, x, lam, **self.solver)
            point = solve_exponent_stationary(phi, psi, x, lam, **self.solver)
            first = x + gradient(phi, XI, (x, lam * psi.gradient(x)))
            closed = omega_closed_form(phi, psi, x, lam)
            row = (
                float(np.max(np.abs(point.location - x))),
                float(np.max(np.abs(point.location - first))),
                float(np.max(np.abs(report.omega))),
                float(np.max(np.abs(report.omega - closed))),
            )
            table.add(
                lam, point.iterations, point.residual, point.contraction_ratio(),
                row[0], row[1], row[2], float(np.max(np.abs(closed))), row[3], report.identity_gap,
            )
            for values, value in zip((displacement, first_gap, omega, omega_gap), row):
                values.append(value)
            check.add(
                f"exponent fixed point λ={lam:.4g}",
                point.residual < cfg.tolerances.tol,
                f"residual {point.residual:.2e} in {point.iterations} iterations",
            )
            if lam >= CONTRACTION_FROM:
                check.at_most(f"exponent contraction λ={lam:.4g}", point.contraction_ratio(), CONTRACTION_LIMIT)

        fits = {
            "displacement": fit_loglog(lambdas, displacement),
            "first_gap": fit_loglog(lambdas, _resolved(first_gap)),
            "omega": fit_loglog(lambdas, omega),
            "omega_gap": fit_loglog(lambdas, _resolved(omega_gap)),
        }
        for key, fit in fits.items():
            if fit.resolved:
                table.notes[f"fit {key}"] = fit.note()
        self.outcome.tables.append(table)

        check_slope(check, "|y_s − x| slope", fits["displacement"], -(1.0 - r))
        check_slope(check, "|y_s − first iterate| slope", fits["first_gap"], -2.0 * (1.0 - r))
        check_slope(check, "Ω bounded", fits["omega"], 0.0)
        check_slope(check, "Ω − closed form slope", fits["omega_gap"], -(1.0 - r))

    # ── Phase polynomial ──

    def polynomial_gaps(self) -> None:
        """Iterate gap p decays like λ^{−p(1−r)} until it reaches the noise floor."""
        cfg = self.cfg
        d = cfg.dimension
        phi = phase_from(cfg, d)
        r = phi.order_r
        n = cfg.degree()
        if n == 0:
            self.outcome.verification.add("phase polynomial gaps", True, "n = 0: linear phase, no iteration")
            return
        x0 = components(cfg.point.x0, d)
        xi0 = components(cfg.point.xi0, d)
        lambdas = cfg.ladder.lambdas()
        builds = [
            build_phase_polynomial(
                phi, x0, xi0, n, lam,
                tol=cfg.tolerances.tol, max_iter=cfg.tolerances.max_iter, fd_step=cfg.tolerances.fd_step,
            )
            for lam in lambdas
        ]
        depth = max(len(build.gaps) for build in builds)
        columns = [f"gap_{p}" for p in range(1, depth + 1)]
        table = ReportTable(
            "stationary_polynomial_gaps",
            ["lam"] + columns + ["iterations", "max_derivative", "noise_floor"],
            identity="|Ψ̃^(p) − Ψ̃^(p−1)| = O(λ^{−p(1−r)}); |∂^αG(x₀,λ)|/λ^r for 1 ≤ |α| ≤ n",
            units="λ dimensionless; gaps in tensor max-norm",
            x="lam",
            loglog=True,
        )
        for lam, build in zip(lambdas, builds):
            padded = build.gaps + [math.nan] * (depth - len(build.gaps))
            table.add(lam, *padded, len(build.gaps), build.max_derivative, build.noise_floor)
        for p, key in enumerate(columns, start=1):
            fit = fit_loglog(lambdas, _resolved(table.column(key)))
            if not fit.resolved:
                logger.info(f"{key}: fewer than two entries above the noise floor")
                continue
            table.notes[f"fit {key}"] = fit.note()
            check_slope(self.outcome.verification, f"phase polynomial {key} slope", fit, -p * (1.0 - r))
        self.outcome.tables.append(table)

    # ── Exponent action ──

    def exponent_action(self) -> None:
        cfg = self.cfg
        spec = grid_1d(cfg)
        phi = phase_from(cfg, 1)
        symbol = symbol_from(cfg, phi)
        r = phi.order_r
        x0 = off_center_point(cfg, 1)
        psi = quadratic_profile(cfg, x0)
        lambdas, residual, scaled, outside = [], [], [], []
        for lam in cfg.ladder.lambdas():
            eps = lam ** (-ACTION_EXPONENT)
            try:
                action = act_on_exponent(symbol, psi, x0, lam, eps, spec, **self.solver)
            except AliasingError as e:
                logger.warning(f"Exponent action ladder truncated at λ = {lam:.4g}: {e}")
                break
            lambdas.append(lam)
            residual.append(action.residual_l2)
            scaled.append(action.residual_l2 * eps)
            outside.append(action.outside_mass)

        table = ReportTable(
            "stationary_exponent_action",
            ["lam", "eps", "residual", "residual_eps", "outside_mass"],
            identity=f"‖A u_{{λ,ε}} − e^{{iG}} b(x, λψ′) u_{{λ,ε}}‖, ε = λ^{{−{ACTION_EXPONENT}}}",
            units="λ dimensionless; residuals in L² grid norm",
            x="lam",
            loglog=True,
        )
        for lam, res, sc, out in zip(lambdas, residual, scaled, outside):
            table.add(lam, lam ** (-ACTION_EXPONENT), res, sc, out)
        fit = fit_loglog(lambdas, scaled)
        if fit.resolved:
            table.notes["fit residual_eps"] = fit.note()
        self.outcome.tables.append(table)
        check_slope(self.outcome.verification, "exponent action residual·ε slope", fit, cfg.phase.m - 1.0 + r)

    # ── Stability ──

    def stability(self) -> None:
        cfg = self.cfg
        d = cfg.dimension
        phi = phase_from(cfg, d)
        center = off_center_point(cfg, d)
        psi = quadratic_profile(cfg, center)
        square = tuple(2 * v for v in unit_index(d, 0))
        perturbation = PolynomialField({square: 1.0}, 0, 1, d, center=center)
        lambdas = cfg.ladder.lambdas()[:STABILITY_LAMBDAS]
        rows = omega_stability(phi, psi, perturbation, STABILITY_SIGMAS, lambdas, **self.solver)

        table = ReportTable(
            "stationary_omega_stability",
            ["lam", "sigma", "deviation", "lipschitz"],
            identity="max_x |Ω(x,λ) − Ω̆(x,λ)| ≤ C σ for ψ̆ = ψ + σ(x₁ − x₀,₁)²",
            units="λ and σ dimensionless; Ω in radians",
            x="sigma",
            group="lam",
            loglog=True,
        )
        quotients = []
        for row in rows:
            quotient = row.deviation / row.sigma
            quotients.append(quotient)
            table.add(row.lam, row.sigma, row.deviation, quotient)
        self.outcome.tables.append(table)
        positive = [q for q in quotients if q > 0.0]
        spread = max(positive) / min(positive) if positive else 1.0
        self.outcome.verification.at_most("Ω Lipschitz in ψ", spread, LIPSCHITZ_SPREAD, "max/min of deviation/σ")


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return StationaryProcessor(cfg, rng).run()
