"""weyl: Weyl sequences covering the circle 𝕋_κ, κ = |b(x₀, ξ₀)|."""

import math

import numpy as np

from logger_setup import get_logger
from operators.errors import PreconditionError
from operators.fields import ConstantField
from operators.pdo_numerics import BAND_LIMIT_FRACTION, GridSpec
from operators.symbols import OscillatingSymbol, zero_phase
from operators.weyl_spectrum import (
    CoverageSchedule,
    build_phase_polynomial,
    circle_targets,
    gram_matrix,
    run_coverage_experiment,
    taylor_control,
    weyl_residuals,
    weyl_sequence,
)
from processors.archetypes import components, coverage_grid, coverage_symbol, phase_from, symbol_from
from processors.slope_regression import check_slope, fit_loglog
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

MIN_DECREASE = 2.0
PHASE_ERROR_LIMIT = 1e-8
IDENTITY_RESIDUAL = 1e-8
GRAM_OFF_DIAGONAL = 0.2
GRAM_SEQUENCE = 4


def resolvable_lambdas(cfg: ExperimentConfig, spec: GridSpec, xi0: np.ndarray) -> list[float]:
    """Ladder λ with λ|ξ₀| safely below the grid band limit."""
    limit = 0.9 * BAND_LIMIT_FRACTION * float(np.min(spec.nyquist)) / float(np.max(np.abs(xi0)))
    return [lam for lam in cfg.ladder.lambdas() if lam <= limit]


class WeylProcessor:
    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("weyl")
        self.spec = coverage_grid(cfg)
        d = cfg.dimension
        self.x0 = np.asarray(components(cfg.point.x0, d))
        self.xi0 = np.asarray(components(cfg.point.xi0, d))

    def run(self) -> ExperimentOutcome:
        cfg = self.cfg
        logger.info(f"Weyl run '{cfg.name}': r = {cfg.phase.r}, n = {cfg.degree()}, s = {cfg.schedule_exponent():.4g}")
        guarded(self.outcome, "circle coverage", self.coverage)
        guarded(self.outcome, "zero phase refusal", self.zero_phase_refusal)
        guarded(self.outcome, "identity cross-check", self.identity_cross_check)
        guarded(self.outcome, "Taylor control", self.taylor)
        guarded(self.outcome, "Weyl sequence Gram matrix", self.gram)
        return self.outcome

    def schedule(self) -> CoverageSchedule:
        cfg = self.cfg
        return CoverageSchedule(
            cfg.schedule_exponent(),
            cfg.degree(),
            lambda_min=cfg.schedule.lambda_min,
            lambda_max=cfg.schedule.lambda_max,
            bump_width=cfg.schedule.bump_width,
            rows=cfg.schedule.rows,
        )

    # ── Coverage ──

    def coverage(self) -> None:
        cfg = self.cfg
        symbol = coverage_symbol(cfg)
        schedule = self.schedule()
        mu0 = complex(symbol.base(self.x0, schedule.lambda_max * self.xi0))
        targets = circle_targets(mu0, cfg.schedule.targets)
        reports = run_coverage_experiment(symbol, self.x0, self.xi0, targets, schedule, self.spec)

        table = ReportTable(
            "weyl_coverage",
            ["mu_index", "mu_re", "mu_im", "p", "lam", "eps", "G", "phase_error", "residual", "note"],
            identity="‖A u_p − μ u_p‖ → 0 along λ_p with e^{iG(x₀,λ_p)} = μ/μ₀, ε_p = λ_p^{−s}",
            units="λ dimensionless; residuals in L² grid norm; G in radians",
            x="lam",
            group="mu_index",
            loglog=True,
        )
        table.notes["kappa"] = f"{abs(mu0):.12e}"
        table.notes["schedule"] = f"s={schedule.s:.12e} n={schedule.n}"
        check = self.outcome.verification
        for k, report in enumerate(reports):
            for row in report.rows:
                table.add(k, report.mu.real, report.mu.imag, row.p, row.lam, row.eps, row.G, row.phase_error, row.residual, row.note)
            name = f"μ_{k} = {report.mu:.4f}"
            check.add(
                f"{name} residuals decrease",
                report.decrease_factor() >= MIN_DECREASE,
                f"factor {report.decrease_factor():.3g} over {len(report.residuals)} rows (need {MIN_DECREASE})",
            )
            errors = [row.phase_error for row in report.rows]
            check.at_most(f"{name} phase matching", max(errors, default=math.nan), PHASE_ERROR_LIMIT)
        self.outcome.tables.append(table)

    def zero_phase_refusal(self) -> None:
        """A symbol with Φ ≡ 0 fails the growth condition and must be refused."""
        cfg = self.cfg
        d = cfg.dimension
        symbol = symbol_from(cfg, zero_phase(d))
        schedule = self.schedule()
        try:
            run_coverage_experiment(symbol, self.x0, self.xi0, None, schedule, self.spec)
        except PreconditionError as e:
            refused = "phase conditions fail" in str(e)
            self.outcome.verification.add("Φ ≡ 0 refused", refused, str(e))
            return
        self.outcome.verification.add("Φ ≡ 0 refused", False, "coverage ran without a phase")

    def identity_cross_check(self) -> None:
        """A = I: residual vanishes for μ = 1 and stays at |1 − μ| otherwise."""
        d = self.cfg.dimension
        identity = OscillatingSymbol(zero_phase(d), ConstantField(1.0, 2, d), 0.0)
        lambdas = resolvable_lambdas(self.cfg, self.spec, self.xi0)
        s = self.cfg.schedule_exponent()
        exact = weyl_residuals(identity, self.x0, self.xi0, 1.0, lambdas, s, self.spec)
        shifted = weyl_residuals(identity, self.x0, self.xi0, -1.0, lambdas, s, self.spec)

        table = ReportTable(
            "weyl_identity",
            ["lam", "eps", "residual_mu_1", "residual_mu_minus_1"],
            identity="A = I: ‖u − μu‖ = |1 − μ| for unit-norm u",
            units="λ dimensionless; residuals in L² grid norm",
            x="lam",
        )
        for a, b in zip(exact.rows, shifted.rows):
            table.add(a.lam, a.eps, a.residual, b.residual)
        self.outcome.tables.append(table)
        check = self.outcome.verification
        check.at_most("identity residual at μ = 1", max(exact.residuals), IDENTITY_RESIDUAL)
        check.add("identity residual at μ = −1 does not decrease", not shifted.is_decreasing(), f"{shifted.residuals[0]:.6f}")

    # ── Diagnostics ──

    def taylor(self) -> None:
        cfg = self.cfg
        phi = phase_from(cfg)
        n = cfg.degree()
        s = cfg.schedule_exponent()
        lambdas = cfg.ladder.lambdas()
        controls = []
        for lam in lambdas:
            poly = build_phase_polynomial(phi, self.x0, self.xi0, n, lam, verify=False).polynomial
            controls.append(taylor_control(phi, poly, lam, lam ** (-s), n))
        fit = fit_loglog(lambdas, controls)
        table = ReportTable(
            "weyl_taylor_control",
            ["lam", "eps", "control"],
            identity="max_{|x−x₀|≤ε} |G(x,λ) − G(x₀,λ)| / (λ^r ε^{n+1}) stays bounded",
            units="λ dimensionless; control ratio dimensionless",
            x="lam",
            loglog=True,
        )
        for lam, control in zip(lambdas, controls):
            table.add(lam, lam ** (-s), control)
        if fit.resolved:
            table.notes["fit control"] = fit.note()
        self.outcome.tables.append(table)
        check_slope(self.outcome.verification, "Taylor control bounded", fit, 0.0)

    def gram(self) -> None:
        cfg = self.cfg
        lambdas = resolvable_lambdas(cfg, self.spec, self.xi0)[:GRAM_SEQUENCE]
        functions = weyl_sequence(
            coverage_symbol(cfg).phase, self.x0, self.xi0, lambdas, cfg.schedule_exponent(), self.spec, cfg.degree(),
            cfg.schedule.bump_width,
        )
        gram = gram_matrix(functions)
        table = ReportTable(
            "weyl_gram",
            ["p", "q", "re", "im", "abs"],
            identity="⟨u_p, u_q⟩ for the Weyl sequence: 1 on the diagonal, small off it",
            units="inner products of unit-norm grid functions",
        )
        for p in range(len(lambdas)):
            for q in range(len(lambdas)):
                table.add(p, q, gram[p, q].real, gram[p, q].imag, abs(gram[p, q]))
        self.outcome.tables.append(table)
        off = np.abs(gram - np.diag(np.diag(gram)))
        self.outcome.verification.at_most("Weyl sequence nearly orthogonal", float(off.max(initial=0.0)), GRAM_OFF_DIAGONAL)


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return WeylProcessor(cfg, rng).run()
