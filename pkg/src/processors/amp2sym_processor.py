"""amp2sym: from amplitudes to symbols.

  expansion   |quadrature symbol − Σ_{|α|<N} a_α/α!| along |ξ| for the
              amplitude a₁(x,ξ)·conj(a₂(x′,ξ)) with Θ(x,x,ξ) = 0
  reduction   stationary-phase symbol of e^{iΦ(x′,ξ)}b(x′,ξ): Φ₀ = Φ − Θ(x,x,ξ),
              fixed-point certificates and the Hessian of the reduced phase
"""

import numpy as np

from config import EXPANSION_ORDER, NOISE_FLOOR
from logger_setup import get_logger
from operators.calculus import expand_amplitude_to_symbol
from operators.pdo_numerics import support_box, symbol_from_amplitude
from operators.stationary_phase import hessian_probe, symbol_from_oscillating_amplitude
from operators.symbols import OscillatingAmplitude
from processors.archetypes import phase_from, symbol_from
from processors.compose_processor import frequency_ladder
from processors.slope_regression import check_slope, fit_loglog, ladder_table
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

# Probes sit off the bump center so that Φ_x does not vanish there
OFF_CENTER = 0.3
CONTRACTION_LIMIT = 0.5
CONTRACTION_FROM = 64.0


def off_center_point(cfg: ExperimentConfig, d: int) -> np.ndarray:
    x = np.zeros(d)
    given = np.asarray(cfg.phase.center[:d], dtype=float)
    x[: len(given)] = given
    x[0] += OFF_CENTER * cfg.phase.width
    return x


class AmplitudeSymbolProcessor:
    """Expansion-versus-quadrature and stationary-phase reports."""

    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("amp2sym")

    def run(self) -> ExperimentOutcome:
        logger.info(f"amp2sym run '{self.cfg.name}': r = {self.cfg.phase.r}")
        guarded(self.outcome, "amplitude expansion vs quadrature", self.expansion_error)
        guarded(self.outcome, "stationary-phase reduction", self.reduction)
        return self.outcome

    def expansion_error(self) -> None:
        """Amplitude-to-symbol expansion against direct quadrature in d = 1."""
        cfg = self.cfg
        phase = phase_from(cfg, 1)
        a1 = symbol_from(cfg, phase)
        a2 = symbol_from(cfg, phase, shift=0.1 * cfg.phase.width, width_scale=0.9)
        amp = OscillatingAmplitude.from_product(a1, a2)
        expansion = expand_amplitude_to_symbol(amp, EXPANSION_ORDER)
        x = off_center_point(cfg, 1)
        box = support_box(a2.support, x)
        radii, xi = frequency_ladder(cfg, 1)
        keep = radii <= box.zeta_max
        radii, xi = radii[keep], xi[keep]
        logger.info(f"Amplitude quadrature at x = {x.tolist()} for {len(radii)} frequencies")

        quadrature, truncated, errors = [], [], []
        for point in xi:
            q = symbol_from_amplitude(amp, x, point, box)
            t = complex(expansion.truncated_sum(x, point))
            quadrature.append(q)
            truncated.append(t)
            errors.append(abs(q - t))
        fit = fit_loglog(radii, errors)
        bound = amp.order_m - EXPANSION_ORDER * (1.0 - amp.phase.order_r)
        table = ladder_table(
            "amp2sym_expansion_error",
            "xi",
            radii,
            {
                "quadrature_re": [q.real for q in quadrature],
                "quadrature_im": [q.imag for q in quadrature],
                "truncated_re": [t.real for t in truncated],
                "truncated_im": [t.imag for t in truncated],
                "error": errors,
            },
            f"|a(x,ξ) − Σ_{{|α|<{EXPANSION_ORDER}}} a_α/α!| = O(|ξ|^{{{bound:.4g}}})",
            "|ξ| dimensionless; symbol values absolute",
            {"error": fit},
        )
        self.outcome.tables.append(table)
        check_slope(self.outcome.verification, "amplitude expansion remainder slope", fit, bound)

    def reduction(self) -> None:
        """Φ₀ = Φ − Θ(x,x,ξ) ∈ S^{−1+2r} for Θ(x,x′,ξ) = Φ(x′,ξ)."""
        cfg = self.cfg
        d = cfg.dimension
        phase = phase_from(cfg, d)
        amp = OscillatingAmplitude.from_right_symbol(symbol_from(cfg, phase))
        x = off_center_point(cfg, d)
        radii, xi = frequency_ladder(cfg, d)
        r = amp.phase.order_r
        tol = cfg.tolerances.tol

        table = ReportTable(
            "amp2sym_reduction",
            ["xi", "phi", "theta_diag", "phi0", "ratio", "b_re", "b_im", "iterations", "residual", "contraction", "det_abs", "signature"],
            identity="Φ(x,ξ) = Θ(x,x+z_s,ξ+|ξ|η_s) − |ξ|⟨z_s,η_s⟩ = Θ(x,x,ξ) + Φ₀, Φ₀ ∈ S^{−1+2r}",
            units="|ξ| dimensionless; phases in radians",
            x="xi",
            loglog=True,
        )
        phi0, det_gap, signatures = [], [], []
        for radius, point in zip(radii, xi):
            report = symbol_from_oscillating_amplitude(amp, x, point, tol=tol, max_iter=cfg.tolerances.max_iter)
            sp = report.point
            hess = hessian_probe(amp.phase, x, point, (sp.location, sp.eta))
            diagonal = report.phi_value - report.phi0_value
            ratio = abs(report.phi0_value) / abs(diagonal) if diagonal else float("nan")
            table.add(
                float(radius), report.phi_value, diagonal, report.phi0_value, ratio,
                report.b_leading.real, report.b_leading.imag, sp.iterations, sp.residual,
                sp.contraction_ratio(), hess.det_abs, hess.signature,
            )
            phi0.append(abs(report.phi0_value))
            det_gap.append(abs(hess.det_abs - 1.0))
            signatures.append(hess.signature)
            self.outcome.verification.add(
                f"amplitude fixed point |ξ|={radius:.4g}", sp.residual < tol, f"residual {sp.residual:.2e} in {sp.iterations} iterations"
            )
            if radius >= CONTRACTION_FROM:
                self.outcome.verification.at_most(
                    f"amplitude contraction |ξ|={radius:.4g}", sp.contraction_ratio(), CONTRACTION_LIMIT
                )

        fit_phi0 = fit_loglog(radii, phi0)
        fit_det = fit_loglog(radii, det_gap, floor=NOISE_FLOOR)
        for key, fit in (("phi0", fit_phi0), ("det_abs", fit_det)):
            if fit.resolved:
                table.notes[f"fit {key}"] = fit.note()
        self.outcome.tables.append(table)

        check_slope(self.outcome.verification, "Φ₀ slope", fit_phi0, -1.0 + 2.0 * r)
        ratios = table.column("ratio")
        self.outcome.verification.add(
            "Φ₀/Θ(x,x,ξ) decreases", ratios[-1] < ratios[0], f"{ratios[0]:.3e} → {ratios[-1]:.3e}"
        )
        if fit_det.resolved:
            check_slope(self.outcome.verification, "|det Hessian| − 1 slope", fit_det, -(1.0 - r))
        self.outcome.verification.add(
            "Hessian signature constant", len(set(signatures)) == 1, f"signatures {sorted(set(signatures))}"
        )


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return AmplitudeSymbolProcessor(cfg, rng).run()
