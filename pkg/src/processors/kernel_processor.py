"""kernel: changes of variables and kernel slices Ã^♮(μ, ν) for P = |x|²."""

import numpy as np

from logger_setup import get_logger
from operators.direct_integral import (
    Diffeo,
    LevelFunction,
    bilinear_invariance,
    change_variables,
    level_kernel,
)
from processors.archetypes import grid_1d, masked_amplitude, phase_from, product_amplitude
from processors.slope_regression import fit_loglog
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

PROBE_COUNT = 1000
CHI_RADIUS = 0.5
BILINEAR_POINTS = 128
BILINEAR_TOL = 1e-5
SLICE_Y0 = (-0.3, -0.15, 0.0, 0.15, 0.3)
SLICE_ETA0 = (-64.0, -16.0, -4.0, 4.0, 16.0, 64.0)
BUMP_LADDER = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
CONTINUITY_STEPS = (1e-2, 1e-3)
CONTINUITY_Y0 = (-0.2, 0.0, 0.2)
CONTINUITY_ETA0 = (-16.0, 16.0)
GAIN_TOLERANCE = 0.15


def oscillating_gain_floor(r: float) -> float:
    """Large-|η₀| slope gain of the slice when Φ ~ |ξ|^r.

    The η_d integral of e^{iΦ} localizes at its stationary point η_d = 0 to a
    width |η₀|^{1−r/2} instead of the full window ~|η₀|.
    """
    return 1.0 - r / 2.0


def shipped_diffeos() -> list[tuple[Diffeo, tuple, tuple]]:
    """Every shipped map with the probe box it is checked on."""
    return [
        (Diffeo.identity(2, CHI_RADIUS), (-1.5, -1.5), (1.5, 1.5)),
        (Diffeo.linear([[2.0, 1.0], [0.0, 1.0]], CHI_RADIUS), (-1.5, -1.5), (1.5, 1.5)),
        (Diffeo.sine_warp(0.3, 1, CHI_RADIUS), (-2.0,), (2.0,)),
        (Diffeo.sine_warp(0.3, 2, CHI_RADIUS), (-1.5, -1.5), (1.5, 1.5)),
        (Diffeo.bent_shear(0.4, CHI_RADIUS), (-1.5, -1.5), (1.5, 1.5)),
        (LevelFunction.radial_square(2).chart(), (-0.5, 0.75), (0.5, 1.5)),
    ]


class KernelProcessor:
    """Diffeomorphism probes, bilinear invariance and slice tables."""

    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("kernel")
        self.level = LevelFunction.radial_square(2)

    def run(self) -> ExperimentOutcome:
        k = self.cfg.kernel
        logger.info(f"Kernel run '{self.cfg.name}': (μ, ν) = ({k.mu}, {k.nu}), mask ε = {k.mask_eps}")
        guarded(self.outcome, "diffeomorphism probes", self.diffeo_probes)
        guarded(self.outcome, "bilinear invariance", self.bilinear)
        guarded(self.outcome, "kernel slice table", self.slice_table)
        guarded(self.outcome, "slice class bump", self.class_bump)
        guarded(self.outcome, "slice continuity", self.continuity)
        return self.outcome

    def slice(self, mu: float, nu: float, oscillating: bool = True):
        return level_kernel(
            masked_amplitude(self.cfg, oscillating), self.level, mu, nu, points=self.cfg.kernel.eta_d_points
        )

    # ── Changes of variables ──

    def diffeo_probes(self) -> None:
        table = ReportTable(
            "kernel_diffeo_probes",
            ["diffeo", "dimension", "secant", "roundtrip", "diagonal", "min_det"],
            identity="κ(x) − κ(x′) = G(x,x′)(x − x′), κ(κ⁻¹(y)) = y, G(x,x) = κ′(x), det G ≠ 0",
            units="relative residuals over 1000 random pairs in the χ-support",
        )
        for diffeo, lower, upper in shipped_diffeos():
            check = diffeo.probe(self.rng, lower, upper, PROBE_COUNT)
            table.add(diffeo.name, diffeo.dimension, check.secant, check.roundtrip, check.diagonal, check.min_det)
            self.outcome.verification.add(
                f"diffeo {diffeo.name} (d={diffeo.dimension})",
                check.passed(),
                f"secant {check.secant:.2e}, roundtrip {check.roundtrip:.2e}, min det {check.min_det:.3g}",
            )
        self.outcome.tables.append(table)

    def bilinear(self) -> None:
        """⟨Au, v⟩ = ⟨Ãũ, ṽ⟩ + ⟨K₀u, v⟩ through a sine warp in d = 1."""
        cfg = self.cfg
        spec = grid_1d(cfg, BILINEAR_POINTS)
        amp = product_amplitude(cfg, phase_from(cfg, 1))
        center = float(cfg.phase.center[0])

        def u(x):
            return np.exp(-0.5 * ((x[..., 0] - center) / 0.2) ** 2)

        def v(x):
            return np.exp(-0.5 * ((x[..., 0] - center - 0.1) / 0.25) ** 2) * np.exp(2j * x[..., 0])

        result = bilinear_invariance(amp, Diffeo.sine_warp(0.3, 1, CHI_RADIUS), u, v, spec, spec)
        table = ReportTable(
            "kernel_bilinear_invariance",
            ["direct", "transformed", "remainder", "relative"],
            identity="⟨Au, v⟩ = ⟨Ãũ, ṽ⟩ + ⟨K₀u, v⟩ for κ(x) = x + 0.3 sin x",
            units="pairings on a 128-point grid; relative difference",
        )
        table.add(result.direct, result.transformed, result.remainder, result.relative)
        self.outcome.tables.append(table)
        self.outcome.verification.at_most("bilinear form invariance", result.relative, BILINEAR_TOL)

    # ── Slices ──

    def slice_table(self) -> None:
        k = self.cfg.kernel
        kernel = self.slice(k.mu, k.nu)
        rows = kernel.tabulate(SLICE_Y0, SLICE_Y0, SLICE_ETA0)
        table = ReportTable(
            "kernel_slice",
            ["y0", "y0p", "eta0", "re", "im"],
            identity="𝐚̃^♮(y₀,y₀′,η₀;μ,ν) = (2π)⁻¹ ∫ 𝐚̃(y₀,μ,y₀′,ν,η₀,η_d) e^{i(μ−ν)η_d} dη_d",
            units="y₀ in x units; η₀ dimensionless; amplitude values absolute",
        )
        table.notes["levels"] = f"mu={k.mu:.12e} nu={k.nu:.12e}"
        for row in rows:
            table.add(*row)
        self.outcome.tables.append(table)
        values = np.array([complex(re, im) for *_, re, im in rows])
        self.outcome.verification.add(
            "slice values finite", bool(np.all(np.isfinite(values))), f"{len(values)} probes, max |𝐚̃^♮| {np.abs(values).max():.4g}"
        )

    def class_bump(self) -> None:
        """The η_d integral gains one order in η₀ over the transformed amplitude.

        For Φ ≡ 0 the integrand is homogeneous of degree 0 and the gain is exactly 1.
        For oscillating Φ it drifts from 1 toward 1 − r/2 along the ladder.
        """
        mu = self.cfg.kernel.mu
        eta0 = np.asarray(BUMP_LADDER)
        y0 = np.zeros((len(eta0), 1))
        y = np.concatenate([y0, np.full((len(eta0), 1), mu)], axis=-1)
        eta = np.stack([eta0, np.zeros_like(eta0)], axis=-1)

        table = ReportTable(
            "kernel_class_bump",
            ["eta0", "amplitude", "slice", "amplitude_plain", "slice_plain"],
            identity="𝐚̃ ∈ S^m ⟹ 𝐚̃^♮ ∈ S^{m+1}: the diagonal slice grows one order faster in η₀",
            units="|η₀| dimensionless; magnitudes at y₀ = 0 on the level μ",
            x="eta0",
            loglog=True,
        )
        series = {}
        for oscillating, suffix in ((True, ""), (False, "_plain")):
            masked = masked_amplitude(self.cfg, oscillating)
            moved = change_variables(masked, self.level.chart()).amplitude
            series["amplitude" + suffix] = np.abs(np.asarray(moved(y, y, eta)))
            series["slice" + suffix] = np.abs(np.asarray(self.slice(mu, mu, oscillating).diagonal(y0, eta0[:, None])))
        for i, value in enumerate(eta0):
            table.add(value, *[float(series[key][i]) for key in ("amplitude", "slice", "amplitude_plain", "slice_plain")])
        fits = {key: fit_loglog(eta0, values) for key, values in series.items()}
        for key, fit in fits.items():
            if fit.resolved:
                table.notes[f"fit {key}"] = fit.note()
        self.outcome.tables.append(table)

        check = self.outcome.verification
        plain_gain = fits["slice_plain"].slope - fits["amplitude_plain"].slope
        check.within("slice gains one order (Φ ≡ 0)", plain_gain, 1.0 - GAIN_TOLERANCE, 1.0 + GAIN_TOLERANCE)
        gain = fits["slice"].slope - fits["amplitude"].slope
        floor = oscillating_gain_floor(self.cfg.phase.r)
        check.within(
            "slice gains between 1 − r/2 and one order (oscillating)",
            gain,
            floor - GAIN_TOLERANCE,
            1.0 + GAIN_TOLERANCE,
            f"stationary-phase floor {floor:.3f}",
        )

    def continuity(self) -> None:
        """Difference quotients in μ stay bounded as the step shrinks."""
        k = self.cfg.kernel
        y0 = np.repeat(np.asarray(CONTINUITY_Y0), len(CONTINUITY_ETA0))[:, None]
        eta0 = np.tile(np.asarray(CONTINUITY_ETA0), len(CONTINUITY_Y0))[:, None]
        base = np.asarray(self.slice(k.mu, k.nu)(y0, y0, eta0))
        table = ReportTable(
            "kernel_continuity",
            ["h", "quotient"],
            identity="max |𝐚̃^♮(μ+h,ν) − 𝐚̃^♮(μ,ν)| / h over probes stays bounded",
            units="h in level units",
        )
        quotients = []
        for h in CONTINUITY_STEPS:
            moved = np.asarray(self.slice(k.mu + h, k.nu)(y0, y0, eta0))
            quotient = float(np.max(np.abs(moved - base))) / h
            quotients.append(quotient)
            table.add(h, quotient)
        self.outcome.tables.append(table)
        self.outcome.verification.at_most(
            "slice Lipschitz in μ", quotients[-1], 2.0 * quotients[0] + 1e-12, f"quotients {quotients[0]:.4g}, {quotients[-1]:.4g}"
        )


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return KernelProcessor(cfg, rng).run()
