"""sandwich: ⟨A ψ_{ε,ν}u, ψ_{ε,μ}v⟩ as ε → 0 against the constructive slice.

  convergence  masked archetype on a 128² grid, Richardson limit vs ⟨Ã^♮ũ(ν), ṽ(μ)⟩
  identity     A = I: normalized diagonal limit vs the shell pairing, disjoint shells → 0
  spherical    ⟨Â^♮(μ,ν)(Wu)(ν), (Wv)(μ)⟩ on the hemisphere chart
  unitarity    ‖Wu‖ = ‖u‖ by polar trapezoid quadrature
"""

import math
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from logger_setup import get_logger
from operators.direct_integral import (
    LevelFunction,
    amplitude_application,
    identity_application,
    level_kernel,
    richardson_limit,
    sandwich_table,
    shell_pairing,
    spherical_kernel,
    spherical_transform,
)
from operators.pdo_numerics import GridFunction
from processors.archetypes import kernel_grid, masked_amplitude, modulated_gaussian, transverse_grid
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

AGREEMENT_TOL = 1e-3
CONSISTENCY_TOL = 1e-10
DISJOINT_SHIFT = 0.5
DISJOINT_RATIO = 1e-8
UNITARITY_TOL = 1e-8
POLAR_LAMBDA_MAX = 4.0
POLAR_LAMBDA_POINTS = 2001
POLAR_ANGLES = 512


def relative_gap(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0.0 else 0.0


def digits(relative: float) -> float:
    return -math.log10(relative) if relative > 0.0 else math.inf


def convergence_table(name: str, table, identity: str, normalized: Optional[list] = None) -> ReportTable:
    report = ReportTable(
        name,
        ["width", "re", "im", "abs"] + (["normalized_re", "normalized_im"] if normalized else []),
        identity=identity,
        units="mollifier width ε = η in level units; width 0 is the Richardson limit",
    )
    for i, row in enumerate(table.rows()):
        extra = [normalized[i].real, normalized[i].imag] if normalized else []
        report.add(*row, *extra)
    report.notes["levels"] = f"mu={table.mu:.12e} nu={table.nu:.12e}"
    return report


class SandwichProcessor:
    """Mollifier sandwiches on P = |x|² in d = 2."""

    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("sandwich")
        self.level = LevelFunction.radial_square(2)
        self.spec = kernel_grid(cfg)
        self.u = modulated_gaussian(cfg)
        self.v = modulated_gaussian(cfg)
        self.sandwich_limit: Optional[complex] = None

    def run(self) -> ExperimentOutcome:
        k = self.cfg.kernel
        logger.info(f"Sandwich run '{self.cfg.name}': (μ, ν) = ({k.mu}, {k.nu}), widths {k.widths}")
        guarded(self.outcome, "sandwich vs slice", self.convergence)
        guarded(self.outcome, "identity sandwich", self.identity)
        guarded(self.outcome, "spherical kernel", self.spherical)
        guarded(self.outcome, "W unitarity", self.unitarity)
        return self.outcome

    def grid_functions(self) -> tuple[GridFunction, GridFunction]:
        return GridFunction.from_callable(self.spec, self.u), GridFunction.from_callable(self.spec, self.v)

    def slice_pairing(self) -> complex:
        """⟨Ã^♮(μ,ν)ũ(ν), ṽ(μ)⟩ over the transverse grid."""
        k = self.cfg.kernel
        kernel = level_kernel(masked_amplitude(self.cfg), self.level, k.mu, k.nu, points=k.eta_d_points)
        return kernel.pairing(self.level.transport(self.u, k.nu), self.level.transport(self.v, k.mu), transverse_grid(self.cfg))

    # ── Masked archetype ──

    def convergence(self) -> None:
        k = self.cfg.kernel
        U, V = self.grid_functions()
        apply = amplitude_application(masked_amplitude(self.cfg))
        result = sandwich_table(apply, self.level, k.mu, k.nu, U, V, k.widths)
        self.sandwich_limit = result.limit
        self.outcome.tables.append(
            convergence_table(
                "sandwich_convergence",
                result,
                "⟨A ψ_{ε,ν}u, ψ_{ε,μ}v⟩ → ⟨Ã^♮(μ,ν)ũ(ν), ṽ(μ)⟩ as ε → 0",
            )
        )

        slice_value = self.slice_pairing()
        finest = result.values[-1]
        limit_gap = relative_gap(result.limit, slice_value)
        finest_gap = relative_gap(finest, slice_value)
        table = ReportTable(
            "sandwich_vs_slice",
            ["construction", "re", "im", "relative", "digits"],
            identity="mollifier limit and η_d-integrated slice give the same pairing",
            units="pairings absolute; relative to the slice pairing",
        )
        table.add("slice", slice_value.real, slice_value.imag, 0.0, math.inf)
        table.add("finest", finest.real, finest.imag, finest_gap, digits(finest_gap))
        table.add("limit", result.limit.real, result.limit.imag, limit_gap, digits(limit_gap))
        self.outcome.tables.append(table)
        logger.info(f"Sandwich limit agrees with the slice to {digits(limit_gap):.2f} digits")
        self.outcome.verification.at_most(
            "sandwich limit matches slice pairing", limit_gap, AGREEMENT_TOL, f"{digits(limit_gap):.2f} digits"
        )

    # ── Identity ──

    def identity(self) -> None:
        """A = I: the diagonal sandwich grows like (2√π ε)⁻¹ times the shell pairing."""
        k = self.cfg.kernel
        U, V = self.grid_functions()
        diagonal = sandwich_table(identity_application, self.level, k.mu, k.mu, U, V, k.widths)
        normalized = [2.0 * math.sqrt(math.pi) * w * z for w, z in zip(diagonal.widths, diagonal.values)]
        limit = richardson_limit(diagonal.widths, normalized) if len(normalized) > 1 else normalized[0]
        shell = shell_pairing(self.level, k.mu, self.u, self.v, transverse_grid(self.cfg))
        gap = relative_gap(limit, shell)
        self.outcome.tables.append(
            convergence_table(
                "sandwich_identity",
                diagonal,
                "2√π ε·⟨ψ_{ε,μ}u, ψ_{ε,μ}v⟩ → ⟨ũ(μ), ṽ(μ)⟩ (width 0 row: unnormalized extrapolation)",
                normalized + [limit],
            )
        )

        nu = k.mu - DISJOINT_SHIFT
        disjoint = sandwich_table(identity_application, self.level, k.mu, nu, U, V, k.widths[-1:])
        ratio = abs(disjoint.values[-1]) / max(abs(diagonal.values[-1]), 1e-300)
        table = ReportTable(
            "sandwich_identity_checks",
            ["check", "value", "reference", "relative"],
            identity="shell pairing oracle and disjoint shells for A = I",
            units="pairings absolute",
        )
        table.add("shell_pairing", abs(limit), abs(shell), gap)
        table.add("disjoint_shells", abs(disjoint.values[-1]), abs(diagonal.values[-1]), ratio)
        self.outcome.tables.append(table)

        check = self.outcome.verification
        check.at_most("identity limit matches shell pairing", gap, AGREEMENT_TOL, f"shell {abs(shell):.6g}")
        check.at_most(f"disjoint shells (μ, ν) = ({k.mu}, {nu}) vanish", ratio, DISJOINT_RATIO)

    # ── Spherical normalization ──

    def spherical(self) -> None:
        k = self.cfg.kernel
        kernel = spherical_kernel(masked_amplitude(self.cfg), k.mu, k.nu, points=k.eta_d_points)

        def f(omega):
            return spherical_transform(self.u, k.nu, omega)

        def g(omega):
            return spherical_transform(self.v, k.mu, omega)

        value = kernel.pairing(f, g, transverse_grid(self.cfg))
        slice_value = self.slice_pairing()
        gap = relative_gap(value, slice_value)
        table = ReportTable(
            "sandwich_spherical",
            ["construction", "re", "im", "relative"],
            identity="⟨Â^♮(μ,ν)(Wu)(ν), (Wv)(μ)⟩ = ⟨Ã^♮(μ,ν)ũ(ν), ṽ(μ)⟩ since Z(λ)(Wu)(λ) = ũ(λ)",
            units="pairings absolute; relative to the spherical pairing",
        )
        table.add("spherical", value.real, value.imag, 0.0)
        table.add("slice", slice_value.real, slice_value.imag, gap)
        check = self.outcome.verification
        check.at_most("spherical kernel matches slice", gap, CONSISTENCY_TOL)
        if self.sandwich_limit is not None:
            sandwich_gap = relative_gap(value, self.sandwich_limit)
            table.add("sandwich", self.sandwich_limit.real, self.sandwich_limit.imag, sandwich_gap)
            check.at_most("spherical kernel matches sandwich", sandwich_gap, AGREEMENT_TOL)
        self.outcome.tables.append(table)

    def unitarity(self) -> None:
        """∫₀^∞∫ |Wu(λ,ω)|² dω dλ against ‖u‖² = πσ² for the Gaussian test function."""
        sigma = self.cfg.kernel.sigma
        lam = np.linspace(0.0, POLAR_LAMBDA_MAX, POLAR_LAMBDA_POINTS)
        theta = 2.0 * np.pi * np.arange(POLAR_ANGLES) / POLAR_ANGLES
        omega = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        values = spherical_transform(self.u, lam[:, None], omega[None, :, :])
        angular = np.abs(values) ** 2 @ np.full(POLAR_ANGLES, 2.0 * np.pi / POLAR_ANGLES)
        norm2 = float(trapezoid(angular, lam))
        exact = math.pi * sigma ** 2
        gap = abs(norm2 - exact) / exact

        table = ReportTable(
            "sandwich_unitarity",
            ["quadrature", "exact", "relative"],
            identity="‖Wu‖² = ‖u‖², (Wu)(λ,ω) = 2^{−1/2}λ^{(d−2)/4}u(λ^{1/2}ω)",
            units=f"squared L² norms; λ ∈ [0, {POLAR_LAMBDA_MAX}] x {POLAR_LAMBDA_POINTS}, {POLAR_ANGLES} angles",
        )
        table.add(norm2, exact, gap)
        self.outcome.tables.append(table)
        self.outcome.verification.at_most("W unitary", gap, UNITARITY_TOL)


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return SandwichProcessor(cfg, rng).run()
