"""Model symbols, amplitudes and grids built from an ExperimentConfig."""

from typing import Optional

import numpy as np

from config import COVERAGE_PLATEAU_FLAT, KERNEL_BOX_HALF_WIDTH, KERNEL_GRID_POINTS
from operators.direct_integral import LevelFunction, MaskedAmplitude, conormal_mask
from operators.fields import ConstantField, multiply
from operators.pdo_numerics import GridSpec
from operators.symbols import (
    Box,
    OscillatingAmplitude,
    OscillatingSymbol,
    PhaseFunction,
    japanese_bracket,
    model_phase,
    spatial_profile,
    zero_phase,
)
from settings import ExperimentConfig


def phase_from(cfg: ExperimentConfig, d: Optional[int] = None, r: Optional[float] = None) -> PhaseFunction:
    """The configured phase archetype, optionally at another dimension or order."""
    p = cfg.phase
    d = cfg.dimension if d is None else d
    r = p.r if r is None else r
    if p.kind == "zero":
        return model_phase("zero", d)
    if p.kind == "linear":
        return model_phase("linear", d, c=components(p.slope, d))
    return model_phase(
        p.kind,
        d,
        r=r,
        center=components(p.center, d),
        width=p.width,
        amplitude=p.amplitude,
        slope=components(p.slope, d),
        profile=p.profile,
        cutoff_lower=p.cutoff_lower,
        cutoff_upper=p.cutoff_upper,
    )


def support_box(center, width: float) -> Box:
    center = np.asarray(center, dtype=float)
    return Box(center - width, center + width)


def symbol_from(
    cfg: ExperimentConfig,
    phase: Optional[PhaseFunction] = None,
    m: Optional[float] = None,
    shift: float = 0.0,
    width_scale: float = 1.0,
) -> OscillatingSymbol:
    """e^{iΦ}·f(x)⟨ξ⟩^m with f a bump about the phase center (moved by ``shift`` along x₁)."""
    d = cfg.dimension if phase is None else phase.dimension
    phase = phase_from(cfg, d) if phase is None else phase
    m = cfg.phase.m if m is None else m
    center = np.asarray(components(cfg.phase.center, d), dtype=float)
    center[0] += shift
    width = cfg.phase.width * width_scale
    base = multiply(spatial_profile(d, center, width), japanese_bracket(m, d))
    return OscillatingSymbol(phase, base, m, support_box(center, width))


def product_amplitude(cfg: ExperimentConfig, phase: Optional[PhaseFunction] = None) -> OscillatingAmplitude:
    """Amplitude a₁(x,ξ)·conj(a₂(x′,ξ)) of A₁A₂* for two symbols sharing Φ."""
    phase = phase_from(cfg) if phase is None else phase
    a1 = symbol_from(cfg, phase)
    a2 = symbol_from(cfg, phase, shift=0.1 * cfg.phase.width, width_scale=0.9)
    return OscillatingAmplitude.from_product(a1, a2)


def grid_from(cfg: ExperimentConfig) -> GridSpec:
    g = cfg.grid
    return GridSpec(tuple(g.lower), tuple(g.upper), tuple(g.points))


def grid_1d(cfg: ExperimentConfig, points: Optional[int] = None) -> GridSpec:
    """First axis of the configured grid, with an optional point count."""
    g = cfg.grid
    return GridSpec((g.lower[0],), (g.upper[0],), (points or g.points[0],))


def coverage_symbol(cfg: ExperimentConfig) -> OscillatingSymbol:
    """Circle-coverage archetype: e^{iΦ} with b ≡ 1 and v flat about x₀.

    On the plateau G(x₀, λ) = Φ(x₀, λξ₀) and ψ stays linear, so the residual
    is the transport of the bump alone.  Non-long-range kinds keep their phase.
    """
    d = cfg.dimension
    sch = cfg.schedule
    p = cfg.phase
    if p.kind == "long_range":
        phase = model_phase(
            "long_range",
            d,
            r=p.r,
            center=components(cfg.point.x0, d),
            width=sch.plateau_width,
            amplitude=sch.amplitude,
            profile="plateau",
            flat=COVERAGE_PLATEAU_FLAT,
            cutoff_lower=p.cutoff_lower,
            cutoff_upper=p.cutoff_upper,
        )
    else:
        phase = phase_from(cfg, d)
    return OscillatingSymbol(phase, ConstantField(1.0, 2, d), 0.0)


def coverage_grid(cfg: ExperimentConfig) -> GridSpec:
    """Box of half-width ``schedule.grid_half_width`` about x₀."""
    sch = cfg.schedule
    center = components(cfg.point.x0, cfg.dimension)
    lower = tuple(c - sch.grid_half_width for c in center)
    upper = tuple(c + sch.grid_half_width for c in center)
    return GridSpec(lower, upper, (sch.grid_points,) * cfg.dimension)


def components(values, d: int) -> list[float]:
    """Pad with zeros or truncate to d components."""
    values = [float(v) for v in values][:d]
    return values + [0.0] * (d - len(values))


# ── Level-set geometry (d = 2, P = |x|²) ──


def kernel_symbol(cfg: ExperimentConfig, oscillating: bool = True) -> OscillatingSymbol:
    """Long-range symbol about the kernel center with a plateau base of order 0."""
    center = components(cfg.kernel.center, 2)
    p = cfg.phase
    if oscillating and p.kind != "zero":
        phase = model_phase(
            "long_range",
            2,
            r=p.r,
            center=center,
            width=1.0,
            amplitude=p.amplitude,
            profile="plateau",
            cutoff_lower=p.cutoff_lower,
            cutoff_upper=p.cutoff_upper,
        )
    else:
        phase = zero_phase(2)
    base = spatial_profile(2, center, 1.0, profile="plateau")
    return OscillatingSymbol(phase, base, 0.0, support_box(center, 1.0))


def masked_amplitude(cfg: ExperimentConfig, oscillating: bool = True) -> MaskedAmplitude:
    """x′-independent amplitude of ``kernel_symbol`` with the conormal cone about ∇|x|² removed."""
    amp = OscillatingAmplitude.from_symbol(kernel_symbol(cfg, oscillating))
    return conormal_mask(amp, LevelFunction.radial_square(2), cfg.kernel.mask_eps)


def kernel_grid(cfg: ExperimentConfig) -> GridSpec:
    center = components(cfg.kernel.center, 2)
    lower = tuple(c - KERNEL_BOX_HALF_WIDTH for c in center)
    upper = tuple(c + KERNEL_BOX_HALF_WIDTH for c in center)
    return GridSpec(lower, upper, (KERNEL_GRID_POINTS,) * 2)


def transverse_grid(cfg: ExperimentConfig) -> GridSpec:
    """Grid in y₀ for slice pairings."""
    k = cfg.kernel
    return GridSpec((-k.y0_half_width,), (k.y0_half_width,), (k.y0_points,))


def modulated_gaussian(cfg: ExperimentConfig, modulation: Optional[float] = None):
    """u(x) = exp(−|x − x⁰|²/(2σ²))·e^{ik x₁} about the kernel center."""
    k = cfg.kernel
    center = np.asarray(components(k.center, 2))
    freq = k.modulation if modulation is None else modulation

    def u(x):
        x = np.asarray(x, dtype=float)
        q = np.sum((x - center) ** 2, axis=-1)
        return np.exp(-0.5 * q / k.sigma ** 2) * np.exp(1j * freq * x[..., 0])

    return u
