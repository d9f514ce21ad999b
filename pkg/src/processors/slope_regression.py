"""Log-log decay fits for remainder ladders.

A ladder (t_k, e_k) is fitted by log10 e = slope·log10 t + intercept with
numpy.polyfit.  Entries at or below the noise floor are dropped before the
fit; a ladder that is entirely below it counts as decaying.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config import NOISE_FLOOR, SLOPE_TOLERANCE
from logger_setup import get_logger
from processors.verification import VerificationResult
from services.report_service import ReportTable

logger = get_logger()


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    points: int
    below_floor: int = 0

    @property
    def resolved(self) -> bool:
        return self.points >= 2

    def note(self) -> str:
        """``slope intercept`` as written to report headers."""
        return f"{self.slope:.12e} {self.intercept:.12e}"


def local_slopes(t: Sequence[float], e: Sequence[float]) -> np.ndarray:
    """Point-to-point d(log e)/d(log t), averaged at interior points."""
    logt = np.log10(np.asarray(t, dtype=float))
    loge = np.log10(np.asarray(e, dtype=float))
    ratios = np.diff(loge) / np.diff(logt)
    out = np.empty(len(logt))
    if len(ratios) == 0:
        out[:] = np.nan
        return out
    out[0] = ratios[0]
    out[-1] = ratios[-1]
    out[1:-1] = 0.5 * (ratios[1:] + ratios[:-1])
    return out


def fit_loglog(t: Sequence[float], e: Sequence[float], floor: float = NOISE_FLOOR) -> SlopeFit:
    """Least-squares slope of log10 e against log10 t.

    Args:
        t: ladder abscissae, positive
        e: measured errors
        floor: entries with e <= floor·max(e) (or exactly zero) are dropped

    Returns:
        SlopeFit; ``slope`` is −inf when fewer than two entries survive and
        the ladder is below the floor.
    """
    t = np.asarray(t, dtype=float)
    e = np.abs(np.asarray(e, dtype=float))
    finite = np.isfinite(e) & (t > 0)
    t, e = t[finite], e[finite]
    scale = float(e.max(initial=0.0))
    keep = e > max(floor * scale, np.finfo(float).tiny)
    dropped = int(np.count_nonzero(~keep))
    if np.count_nonzero(keep) < 2:
        logger.warning(f"slope fit: {dropped} of {len(e)} entries below the noise floor")
        return SlopeFit(-np.inf, 0.0, int(np.count_nonzero(keep)), dropped)
    slope, intercept = np.polyfit(np.log10(t[keep]), np.log10(e[keep]), 1)
    return SlopeFit(float(slope), float(intercept), int(np.count_nonzero(keep)), dropped)


def check_slope(
    result: VerificationResult,
    name: str,
    fit: SlopeFit,
    bound: float,
    tolerance: float = SLOPE_TOLERANCE,
) -> bool:
    """Record ``slope <= bound + tolerance`` as a check."""
    limit = bound + tolerance
    passed = fit.slope <= limit
    detail = f"slope {fit.slope:.3f} vs bound {bound:.3f} (+{tolerance}) from {fit.points} points"
    result.add(name, passed, detail)
    return passed


def ladder_table(
    name: str,
    x: str,
    t: Sequence[float],
    series: dict[str, Sequence[float]],
    identity: str,
    units: str,
    fits: dict[str, SlopeFit],
) -> ReportTable:
    """A log-log report: one column per series plus its fitted slope in the header."""
    table = ReportTable(name, [x] + list(series), identity=identity, units=units, x=x, loglog=True)
    for k, value in enumerate(t):
        table.add(float(value), *[float(values[k]) for values in series.values()])
    for key, fit in fits.items():
        if fit.resolved:
            table.notes[f"fit {key}"] = fit.note()
    return table
