"""Experiment settings for oscsym.

Configs are sectioned key=value files::

    [experiment]
    name = circle_coverage
    seed = 7

    [phase]
    kind = long_range
    r = 0.5

Missing keys fall back to ``config`` constants.  Errors name the file and line
of the offending key.
"""

import configparser
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from config import (
    COVERAGE_AMPLITUDE,
    COVERAGE_BUMP_WIDTH,
    COVERAGE_GRID_HALF_WIDTH,
    COVERAGE_GRID_POINTS,
    COVERAGE_LAMBDA_MAX,
    COVERAGE_LAMBDA_MIN,
    COVERAGE_PLATEAU_WIDTH,
    COVERAGE_ROWS,
    COVERAGE_TARGETS,
    DEFAULT_GRID_LOWER,
    DEFAULT_GRID_POINTS,
    DEFAULT_GRID_UPPER,
    ETA_D_POINTS,
    FD_STEP,
    GAUSS_POINTS,
    LADDER_MAX,
    LADDER_MIN,
    LADDER_POINTS,
    MASK_EPS,
    MAX_DIMENSION,
    MAX_ITER,
    MOLLIFIER_WIDTHS,
    OUTPUT_DIR,
    TOL,
)
from operators.errors import ConfigError
from operators.pdo_numerics import BAND_LIMIT_FRACTION
from operators.weyl_spectrum import pick_degree, schedule_admissible, schedule_interval

SECTIONS = ("experiment", "phase", "point", "grid", "ladder", "schedule", "tolerances", "kernel", "output")
PHASE_KINDS = ("long_range", "zero", "linear")
PROFILES = ("bump", "plateau")


@dataclass
class PhaseSettings:
    """Phase archetype: Φ = amplitude·v(x)·|ξ|^r·χ(|ξ|), v a profile about ``center``."""
    kind: str = "long_range"
    r: float = 0.5
    m: float = 0.0
    center: list[float] = field(default_factory=lambda: [0.0])
    width: float = 1.0
    amplitude: float = 1.0
    slope: list[float] = field(default_factory=lambda: [0.0])
    profile: str = "bump"
    cutoff_lower: float = 1.0
    cutoff_upper: float = 2.0


@dataclass
class PointSettings:
    x0: list[float] = field(default_factory=lambda: [0.0])
    xi0: list[float] = field(default_factory=lambda: [1.0])


@dataclass
class GridSettings:
    lower: list[float] = field(default_factory=lambda: [DEFAULT_GRID_LOWER])
    upper: list[float] = field(default_factory=lambda: [DEFAULT_GRID_UPPER])
    points: list[int] = field(default_factory=lambda: [DEFAULT_GRID_POINTS])


@dataclass
class LadderSettings:
    """Geometric ladders λ ∈ [lambda_min, lambda_max] and |ξ| ∈ [xi_min, xi_max]."""
    lambda_min: float = LADDER_MIN
    lambda_max: float = LADDER_MAX
    xi_min: float = LADDER_MIN
    xi_max: float = LADDER_MAX
    count: int = LADDER_POINTS

    def lambdas(self) -> list[float]:
        return geometric(self.lambda_min, self.lambda_max, self.count)

    def xi_values(self) -> list[float]:
        return geometric(self.xi_min, self.xi_max, self.count)


@dataclass
class ScheduleSettings:
    """Circle coverage: ε = λ^{−s}, the λ range and the grid the Weyl functions live on.

    The coverage symbol is the long-range phase scaled by ``amplitude`` and
    flat within COVERAGE_PLATEAU_FLAT·``plateau_width`` of x₀, with b ≡ 1.
    """
    s: Optional[float] = None
    n: Optional[int] = None
    targets: int = COVERAGE_TARGETS
    rows: int = COVERAGE_ROWS
    bump_width: float = COVERAGE_BUMP_WIDTH
    amplitude: float = COVERAGE_AMPLITUDE
    plateau_width: float = COVERAGE_PLATEAU_WIDTH
    lambda_min: float = COVERAGE_LAMBDA_MIN
    lambda_max: float = COVERAGE_LAMBDA_MAX
    grid_points: int = COVERAGE_GRID_POINTS
    grid_half_width: float = COVERAGE_GRID_HALF_WIDTH


@dataclass
class ToleranceSettings:
    tol: float = TOL
    max_iter: int = MAX_ITER
    gauss_points: int = GAUSS_POINTS
    fd_step: float = FD_STEP


@dataclass
class KernelSettings:
    """Levels, mask width and test functions for the direct-integral experiments."""
    mu: float = 1.0
    nu: float = 0.95
    mask_eps: float = MASK_EPS
    widths: list[float] = field(default_factory=lambda: list(MOLLIFIER_WIDTHS))
    center: list[float] = field(default_factory=lambda: [0.0, 1.0])
    sigma: float = 0.12
    modulation: float = 30.0
    y0_half_width: float = 0.5
    y0_points: int = 64
    eta_d_points: int = ETA_D_POINTS


@dataclass
class OutputSettings:
    directory: str = OUTPUT_DIR
    xlsx: bool = False


@dataclass
class ExperimentConfig:
    """A parsed experiment config; ``source`` is the file it came from."""
    name: str = "default"
    seed: int = 0
    phase: PhaseSettings = field(default_factory=PhaseSettings)
    point: PointSettings = field(default_factory=PointSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    ladder: LadderSettings = field(default_factory=LadderSettings)
    schedule: ScheduleSettings = field(default_factory=ScheduleSettings)
    tolerances: ToleranceSettings = field(default_factory=ToleranceSettings)
    kernel: KernelSettings = field(default_factory=KernelSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    source: Optional[Path] = None

    @property
    def dimension(self) -> int:
        return len(self.point.x0)

    def degree(self) -> int:
        """Taylor degree n: the configured one, else pick_degree(r)."""
        if self.schedule.n is not None:
            return self.schedule.n
        return pick_degree(self.phase.r)

    def schedule_exponent(self) -> float:
        """Configured s, else the midpoint of the admissible interval."""
        if self.schedule.s is not None:
            return self.schedule.s
        lower, upper = schedule_interval(self.phase.r, self.degree())
        return float((lower + upper) / 2)


def geometric(lower: float, upper: float, count: int) -> list[float]:
    if count == 1:
        return [float(lower)]
    ratio = (upper / lower) ** (1.0 / (count - 1))
    return [float(lower * ratio ** k) for k in range(count)]


# ── Loading ──


def _key_lines(path: Path) -> dict[tuple[str, str], int]:
    """Line number of every key, keyed by (section, key)."""
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.strip()
        if not text or text[0] in "#;":
            continue
        header = re.fullmatch(r"\[([^\]]+)\]", text)
        if header:
            section = header.group(1).strip().lower()
            lines[(section, "")] = number
            continue
        key = re.split(r"[=:]", text, maxsplit=1)[0].strip().lower()
        lines[(section, key)] = number
    return lines


class _Reader:
    """Typed access to one parsed file with path:line error reporting."""

    def __init__(self, path: Path, parser: configparser.ConfigParser):
        self.path = path
        self.parser = parser
        self.lines = _key_lines(path)

    def where(self, section: str, key: str = "") -> str:
        line = self.lines.get((section, key)) or self.lines.get((section, ""))
        return f"{self.path}:{line}" if line else str(self.path)

    def fail(self, section: str, key: str, message: str) -> ConfigError:
        return ConfigError(f"{self.where(section, key)}: [{section}] {key}: {message}")

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key).strip()

    def text(self, section: str, key: str, default: str) -> str:
        return self.raw(section, key) if self.has(section, key) else default

    def number(self, section: str, key: str, default, kind=float):
        if not self.has(section, key):
            return default
        value = self.raw(section, key)
        try:
            return kind(value)
        except ValueError as e:
            raise self.fail(section, key, f"expected {kind.__name__}, got {value!r}") from e

    def optional(self, section: str, key: str, kind=float):
        if not self.has(section, key) or self.raw(section, key).lower() in ("", "auto", "none"):
            return None
        return self.number(section, key, None, kind)

    def vector(self, section: str, key: str, default: list, kind=float) -> list:
        if not self.has(section, key):
            return list(default)
        value = self.raw(section, key)
        try:
            return [kind(part) for part in value.split(",") if part.strip()]
        except ValueError as e:
            raise self.fail(section, key, f"expected comma-separated {kind.__name__} values, got {value!r}") from e

    def flag(self, section: str, key: str, default: bool) -> bool:
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as e:
            raise self.fail(section, key, f"expected a boolean, got {self.raw(section, key)!r}") from e


def load_config(path, seed: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Parse and validate an experiment config.

    Precedence for seed and output directory: arguments, then OSCSYM_SEED /
    OSCSYM_OUTPUT_DIR (environment or .env), then the file.

    Raises:
        ConfigError: unreadable file, syntax error, bad value or failed validation.
    """
    load_dotenv()
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    except configparser.Error as e:
        line = getattr(e, "lineno", None)
        raise ConfigError(f"{path}:{line or '?'}: {e}") from e

    reader = _Reader(path, parser)
    for section in parser.sections():
        if section not in SECTIONS:
            raise reader.fail(section, "", f"unknown section (expected one of {', '.join(SECTIONS)})")

    cfg = ExperimentConfig(source=path)
    cfg.name = reader.text("experiment", "name", path.stem)
    cfg.seed = reader.number("experiment", "seed", 0, int)

    p = cfg.phase
    p.kind = reader.text("phase", "kind", p.kind)
    p.r = reader.number("phase", "r", p.r)
    p.m = reader.number("phase", "m", p.m)
    p.width = reader.number("phase", "width", p.width)
    p.amplitude = reader.number("phase", "amplitude", p.amplitude)
    p.profile = reader.text("phase", "profile", p.profile)
    p.cutoff_lower = reader.number("phase", "cutoff_lower", p.cutoff_lower)
    p.cutoff_upper = reader.number("phase", "cutoff_upper", p.cutoff_upper)

    cfg.point.x0 = reader.vector("point", "x0", cfg.point.x0)
    d = len(cfg.point.x0)
    cfg.point.xi0 = reader.vector("point", "xi0", [1.0] + [0.0] * (d - 1))
    p.center = reader.vector("phase", "center", cfg.point.x0)
    p.slope = reader.vector("phase", "slope", [0.0] * d)

    g = cfg.grid
    g.lower = reader.vector("grid", "lower", [DEFAULT_GRID_LOWER] * d)
    g.upper = reader.vector("grid", "upper", [DEFAULT_GRID_UPPER] * d)
    g.points = reader.vector("grid", "points", [DEFAULT_GRID_POINTS] * d, int)

    lad = cfg.ladder
    lad.lambda_min = reader.number("ladder", "lambda_min", lad.lambda_min)
    lad.lambda_max = reader.number("ladder", "lambda_max", lad.lambda_max)
    lad.xi_min = reader.number("ladder", "xi_min", lad.xi_min)
    lad.xi_max = reader.number("ladder", "xi_max", lad.xi_max)
    lad.count = reader.number("ladder", "count", lad.count, int)

    sch = cfg.schedule
    sch.s = reader.optional("schedule", "s")
    sch.n = reader.optional("schedule", "n", int)
    sch.targets = reader.number("schedule", "targets", sch.targets, int)
    sch.bump_width = reader.number("schedule", "bump_width", sch.bump_width)
    sch.rows = reader.number("schedule", "rows", sch.rows, int)
    sch.amplitude = reader.number("schedule", "amplitude", sch.amplitude)
    sch.plateau_width = reader.number("schedule", "plateau_width", sch.plateau_width)
    sch.lambda_min = reader.number("schedule", "lambda_min", sch.lambda_min)
    sch.lambda_max = reader.number("schedule", "lambda_max", sch.lambda_max)
    sch.grid_points = reader.number("schedule", "grid_points", sch.grid_points, int)
    sch.grid_half_width = reader.number("schedule", "grid_half_width", sch.grid_half_width)

    tol = cfg.tolerances
    tol.tol = reader.number("tolerances", "tol", tol.tol)
    tol.max_iter = reader.number("tolerances", "max_iter", tol.max_iter, int)
    tol.gauss_points = reader.number("tolerances", "gauss_points", tol.gauss_points, int)
    tol.fd_step = reader.number("tolerances", "fd_step", tol.fd_step)

    k = cfg.kernel
    k.mu = reader.number("kernel", "mu", k.mu)
    k.nu = reader.number("kernel", "nu", k.nu)
    k.mask_eps = reader.number("kernel", "mask_eps", k.mask_eps)
    k.widths = reader.vector("kernel", "widths", k.widths)
    k.center = reader.vector("kernel", "center", k.center)
    k.sigma = reader.number("kernel", "sigma", k.sigma)
    k.modulation = reader.number("kernel", "modulation", k.modulation)
    k.y0_half_width = reader.number("kernel", "y0_half_width", k.y0_half_width)
    k.y0_points = reader.number("kernel", "y0_points", k.y0_points, int)
    k.eta_d_points = reader.number("kernel", "eta_d_points", k.eta_d_points, int)

    cfg.output.directory = reader.text("output", "directory", cfg.output.directory)
    cfg.output.xlsx = reader.flag("output", "xlsx", cfg.output.xlsx)

    env_seed = os.environ.get("OSCSYM_SEED", "").strip()
    if env_seed:
        try:
            cfg.seed = int(env_seed)
        except ValueError as e:
            raise ConfigError(f"OSCSYM_SEED must be an integer, got {env_seed!r}") from e
    if os.environ.get("OSCSYM_OUTPUT_DIR", "").strip():
        cfg.output.directory = os.environ["OSCSYM_OUTPUT_DIR"].strip()
    if seed is not None:
        cfg.seed = int(seed)
    if output_dir is not None:
        cfg.output.directory = str(output_dir)

    validate(cfg, reader)
    return cfg


def _power_of_two(n: int) -> bool:
    return n >= 8 and not n & (n - 1)


def validate(cfg: ExperimentConfig, reader: Optional[_Reader] = None) -> None:
    """Check ranges; errors point at the offending key when the file is known."""

    def fail(section: str, key: str, message: str) -> ConfigError:
        if reader is not None:
            return reader.fail(section, key, message)
        return ConfigError(f"[{section}] {key}: {message}")

    d = cfg.dimension
    if not 1 <= d <= MAX_DIMENSION:
        raise fail("point", "x0", f"dimension must lie in [1, {MAX_DIMENSION}], got {d}")
    if len(cfg.point.xi0) != d:
        raise fail("point", "xi0", f"expected {d} components, got {len(cfg.point.xi0)}")
    if cfg.phase.kind not in PHASE_KINDS:
        raise fail("phase", "kind", f"expected one of {', '.join(PHASE_KINDS)}, got {cfg.phase.kind!r}")
    if cfg.phase.profile not in PROFILES:
        raise fail("phase", "profile", f"expected one of {', '.join(PROFILES)}, got {cfg.phase.profile!r}")
    if not 0.0 <= cfg.phase.r < 1.0:
        raise fail("phase", "r", f"r must lie in [0, 1), got {cfg.phase.r}")
    for key in ("width", "cutoff_lower", "cutoff_upper"):
        if getattr(cfg.phase, key) <= 0:
            raise fail("phase", key, "must be positive")
    if cfg.phase.cutoff_upper <= cfg.phase.cutoff_lower:
        raise fail("phase", "cutoff_upper", "must exceed cutoff_lower")

    g = cfg.grid
    if not len(g.lower) == len(g.upper) == len(g.points):
        raise fail("grid", "points", "lower, upper and points need the same number of entries")
    for lo, hi in zip(g.lower, g.upper):
        if hi <= lo:
            raise fail("grid", "upper", f"axis [{lo}, {hi}] has non-positive length")
    for n in g.points:
        if not _power_of_two(n):
            raise fail("grid", "points", f"point counts must be powers of two >= 8, got {n}")

    lad = cfg.ladder
    for key in ("lambda_min", "lambda_max", "xi_min", "xi_max"):
        if getattr(lad, key) <= 0:
            raise fail("ladder", key, "must be positive")
    if lad.lambda_max < lad.lambda_min:
        raise fail("ladder", "lambda_max", "must be at least lambda_min")
    if lad.xi_max < lad.xi_min:
        raise fail("ladder", "xi_max", "must be at least xi_min")
    if lad.count < 2:
        raise fail("ladder", "count", "needs at least two points for a slope")

    sch = cfg.schedule
    if sch.n is not None and sch.n < 0:
        raise fail("schedule", "n", "must be non-negative")
    n = cfg.degree()
    if sch.s is not None and not schedule_admissible(sch.s, cfg.phase.r, n):
        lower, upper = schedule_interval(cfg.phase.r, n)
        raise fail(
            "schedule", "s", f"s = {sch.s} outside the admissible interval ({float(lower):.6g}, {float(upper):.6g}) for n = {n}"
        )
    if sch.targets < 1:
        raise fail("schedule", "targets", "must be positive")
    if sch.bump_width <= 0:
        raise fail("schedule", "bump_width", "must be positive")
    if sch.rows < 2:
        raise fail("schedule", "rows", "needs at least two rows for a decrease")
    for key in ("amplitude", "plateau_width", "lambda_min", "grid_half_width"):
        if getattr(sch, key) <= 0:
            raise fail("schedule", key, "must be positive")
    if sch.lambda_max <= sch.lambda_min:
        raise fail("schedule", "lambda_max", "must exceed lambda_min")
    if not _power_of_two(sch.grid_points):
        raise fail("schedule", "grid_points", f"must be a power of two >= 8, got {sch.grid_points}")
    nyquist = math.pi * sch.grid_points / (2.0 * sch.grid_half_width)
    reach = sch.lambda_max * max(abs(v) for v in cfg.point.xi0)
    if reach > BAND_LIMIT_FRACTION * nyquist:
        raise fail(
            "schedule", "lambda_max", f"λ|ξ₀| = {reach:.6g} exceeds {BAND_LIMIT_FRACTION}·Nyquist of the coverage grid ({nyquist:.6g})"
        )

    tol = cfg.tolerances
    if tol.tol <= 0 or tol.fd_step <= 0:
        raise fail("tolerances", "tol" if tol.tol <= 0 else "fd_step", "must be positive")
    if tol.max_iter < 1 or tol.gauss_points < 1:
        raise fail("tolerances", "max_iter" if tol.max_iter < 1 else "gauss_points", "must be positive")

    k = cfg.kernel
    if k.mu <= 0 or k.nu <= 0:
        raise fail("kernel", "mu" if k.mu <= 0 else "nu", "levels must be positive")
    if not 0.0 < k.mask_eps < 1.0:
        raise fail("kernel", "mask_eps", f"must lie in (0, 1), got {k.mask_eps}")
    if not k.widths or any(w <= 0 for w in k.widths):
        raise fail("kernel", "widths", "mollifier widths must be positive")
    if k.sigma <= 0 or k.y0_half_width <= 0:
        raise fail("kernel", "sigma" if k.sigma <= 0 else "y0_half_width", "must be positive")
    if not _power_of_two(k.y0_points):
        raise fail("kernel", "y0_points", f"must be a power of two >= 8, got {k.y0_points}")
    if k.eta_d_points < 3:
        raise fail("kernel", "eta_d_points", "needs at least three nodes")
    if k.y0_half_width ** 2 >= min(k.mu, k.nu):
        raise fail("kernel", "y0_half_width", f"y₀ patch leaves the chart of level {min(k.mu, k.nu)}")
    if not math.isfinite(k.modulation):
        raise fail("kernel", "modulation", "must be finite")
