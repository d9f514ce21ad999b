"""
Discretized PDO application, kernels, symbol quadratures and operator matrices.

Every ℝ^d integral becomes a uniform-grid sum over a truncated box.  The
spatial grid x_j = lower + j·h (h = L/N, periodic) is paired with the centered
frequency grid ξ_k = 2πk/L, k = −N/2 … N/2−1, and

    û(ξ) = (2π)^{−d/2} ∫ e^{−i⟨x,ξ⟩} u(x) dx

is discretized by the DFT pair forward_transform / inverse_transform.
This module evaluates oscillating symbols directly and is the ground truth
for the asymptotic constructions elsewhere.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg

from logger_setup import get_logger
from operators.errors import DivergenceError, DomainError, SpectrumProbeError

logger = get_logger()

CHUNK_ENTRIES = 1 << 22
BAND_LIMIT_FRACTION = 0.8
BAND_LIMIT_TOLERANCE = 1e-8
MIN_AXIS_POINTS = 8


# ── Grids ──


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with its conjugate frequency grid."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        points = tuple(int(v) for v in np.atleast_1d(self.points))
        if not (len(lower) == len(upper) == len(points)):
            raise DomainError("grid bounds and point counts must have the same length")
        for lo, hi, n in zip(lower, upper, points):
            if hi <= lo:
                raise DomainError(f"grid axis [{lo}, {hi}] has non-positive length")
            if n < MIN_AXIS_POINTS or n & (n - 1):
                raise DomainError(f"grid point count {n} must be a power of two >= {MIN_AXIS_POINTS}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points", points)

    @classmethod
    def cube(cls, d: int, lower: float, upper: float, points: int) -> "GridSpec":
        return cls((lower,) * d, (upper,) * d, (points,) * d)

    @property
    def dimension(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.upper) - np.array(self.lower)

    @property
    def steps(self) -> np.ndarray:
        return self.lengths / np.array(self.points)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.steps))

    @property
    def frequency_steps(self) -> np.ndarray:
        return 2.0 * np.pi / self.lengths

    @property
    def frequency_cell(self) -> float:
        return float(np.prod(self.frequency_steps))

    @property
    def nyquist(self) -> np.ndarray:
        return np.pi / self.steps

    def axes(self) -> list[np.ndarray]:
        return [lo + h * np.arange(n) for lo, h, n in zip(self.lower, self.steps, self.points)]

    def frequency_axes(self) -> list[np.ndarray]:
        return [2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, h)) for n, h in zip(self.points, self.steps)]

    def coordinates(self) -> np.ndarray:
        """Grid points as an array of shape (size, d), C order."""
        return _mesh(self.axes())

    def frequencies(self) -> np.ndarray:
        return _mesh(self.frequency_axes())

    def refine(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.lower, self.upper, tuple(n * factor for n in self.points))


def _mesh(axes: Sequence[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


@dataclass
class GridFunction:
    """Complex samples of a function on a GridSpec, stored flat in C order."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).reshape(-1)
        if values.size != self.spec.size:
            raise DomainError(f"grid of size {self.spec.size} received {values.size} values")
        self.values = values

    @classmethod
    def from_callable(cls, spec: GridSpec, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(spec, func(spec.coordinates()))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.size, dtype=complex))

    def norm(self) -> float:
        """Discrete L² norm with weight h^d."""
        return float(np.sqrt(self.spec.cell_volume * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "GridFunction") -> complex:
        """⟨u, v⟩ = h^d Σ u·conj(v)."""
        _check_same_grid(self.spec, other.spec)
        return complex(self.spec.cell_volume * np.sum(self.values * np.conj(other.values)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.spec, other.spec)
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.spec, other.spec)
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, scalar: complex) -> "GridFunction":
        return GridFunction(self.spec, scalar * self.values)

    __rmul__ = __mul__

    def restrict(self, mask: np.ndarray) -> "GridFunction":
        return GridFunction(self.spec, np.where(np.asarray(mask).reshape(-1), self.values, 0.0))

    def to_csv(self, path: Path) -> None:
        coords = self.spec.coordinates()
        header = [f"x{k + 1}" for k in range(self.spec.dimension)] + ["real", "imag"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for key, value in (("lower", self.spec.lower), ("upper", self.spec.upper), ("points", self.spec.points)):
                fh.write(f"# {key}: {' '.join(str(v) for v in value)}\n")
            writer.writerow(header)
            for point, value in zip(coords, self.values):
                writer.writerow([f"{c:.12e}" for c in point] + [f"{value.real:.12e}", f"{value.imag:.12e}"])

    @classmethod
    def from_csv(cls, path: Path) -> "GridFunction":
        meta = {}
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].partition(":")
                    meta[key.strip()] = value.split()
                else:
                    rows.append(line)
        try:
            spec = GridSpec(
                tuple(float(v) for v in meta["lower"]),
                tuple(float(v) for v in meta["upper"]),
                tuple(int(v) for v in meta["points"]),
            )
        except KeyError as e:
            raise DomainError(f"{path}: missing grid header {e}") from e
        reader = csv.DictReader(rows)
        values = [complex(float(r["real"]), float(r["imag"])) for r in reader]
        return cls(spec, np.array(values))


@dataclass
class OperatorMatrix:
    """Finite section of an operator acting on flattened GridFunction values."""

    spec: GridSpec
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.spec.size, self.spec.size):
            raise DomainError(f"operator matrix shape {entries.shape} does not match grid size {self.spec.size}")
        self.entries = entries

    def apply(self, u: GridFunction) -> GridFunction:
        _check_same_grid(self.spec, u.spec)
        return GridFunction(self.spec, self.entries @ u.values)

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.spec, self.entries.conj().T)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_grid(self.spec, other.spec)
        return OperatorMatrix(self.spec, self.entries @ other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_grid(self.spec, other.spec)
        return OperatorMatrix(self.spec, self.entries - other.entries)

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col", "real", "imag"])
            for (i, j), value in np.ndenumerate(self.entries):
                writer.writerow([i, j, f"{value.real:.12e}", f"{value.imag:.12e}"])


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise DomainError("grid functions live on different grids")


def identity_matrix(spec: GridSpec) -> OperatorMatrix:
    return OperatorMatrix(spec, np.eye(spec.size, dtype=complex))


def multiplication_matrix(spec: GridSpec, w: Callable[[np.ndarray], np.ndarray]) -> OperatorMatrix:
    return OperatorMatrix(spec, np.diag(np.asarray(w(spec.coordinates()), dtype=complex)))


# ── Fourier pair ──


def forward_transform(u: GridFunction) -> np.ndarray:
    """û on the frequency grid, flat in C order."""
    spec = u.spec
    values = u.values.reshape(spec.shape)
    transformed = np.fft.fftshift(np.fft.fftn(values))
    xi = spec.frequencies()
    shift = np.exp(-1j * xi @ np.array(spec.lower))
    return (2.0 * np.pi) ** (-spec.dimension / 2) * spec.cell_volume * shift * transformed.reshape(-1)


def inverse_transform(u_hat: np.ndarray, spec: GridSpec) -> GridFunction:
    xi = spec.frequencies()
    shifted = np.asarray(u_hat, dtype=complex).reshape(-1) * np.exp(1j * xi @ np.array(spec.lower))
    values = np.fft.ifftn(np.fft.ifftshift(shifted.reshape(spec.shape))) * spec.size
    return GridFunction(spec, (2.0 * np.pi) ** (-spec.dimension / 2) * spec.frequency_cell * values.reshape(-1))


def band_excess(u: GridFunction, fraction: float = BAND_LIMIT_FRACTION) -> float:
    """Relative spectral energy of u above ``fraction``·Nyquist on any axis."""
    spec = u.spec
    u_hat = forward_transform(u)
    total = float(np.sum(np.abs(u_hat) ** 2))
    if total == 0.0:
        return 0.0
    high = np.any(np.abs(spec.frequencies()) > fraction * spec.nyquist, axis=-1)
    return float(np.sum(np.abs(u_hat[high]) ** 2)) / total


def _warn_band_limit(u: GridFunction) -> None:
    excess = band_excess(u)
    if excess > BAND_LIMIT_TOLERANCE:
        logger.warning(f"input is not band-limited: {excess:.2e} of the energy lies above 0.8·Nyquist")


# ── Operator application ──


def _symbol_dimension(a) -> Optional[int]:
    return getattr(a, "dimension", None)


def _check_dimension(a, spec: GridSpec) -> None:
    d = _symbol_dimension(a)
    if d is not None and d != spec.dimension:
        raise DomainError(f"symbol dimension {d} does not match grid dimension {spec.dimension}")


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"non-finite {what} values")
    return values


def _row_chunks(rows: int, width: int):
    step = max(1, CHUNK_ENTRIES // max(1, width))
    for start in range(0, rows, step):
        yield slice(start, min(rows, start + step))


def _frequency_selection(spec: GridSpec, frequency_mask: Optional[np.ndarray]) -> np.ndarray:
    xi = spec.frequencies()
    if frequency_mask is None:
        return np.arange(len(xi))
    return np.flatnonzero(np.asarray(frequency_mask).reshape(-1))


def _synthesize(a, spec: GridSpec, weights_hat: np.ndarray, rows: np.ndarray, freq: np.ndarray) -> np.ndarray:
    """Σ_k e^{i⟨x,ξ_k⟩} a(x, ξ_k) ŵ_k over selected rows and frequencies."""
    x = spec.coordinates()[rows]
    xi = spec.frequencies()[freq]
    out = np.zeros(len(rows), dtype=complex)
    for chunk in _row_chunks(len(rows), len(freq)):
        xc = x[chunk]
        symbol = _finite(np.asarray(a(xc[:, None, :], xi[None, :, :])), "symbol")
        symbol = np.broadcast_to(symbol, (len(xc), len(xi)))
        out[chunk] = (np.exp(1j * xc @ xi.T) * symbol) @ weights_hat
    return out


def apply_symbol_pdo(
    a,
    u: GridFunction,
    output_mask: Optional[np.ndarray] = None,
    frequency_mask: Optional[np.ndarray] = None,
) -> GridFunction:
    """(Au)(x) = (2π)^{−d/2} Σ_k e^{i⟨x,ξ_k⟩} a(x, ξ_k) û(ξ_k) Δξ^d.

    Args:
        a: symbol object or vectorized callable a(x, ξ)
        u: input samples; should be band-limited on its grid
        output_mask: optional boolean mask restricting the output points
        frequency_mask: optional boolean mask restricting the frequency sum

    Raises:
        DomainError: dimension mismatch or non-finite symbol values.
    """
    spec = u.spec
    _check_dimension(a, spec)
    _warn_band_limit(u)
    rows = np.arange(spec.size) if output_mask is None else np.flatnonzero(np.asarray(output_mask).reshape(-1))
    freq = _frequency_selection(spec, frequency_mask)
    u_hat = forward_transform(u)[freq]
    scale = (2.0 * np.pi) ** (-spec.dimension / 2) * spec.frequency_cell
    values = np.zeros(spec.size, dtype=complex)
    values[rows] = scale * _synthesize(a, spec, u_hat, rows, freq)
    return GridFunction(spec, values)


def apply_amplitude_pdo(
    amp,
    u: GridFunction,
    output_mask: Optional[np.ndarray] = None,
    frequency_mask: Optional[np.ndarray] = None,
    input_threshold: float = 0.0,
) -> GridFunction:
    """(Au)(x) = (2π)^{−d} Σ_k Σ_j e^{i⟨x−x′_j,ξ_k⟩} 𝐚(x, x′_j, ξ_k) u_j h^d Δξ^d.

    Amplitudes carrying ``factors`` (left(x, ξ), right(x′, ξ)) are summed over x′
    first, which is the same quadrature reordered.  Input points with
    |u| <= input_threshold·max|u| are dropped from the dense sum.
    """
    spec = u.spec
    _check_dimension(amp, spec)
    _warn_band_limit(u)
    rows = np.arange(spec.size) if output_mask is None else np.flatnonzero(np.asarray(output_mask).reshape(-1))
    freq = _frequency_selection(spec, frequency_mask)
    scale = (2.0 * np.pi) ** (-spec.dimension) * spec.cell_volume * spec.frequency_cell
    values = np.zeros(spec.size, dtype=complex)

    factors = getattr(amp, "factors", None)
    if factors is not None:
        left, right = factors
        collapsed = _collapse_input(right, u, freq, input_threshold)
        values[rows] = scale * _synthesize(left, spec, collapsed, rows, freq)
        return GridFunction(spec, values)

    x = spec.coordinates()
    xi = spec.frequencies()[freq]
    active = _active_inputs(u, input_threshold)
    xp = x[active]
    up = u.values[active]
    inner = np.exp(-1j * xp @ xi.T)  # (N′, M)
    for row in rows:
        xr = x[row]
        amplitude = _finite(np.asarray(amp(xr[None, None, :], xp[:, None, :], xi[None, :, :])), "amplitude")
        amplitude = np.broadcast_to(amplitude, (len(xp), len(xi)))
        per_freq = (amplitude * inner).T @ up
        values[row] = scale * np.dot(np.exp(1j * xi @ xr), per_freq)
    return GridFunction(spec, values)


def _active_inputs(u: GridFunction, threshold: float) -> np.ndarray:
    magnitude = np.abs(u.values)
    if magnitude.max(initial=0.0) == 0.0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(magnitude > threshold * magnitude.max())


def _collapse_input(right, u: GridFunction, freq: np.ndarray, threshold: float) -> np.ndarray:
    """Σ_j e^{−i⟨x′_j,ξ_k⟩} right(x′_j, ξ_k) u_j for each selected frequency."""
    spec = u.spec
    active = _active_inputs(u, threshold)
    xp = spec.coordinates()[active]
    up = u.values[active]
    xi = spec.frequencies()[freq]
    out = np.zeros(len(xi), dtype=complex)
    for chunk in _row_chunks(len(xi), len(xp)):
        xic = xi[chunk]
        weight = _finite(np.asarray(right(xp[None, :, :], xic[:, None, :])), "amplitude")
        weight = np.broadcast_to(weight, (len(xic), len(xp)))
        out[chunk] = (np.exp(-1j * xic @ xp.T) * weight) @ up
    return out


def kernel_of(amp, x, xp, spec: GridSpec) -> complex:
    """k(x, x′) = (2π)^{−d} Σ_k e^{i⟨x−x′,ξ_k⟩} 𝐚(x, x′, ξ_k) Δξ^d on the frequency grid of ``spec``.

    Raises:
        DivergenceError: x = x′ while the declared order m >= −d.
    """
    x = np.asarray(x, dtype=float).reshape(spec.dimension)
    xp = np.asarray(xp, dtype=float).reshape(spec.dimension)
    order_m = getattr(amp, "order_m", 0.0)
    if np.array_equal(x, xp) and order_m >= -spec.dimension:
        raise DivergenceError(
            f"kernel on the diagonal diverges for order m = {order_m} >= -d = {-spec.dimension}"
        )
    xi = spec.frequencies()
    values = _finite(np.asarray(amp(x[None, :], xp[None, :], xi)), "amplitude")
    values = np.broadcast_to(values, (len(xi),))
    total = np.sum(np.exp(1j * xi @ (x - xp)) * values)
    return complex((2.0 * np.pi) ** (-spec.dimension) * spec.frequency_cell * total)


# ── Operators and matrices ──


class SymbolOperator:
    """The PDO of a symbol on a fixed grid."""

    def __init__(self, a, spec: GridSpec):
        _check_dimension(a, spec)
        self.a = a
        self.spec = spec

    def __call__(self, u: GridFunction) -> GridFunction:
        return apply_symbol_pdo(self.a, u)

    def matrix(self) -> OperatorMatrix:
        spec = self.spec
        x = spec.coordinates()
        xi = spec.frequencies()
        scale = (2.0 * np.pi) ** (-spec.dimension) * spec.cell_volume * spec.frequency_cell
        synthesis = np.empty((spec.size, len(xi)), dtype=complex)
        for chunk in _row_chunks(spec.size, len(xi)):
            symbol = _finite(np.asarray(self.a(x[chunk][:, None, :], xi[None, :, :])), "symbol")
            synthesis[chunk] = np.exp(1j * x[chunk] @ xi.T) * symbol
        analysis = np.exp(-1j * xi @ x.T)
        return OperatorMatrix(spec, scale * synthesis @ analysis)


class AmplitudeOperator:
    """The PDO of an amplitude on a fixed grid."""

    def __init__(self, amp, spec: GridSpec):
        _check_dimension(amp, spec)
        self.amp = amp
        self.spec = spec

    def __call__(self, u: GridFunction) -> GridFunction:
        return apply_amplitude_pdo(self.amp, u)

    def matrix(self) -> OperatorMatrix:
        spec = self.spec
        x = spec.coordinates()
        xi = spec.frequencies()
        scale = (2.0 * np.pi) ** (-spec.dimension) * spec.cell_volume * spec.frequency_cell
        factors = getattr(self.amp, "factors", None)
        if factors is not None:
            left, right = factors
            synthesis = np.broadcast_to(np.asarray(left(x[:, None, :], xi[None, :, :])), (spec.size, len(xi)))
            analysis = np.broadcast_to(np.asarray(right(x[None, :, :], xi[:, None, :])), (len(xi), spec.size))
            synthesis = _finite(np.exp(1j * x @ xi.T) * synthesis, "amplitude")
            analysis = _finite(np.exp(-1j * xi @ x.T) * analysis, "amplitude")
            return OperatorMatrix(spec, scale * synthesis @ analysis)
        entries = np.empty((spec.size, spec.size), dtype=complex)
        analysis = np.exp(-1j * x @ xi.T)  # (N′, M)
        for i, xr in enumerate(x):
            amplitude = _finite(np.asarray(self.amp(xr[None, None, :], x[:, None, :], xi[None, :, :])), "amplitude")
            amplitude = np.broadcast_to(amplitude, (spec.size, len(xi)))
            entries[i] = (amplitude * analysis) @ np.exp(1j * xi @ xr)
        return OperatorMatrix(spec, scale * entries)


def materialize(A, spec: GridSpec) -> OperatorMatrix:
    """Matrix of a linear operator on ``spec``.

    Operators exposing ``matrix()`` build it directly; any other callable is
    applied to the grid delta functions e_j/h^d, and each image is scaled by
    the weight h^d.
    """
    if hasattr(A, "matrix"):
        if getattr(A, "spec", spec) != spec:
            raise DomainError("operator was built on a different grid")
        return A.matrix()
    columns = np.empty((spec.size, spec.size), dtype=complex)
    for j in range(spec.size):
        delta = np.zeros(spec.size, dtype=complex)
        delta[j] = 1.0 / spec.cell_volume
        columns[:, j] = A(GridFunction(spec, delta)).values * spec.cell_volume
    logger.debug(f"materialized {spec.size} columns by delta application")
    return OperatorMatrix(spec, columns)


@dataclass(frozen=True)
class SpectrumProbe:
    operator_norm: float
    singular_values: np.ndarray

    def tail_ratio(self, k: int) -> float:
        """σ_k/σ_1 (0-based k), 0 for the zero operator."""
        if self.operator_norm == 0.0 or k >= len(self.singular_values):
            return 0.0
        return float(self.singular_values[k] / self.operator_norm)


def norm_and_spectrum_probe(M: OperatorMatrix) -> SpectrumProbe:
    """Operator norm and singular values of the L²-weighted matrix.

    With uniform weights h^d the weighted matrix W^{1/2} M W^{−1/2} equals M.

    Raises:
        SpectrumProbeError: non-finite entries or SVD failure.
    """
    weights = np.full(M.spec.size, M.spec.cell_volume)
    weighted = np.sqrt(weights)[:, None] * M.entries / np.sqrt(weights)[None, :]
    if not np.all(np.isfinite(weighted)):
        raise SpectrumProbeError("operator matrix has non-finite entries")
    try:
        sigma = linalg.svdvals(weighted)
    except (linalg.LinAlgError, ValueError) as e:
        raise SpectrumProbeError(f"singular value decomposition failed: {e}") from e
    return SpectrumProbe(float(sigma[0]) if len(sigma) else 0.0, sigma)


# ── Symbol quadratures ──


@dataclass(frozen=True)
class QuadratureBox:
    """z over a box with step dz, ζ over [−zeta_max, zeta_max]^d with step dzeta."""

    z_lower: tuple[float, ...]
    z_upper: tuple[float, ...]
    dz: float = 2.0 / 1024
    zeta_max: float = 256.0
    dzeta: float = 0.25

    def z_points(self) -> np.ndarray:
        axes = [np.arange(lo, hi + 0.5 * self.dz, self.dz) for lo, hi in zip(self.z_lower, self.z_upper)]
        return _mesh(axes)

    def zeta_points(self) -> np.ndarray:
        axis = np.arange(-self.zeta_max, self.zeta_max + 0.5 * self.dzeta, self.dzeta)
        return _mesh([axis] * len(self.z_lower))


def oscillatory_double_integral(p: Callable[[np.ndarray, np.ndarray], np.ndarray], box: QuadratureBox) -> complex:
    """(2π)^{−d} ∫∫ p(z, ζ) e^{−i⟨z,ζ⟩} dz dζ, inner sum over z first.

    ``p`` is called with z of shape (Z, 1, d) and ζ of shape (1, K, d).
    """
    z = box.z_points()
    zeta = box.zeta_points()
    d = z.shape[1]
    total = 0.0 + 0.0j
    for chunk in _row_chunks(len(zeta), len(z)):
        zc = zeta[chunk]
        values = _finite(np.asarray(p(z[:, None, :], zc[None, :, :])), "integrand")
        values = np.broadcast_to(values, (len(z), len(zc)))
        inner = np.sum(np.exp(-1j * z @ zc.T) * values, axis=0)
        total += np.sum(inner)
    return complex((2.0 * np.pi) ** (-d) * box.dz ** d * box.dzeta ** d * total)


def symbol_from_amplitude(amp, x, xi, box: QuadratureBox) -> complex:
    """a(x, ξ) = (2π)^{−d} ∫∫ 𝐚(x, x+z, ξ+ζ) e^{−i⟨z,ζ⟩} dz dζ.

    ``box`` must cover the x′-support of 𝐚 shifted by −x.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return oscillatory_double_integral(lambda z, zeta: amp(x, x + z, xi + zeta), box)


def product_symbol_quadrature(a1, a2, x, xi, box: QuadratureBox) -> complex:
    """Symbol of A₂*A₁: (2π)^{−d} ∫∫ a₁(x+z, ξ) conj(a₂(x+z, ξ+ζ)) e^{−i⟨z,ζ⟩} dz dζ."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)

    def integrand(z, zeta):
        y = x + z
        return a1(y, xi) * np.conj(a2(y, xi + zeta))

    return oscillatory_double_integral(integrand, box)


def support_box(support, x) -> QuadratureBox:
    """Quadrature box for z = x′ − x from a declared x′-support."""
    x = np.asarray(x, dtype=float)
    return QuadratureBox(tuple(support.lower - x), tuple(support.upper - x))
