"""
Graded symmetric multi-index spaces M_n^{(d)} with annihilation T and creation S.

A SymTensor of degree n stores one real coefficient per sorted index tuple
i₁ ≤ … ≤ i_n over {0..d−1}.  T contracts the last index with t, S multiplies
symmetrically by t, and TS = ‖t‖²I + ST.  solve_R gives the right inverse of
T_n through the finite alternating series in S and T.
"""

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Sequence

import numpy as np

from operators.errors import ConditioningError, DomainError, RangeError

MAX_FOCK_BOUND = 16
MIN_DIRECTION_NORM = 1e-12


def dim_M(n: int, d: int) -> int:
    """Dimension (n+d−1)! / (n!(d−1)!) of M_n^{(d)}.

    Raises:
        DomainError: n < 0 or d < 1.
        RangeError: n or d above 16.
    """
    if n < 0 or d < 1:
        raise DomainError(f"dim_M needs n >= 0 and d >= 1, got n={n}, d={d}")
    if n > MAX_FOCK_BOUND or d > MAX_FOCK_BOUND:
        raise RangeError(f"dim_M supports n, d <= {MAX_FOCK_BOUND}, got n={n}, d={d}")
    return math.comb(n + d - 1, n)


@lru_cache(maxsize=None)
def sorted_indices(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    dim_M(n, d)
    return tuple(combinations_with_replacement(range(d), n))


@lru_cache(maxsize=None)
def index_positions(n: int, d: int) -> dict:
    return {idx: pos for pos, idx in enumerate(sorted_indices(n, d))}


@lru_cache(maxsize=None)
def _contraction_table(n: int, d: int) -> np.ndarray:
    """table[b, k] = position of sorted(β + (k,)) in degree n for β of degree n−1."""
    positions = index_positions(n, d)
    lower = sorted_indices(n - 1, d)
    table = np.empty((len(lower), d), dtype=int)
    for b, beta in enumerate(lower):
        for k in range(d):
            table[b, k] = positions[tuple(sorted(beta + (k,)))]
    return table


@lru_cache(maxsize=None)
def _creation_table(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """For each degree-(n+1) index: positions of the n+1 reduced indices and the removed axes."""
    positions = index_positions(n, d)
    upper = sorted_indices(n + 1, d)
    reduced = np.empty((len(upper), n + 1), dtype=int)
    removed = np.empty((len(upper), n + 1), dtype=int)
    for u, idx in enumerate(upper):
        for j in range(n + 1):
            reduced[u, j] = positions[idx[:j] + idx[j + 1:]]
            removed[u, j] = idx[j]
    return reduced, removed


@dataclass(frozen=True)
class SymTensor:
    """Element of M_n^{(d)}; ``values`` follows the order of ``sorted_indices(n, d)``."""

    degree: int
    dimension: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        expected = dim_M(self.degree, self.dimension)
        if values.size != expected:
            raise DomainError(
                f"M_{self.degree}^({self.dimension}) has {expected} coefficients, got {values.size}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n: int, d: int) -> "SymTensor":
        return cls(n, d, np.zeros(dim_M(n, d)))

    @classmethod
    def random(cls, n: int, d: int, rng: np.random.Generator) -> "SymTensor":
        return cls(n, d, rng.standard_normal(dim_M(n, d)))

    @classmethod
    def from_function(cls, n: int, d: int, func) -> "SymTensor":
        return cls(n, d, np.array([func(idx) for idx in sorted_indices(n, d)], dtype=float))

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return sorted_indices(self.degree, self.dimension)

    def __getitem__(self, index: Sequence[int]) -> float:
        key = tuple(sorted(int(i) for i in index))
        if len(key) != self.degree:
            raise DomainError(f"index of length {len(key)} for a degree-{self.degree} tensor")
        return float(self.values[index_positions(self.degree, self.dimension)[key]])

    def __add__(self, other: "SymTensor") -> "SymTensor":
        _check_same_space(self, other)
        return SymTensor(self.degree, self.dimension, self.values + other.values)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        _check_same_space(self, other)
        return SymTensor(self.degree, self.dimension, self.values - other.values)

    def scale(self, factor: float) -> "SymTensor":
        return SymTensor(self.degree, self.dimension, factor * self.values)

    def norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "value"])
            for idx, value in zip(self.indices, self.values):
                writer.writerow([" ".join(str(i) for i in idx), f"{value:.12e}"])

    @classmethod
    def from_csv(cls, path: Path, n: int, d: int) -> "SymTensor":
        positions = index_positions(n, d)
        values = np.zeros(dim_M(n, d))
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = tuple(sorted(int(i) for i in row["index"].split())) if row["index"] else ()
                values[positions[key]] = float(row["value"])
        return cls(n, d, values)


def _check_same_space(a: SymTensor, b: SymTensor) -> None:
    if a.degree != b.degree or a.dimension != b.dimension:
        raise DomainError(
            f"tensors live in different spaces: M_{a.degree}^({a.dimension}) vs M_{b.degree}^({b.dimension})"
        )


def direction_vector(t: Sequence[float]) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    if float(np.dot(t, t)) == 0.0:
        raise ConditioningError("direction vector t must have nonzero norm")
    return t


def _check_direction(psi: SymTensor, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.size != psi.dimension:
        raise DomainError(f"direction of length {t.size} for dimension {psi.dimension}")
    return t


def apply_T(psi: SymTensor, t: Sequence[float]) -> SymTensor:
    """(T Ψ)_β = Σ_k ψ_{β,k} t_k.

    Raises:
        DomainError: degree-0 input or dimension mismatch.
    """
    if psi.degree == 0:
        raise DomainError("T is not defined on degree 0")
    t = _check_direction(psi, t)
    table = _contraction_table(psi.degree, psi.dimension)
    return SymTensor(psi.degree - 1, psi.dimension, psi.values[table] @ t)


def apply_S(psi: SymTensor, t: Sequence[float]) -> SymTensor:
    """(S Ψ)_{i₁…i_{n+1}} = Σ_j ψ_{i₁…î_j…i_{n+1}} t_{i_j}, the symmetrized product."""
    t = _check_direction(psi, t)
    reduced, removed = _creation_table(psi.degree, psi.dimension)
    values = np.sum(psi.values[reduced] * t[removed], axis=1)
    return SymTensor(psi.degree + 1, psi.dimension, values)


def solve_R(F: SymTensor, t: Sequence[float]) -> SymTensor:
    """Right inverse of T_n applied to F ∈ M_{n−1}: T_n(R F) = F.

    Ψ = Σ_{k=1..n} (−1)^{k+1} (k!)^{−1} ‖t‖^{−2k} S^k T^{k−1} F.

    Raises:
        ConditioningError: ‖t‖ below 1e−12.
    """
    t = _check_direction(F, t)
    norm_sq = float(np.dot(t, t))
    if math.sqrt(norm_sq) < MIN_DIRECTION_NORM:
        raise ConditioningError(f"‖t‖ = {math.sqrt(norm_sq):.3e} is below {MIN_DIRECTION_NORM}")
    n = F.degree + 1
    result = SymTensor.zeros(n, F.dimension)
    lowered = F
    for k in range(1, n + 1):
        if k > 1:
            lowered = apply_T(lowered, t)
        raised = lowered
        for _ in range(k):
            raised = apply_S(raised, t)
        coeff = (-1) ** (k + 1) / (math.factorial(k) * norm_sq ** k)
        result = result + raised.scale(coeff)
    return result
