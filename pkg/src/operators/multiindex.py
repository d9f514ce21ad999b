"""Multi-index enumeration and the combinatorics behind derivative oracles."""

import math
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Iterator, Sequence

from operators.errors import RangeError

MultiIndex = tuple[int, ...]

MAX_FACTORIAL_ORDER = 12


def zero_index(d: int) -> MultiIndex:
    return (0,) * d


def unit_index(d: int, k: int) -> MultiIndex:
    return tuple(1 if i == k else 0 for i in range(d))


def order(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def multi_indices(d: int, n: int) -> list[MultiIndex]:
    """All multi-indices of length ``d`` with ``|α| = n``, lexicographically sorted."""
    found = set()
    for combo in combinations_with_replacement(range(d), n):
        counts = [0] * d
        for axis in combo:
            counts[axis] += 1
        found.add(tuple(counts))
    return sorted(found)


def graded_multi_indices(d: int, max_order: int) -> list[MultiIndex]:
    """Multi-indices with ``|α| <= max_order`` in graded lexicographic order."""
    result = []
    for n in range(max_order + 1):
        result.extend(multi_indices(d, n))
    return result


def factorial(alpha: Sequence[int]) -> int:
    """Exact α! = α₁!···α_d! in integer arithmetic."""
    if order(alpha) > MAX_FACTORIAL_ORDER:
        raise RangeError(f"factorial requested for |α| = {order(alpha)} > {MAX_FACTORIAL_ORDER}")
    return math.prod(math.factorial(a) for a in alpha)


def index_list(alpha: Sequence[int]) -> list[int]:
    """Flatten α into the sorted list of axes, e.g. (2, 1) -> [0, 0, 1]."""
    axes = []
    for axis, count in enumerate(alpha):
        axes.extend([axis] * count)
    return axes


def counts_from_axes(axes: Sequence[int], d: int) -> MultiIndex:
    counts = [0] * d
    for axis in axes:
        counts[axis] += 1
    return tuple(counts)


def sub_indices(alpha: Sequence[int]) -> Iterator[tuple[MultiIndex, int]]:
    """Yield (γ, C(α, γ)) for every γ <= α componentwise."""
    ranges = [range(a + 1) for a in alpha]
    for gamma in product(*ranges):
        coeff = math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))
        yield tuple(gamma), coeff


def subtract(alpha: Sequence[int], gamma: Sequence[int]) -> MultiIndex:
    return tuple(a - g for a, g in zip(alpha, gamma))


def add(alpha: Sequence[int], gamma: Sequence[int]) -> MultiIndex:
    return tuple(a + g for a, g in zip(alpha, gamma))


@lru_cache(maxsize=None)
def set_partitions(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All set partitions of ``{0..n-1}`` as tuples of sorted blocks."""
    if n == 0:
        return ((),)
    result = []
    for partition in set_partitions(n - 1):
        last = n - 1
        # new element joins an existing block
        for i in range(len(partition)):
            blocks = list(partition)
            blocks[i] = blocks[i] + (last,)
            result.append(tuple(blocks))
        # or opens its own block
        result.append(partition + ((last,),))
    return tuple(result)


def falling_factorial(x: float, k: int) -> float:
    """x (x-1) ... (x-k+1); equals 1 for k = 0."""
    value = 1.0
    for j in range(k):
        value *= x - j
    return value


def partial_bell(n: int, k: int, x: Sequence) -> object:
    """Partial Bell polynomial B_{n,k}(x_1, ..., x_{n-k+1}).

    ``x[i]`` holds x_{i+1}; entries may be numpy arrays.
    """
    table = {(0, 0): 1.0}

    def bell(nn: int, kk: int):
        if (nn, kk) in table:
            return table[(nn, kk)]
        if nn == 0 or kk == 0:
            value = 0.0
        else:
            value = 0.0
            for i in range(1, nn - kk + 2):
                value = value + math.comb(nn - 1, i - 1) * x[i - 1] * bell(nn - i, kk - 1)
        table[(nn, kk)] = value
        return value

    return bell(n, k)


def compose_derivative(outer: Sequence, inner: Sequence, n: int):
    """n-th derivative of F(s(q)) by Faà di Bruno.

    Args:
        outer: outer[j] = F^{(j)}(s) for j = 0..n
        inner: inner[i] = s^{(i+1)}(q) for i = 0..n-1
        n: derivative order

    Returns:
        d^n/dq^n F(s(q)), broadcasting over array entries.
    """
    if n == 0:
        return outer[0]
    total = 0.0
    for k in range(1, n + 1):
        total = total + outer[k] * partial_bell(n, k, inner)
    return total
