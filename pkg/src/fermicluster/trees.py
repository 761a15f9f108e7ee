"""Labelled-tree enumeration and the degree-sequence majorant.

Trees on vertices 0..n-1 are represented as frozensets of sorted edge
pairs.  Enumeration goes through Prufer sequences, so the Cayley count
n^(n-2) holds by construction; degree-sequence counting gives the same
total through the multinomial identity and is checked in the tests.
"""

from __future__ import annotations

import math
from itertools import product
from typing import Iterable, Iterator

from .errors import CapacityError

Edge = tuple[int, int]
TreeEdges = frozenset[Edge]

#: Largest vertex count for explicit enumeration (8^6 = 262144 trees).
MAX_ENUMERATION_VERTICES = 8


def cayley_count(n: int) -> int:
    """Number of labelled trees on n vertices."""
    if n < 1:
        raise ValueError("need at least one vertex")
    if n <= 2:
        return 1
    return n ** (n - 2)


def prufer_to_tree(seq: tuple[int, ...], n: int) -> TreeEdges:
    """Decode a Prufer sequence of length n-2 into its labelled tree."""
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[leaf] -= 1
        degree[v] -= 1
    last = [v for v in range(n) if degree[v] == 1]
    edges.append((last[0], last[1]))
    return frozenset(edges)


def enumerate_trees(n: int) -> list[TreeEdges]:
    """All labelled trees on vertices 0..n-1."""
    if n > MAX_ENUMERATION_VERTICES:
        raise CapacityError(f"refusing to enumerate {cayley_count(n)} trees on {n} vertices")
    if n == 1:
        return [frozenset()]
    if n == 2:
        return [frozenset({(0, 1)})]
    return [prufer_to_tree(seq, n) for seq in product(range(n), repeat=n - 2)]


def tree_degrees(edges: TreeEdges, n: int) -> tuple[int, ...]:
    deg = [0] * n
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return tuple(deg)


def degree_sequences(n: int) -> Iterator[tuple[int, ...]]:
    """All (d_1..d_n) with d_i >= 1 summing to 2(n-1): tree degree profiles."""
    if n == 1:
        yield (0,)
        return
    target = 2 * (n - 1)

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            if 1 <= remaining:
                yield tuple(prefix + [remaining])
            return
        # leave at least 1 per remaining slot
        for d in range(1, remaining - (slots - 1) + 1):
            yield from rec(prefix + [d], remaining - d, slots - 1)

    yield from rec([], target, n)


def count_trees_with_degrees(degrees: Iterable[int]) -> int:
    """Number of labelled trees with the given degree sequence.

    Multinomial (n-2)! / prod (d_i - 1)!; zero for impossible profiles.
    """
    degrees = tuple(degrees)
    n = len(degrees)
    if n == 1:
        return 1 if degrees == (0,) else 0
    if any(d < 1 for d in degrees) or sum(degrees) != 2 * (n - 1):
        return 0
    count = math.factorial(n - 2)
    for d in degrees:
        count //= math.factorial(d - 1)
    return count


def _fixed_length_partitions(total: int, length: int, smallest: int = 1) -> Iterator[tuple[int, ...]]:
    """Nondecreasing tuples of ``length`` parts >= smallest summing to total."""
    if length == 1:
        if total >= smallest:
            yield (total,)
        return
    for first in range(smallest, total // length + 1):
        for rest in _fixed_length_partitions(total - first, length - 1, first):
            yield (first,) + rest


def majorant_term(n: int, eps: float) -> float:
    """Order-n contribution to the tree-sum majorant.

    eps^n / (n-1)! times the sum over degree sequences of
    (number of trees with that profile) * prod d_i!.  Degree sequences
    are grouped by partition so large n stays cheap.
    """
    if n < 2:
        raise ValueError("terms start at two vertices")
    total = 0
    for part in _fixed_length_partitions(2 * (n - 1), n):
        mults: dict[int, int] = {}
        for d in part:
            mults[d] = mults.get(d, 0) + 1
        arrangements = math.factorial(n)
        for m in mults.values():
            arrangements //= math.factorial(m)
        weight = count_trees_with_degrees(part)
        for d in part:
            weight *= math.factorial(d)
        total += arrangements * weight
    return (eps ** n) * total / math.factorial(n - 1)


def majorant_partial_sum(eps: float, n_max: int) -> float:
    """eps plus the order-2..n_max majorant terms."""
    return eps + sum(majorant_term(n, eps) for n in range(2, n_max + 1))


def majorant_limit(eps: float) -> float:
    """Geometric closed form eps / (1 - 8 eps) that dominates every partial sum."""
    if eps >= 0.125:
        raise ValueError("closed form needs eps < 1/8")
    return eps / (1 - 8 * eps)
