import itertools
import math

import pytest

from fermicluster.errors import CapacityError
from fermicluster.trees import (
    cayley_count,
    count_trees_with_degrees,
    degree_sequences,
    enumerate_trees,
    majorant_limit,
    majorant_partial_sum,
    majorant_term,
    prufer_to_tree,
    tree_degrees,
)


def is_connected(n, edges):
    if n == 1:
        return True
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == n


def brute_force_trees(n):
    """All connected (n-1)-edge graphs, i.e. all trees, the slow way."""
    all_edges = list(itertools.combinations(range(n), 2))
    out = set()
    for subset in itertools.combinations(all_edges, n - 1):
        if is_connected(n, subset):
            out.add(frozenset(subset))
    return out


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_enumeration_matches_brute_force(n):
    trees = enumerate_trees(n)
    assert len(trees) == cayley_count(n)
    assert set(trees) == brute_force_trees(n)
    assert len(set(trees)) == len(trees)


@pytest.mark.parametrize("n", list(range(2, 8)))
def test_cayley_and_degree_sum_identity(n):
    assert cayley_count(n) == n ** (n - 2) if n > 2 else 1
    total = sum(count_trees_with_degrees(d) for d in degree_sequences(n))
    assert total == cayley_count(n)


def test_per_profile_counts_match_enumeration():
    n = 5
    by_profile = {}
    for t in enumerate_trees(n):
        by_profile.setdefault(tree_degrees(t, n), 0)
        by_profile[tree_degrees(t, n)] += 1
    for profile, count in by_profile.items():
        assert count_trees_with_degrees(profile) == count
    assert set(by_profile) == set(degree_sequences(n))


def test_prufer_star_and_path():
    # constant sequence gives the star around that vertex
    assert prufer_to_tree((2, 2), 4) == frozenset({(0, 2), (1, 2), (2, 3)})
    degrees = tree_degrees(prufer_to_tree((1, 2), 4), 4)
    assert sorted(degrees) == [1, 1, 2, 2]


def test_enumeration_capacity_guard():
    with pytest.raises(CapacityError):
        enumerate_trees(9)


def test_invalid_degree_profiles_count_zero():
    assert count_trees_with_degrees((0, 1)) == 0
    assert count_trees_with_degrees((1, 1, 1)) == 0  # sums to 3, needs 4
    assert count_trees_with_degrees((3, 1, 1, 1)) == 1  # the star
    assert count_trees_with_degrees((1, 1)) == 1


def test_majorant_terms_by_hand():
    eps = 0.07
    assert majorant_term(2, eps) == pytest.approx(eps ** 2)
    assert majorant_term(3, eps) == pytest.approx(3 * eps ** 3)
    assert majorant_term(4, eps) == pytest.approx(12 * eps ** 4)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_majorant_term_closed_form(n):
    # sum over compositions of prod d_i equals C(3n-3, 2n-1)
    eps = 0.05
    expected = eps ** n / (n - 1) * math.comb(3 * n - 3, 2 * n - 1)
    assert majorant_term(n, eps) == pytest.approx(expected, rel=1e-12)


def test_majorant_term_matches_full_enumeration():
    eps = 0.03
    for n in (3, 4, 5):
        direct = sum(
            count_trees_with_degrees(d) * math.prod(math.factorial(x) for x in d)
            for d in degree_sequences(n)
        ) * eps ** n / math.factorial(n - 1)
        assert majorant_term(n, eps) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.12])
def test_partial_sums_below_geometric_limit(eps):
    limit = majorant_limit(eps)
    previous = 0.0
    for n_max in range(2, 13):
        s = majorant_partial_sum(eps, n_max)
        assert s >= previous  # monotone in the cutoff
        assert s <= limit
        previous = s
