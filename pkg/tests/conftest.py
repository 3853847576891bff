"""Shared test fixtures and independent oracles.

The oracle functions below deliberately re-derive everything in plain
Python (no package imports): sorted anchors via the geometric ratio, the
point-to-line distance via explicit mean removal, and the set distance via
full permutation enumeration.  Library results are checked against these,
never against themselves.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest


def oracle_sorted_anchor(n: int, eps: float, tau: float) -> list[float]:
    """Sorted anchor via the geometric ratio ((1+eps)^(n-k+1) - 1)/((1+eps)^n - 1)."""
    x = 1.0 + eps
    return [(x ** (n - k + 1) - 1.0) / (x**n - 1.0) * tau for k in range(1, n + 1)]


def oracle_distance(state, anchor) -> float:
    """Centered-difference norm, written out long-hand."""
    d = [a - s for a, s in zip(anchor, state)]
    m = sum(d) / len(d)
    return math.sqrt(sum((di - m) ** 2 for di in d))


def oracle_v(state, n: int, eps: float, tau: float) -> float:
    """Set distance by brute-force enumeration of all n! anchor orderings."""
    ts = oracle_sorted_anchor(n, eps, tau)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        anchor = [0.0] * n
        for rank, pos in enumerate(perm):
            anchor[pos] = ts[rank]
        best = min(best, oracle_distance(state, anchor))
    return best


def brute_geometric_sum(x: float, m: int, n: int) -> float:
    return sum(x**i for i in range(m, n))


def brute_double_geometric_sum(x: float, m: int, big_n: int) -> float:
    return sum(sum(x**i for i in range(0, big_n - k + 1)) for k in range(m, big_n + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
