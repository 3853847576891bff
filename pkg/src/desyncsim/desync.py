"""Construction of the desynchronization set and distances to it.

The network is desynchronized when consecutive firings are equally spaced
in time.  In state space that behaviour lives on a union of N! line
segments, one per firing order, each parallel to the all-ones direction and
anchored at the point where the line meets the jump set.  The anchor sorted
into decreasing order solves a small linear system whose matrix depends
only on the coupling, so the whole family is one solve plus permutation
unsorting.

The distance used throughout is the distance to the *extended* lines (the
lines continued outside the timer box): it is constant along flows, while
the distance to the clipped segments is not.  ``lyapunov_v`` is the minimum
of those line distances; it contracts by a factor (1 + coupling) at every
jump taken off the exclusion set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .model import OscillatorParams, as_state, jump_map

MAX_ENUMERATED_N = 8


@lru_cache(maxsize=MAX_ENUMERATED_N)
def _permutations_of(n: int) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """All permutations of range(n), lexicographic, plus their index matrix."""
    perms = tuple(itertools.permutations(range(n)))
    idx = np.array(perms)
    idx.setflags(write=False)
    return perms, idx


class CapacityError(ValueError):
    """Raised when full N! enumeration is requested above the size cap."""


@dataclass(frozen=True, eq=False)
class AnchorPoint:
    """One anchor: the point where a desynchronization line meets the jump set.

    ``permutation[r]`` is the oscillator index holding the rank-r value, so
    coords[permutation[0]] equals the threshold and the coords are strictly
    decreasing along the stored permutation.
    """

    coords: np.ndarray
    permutation: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class DesyncSet:
    """All N! anchors of a network, stacked as one coordinate matrix.

    Built once by :func:`enumerate_anchors` and shared read-only; ``matrix``
    has one anchor per row, in lexicographic permutation order.  The
    :class:`AnchorPoint` view is materialised lazily: distance evaluation
    only ever touches the matrix.
    """

    params: OscillatorParams
    matrix: np.ndarray

    @cached_property
    def anchors(self) -> tuple[AnchorPoint, ...]:
        perms, _ = _permutations_of(self.params.n)
        return tuple(
            AnchorPoint(coords=self.matrix[k], permutation=perm)
            for k, perm in enumerate(perms)
        )

    def __len__(self) -> int:
        return self.matrix.shape[0]


def gamma_matrix(params: OscillatorParams) -> np.ndarray:
    """Coefficient matrix of the sorted-anchor linear system.

    Row 1 pins the leading entry to the threshold; row 2 balances the gap to
    the second timer against its post-jump rescale; the remaining rows carry
    (1 + coupling) in column 2, 1 on the diagonal and -(1 + coupling) on the
    superdiagonal (absent in the last row).
    """
    n, eps = params.n, params.coupling
    g = np.zeros((n, n))
    g[0, 0] = 1.0
    g[1, 1] = 2.0 + eps
    if n > 2:
        g[1, 2] = -(1.0 + eps)
    for row in range(2, n):
        g[row, 1] = 1.0 + eps
        g[row, row] = 1.0
        if row + 1 < n:
            g[row, row + 1] = -(1.0 + eps)
    return g


def solve_sorted_anchor_elimination(params: OscillatorParams) -> np.ndarray:
    """Solve the sorted-anchor system by Gaussian elimination.

    Returns the anchor sorted into decreasing order; the first entry is the
    threshold.  The system is nonsingular for every coupling in (-1, 0).
    """
    gamma = gamma_matrix(params)
    rhs = np.full(params.n, float(params.threshold))
    tau_s = np.linalg.solve(gamma, rhs)
    assert np.all(np.isfinite(tau_s)), "anchor solve produced non-finite entries"
    assert abs(tau_s[0] - params.threshold) <= 1e-12 * params.threshold
    assert np.all(np.diff(tau_s) < 0), "sorted anchor must be strictly decreasing"
    return tau_s


def solve_sorted_anchor_closed_form(params: OscillatorParams) -> np.ndarray:
    """Closed-form sorted anchor: ratios of partial geometric sums.

    Entry k (1-based) is threshold * sum_{i=0}^{n-k} (1+coupling)^i divided
    by sum_{i=0}^{n-1} (1+coupling)^i, evaluated as literal partial sums.
    """
    n = params.n
    powers = (1.0 + params.coupling) ** np.arange(n)
    partial = np.cumsum(powers)
    return params.threshold * partial[::-1] / partial[-1]


def enumerate_anchors(params: OscillatorParams) -> DesyncSet:
    """Build the full desynchronization set: one anchor per permutation.

    Permutations are enumerated in lexicographic order.  Above
    ``MAX_ENUMERATED_N`` the factorial count is impractical; use
    :func:`lyapunov_v_fast`, which needs no enumeration.
    """
    n = params.n
    if n > MAX_ENUMERATED_N:
        raise CapacityError(
            f"full enumeration needs {n}! anchors; capped at n={MAX_ENUMERATED_N}. "
            "Use lyapunov_v_fast for the distance instead."
        )
    tau_s = solve_sorted_anchor_elimination(params)
    _, idx = _permutations_of(n)
    matrix = np.empty((idx.shape[0], n))
    matrix[np.arange(idx.shape[0])[:, None], idx] = tau_s[None, :]
    matrix.setflags(write=False)
    return DesyncSet(params=params, matrix=matrix)


def _coords_of(anchor) -> np.ndarray:
    if isinstance(anchor, AnchorPoint):
        return anchor.coords
    return np.asarray(anchor, dtype=float)


def distance_to_line(state, anchor) -> float:
    """Distance from a state to the extended line through an anchor.

    The line runs through the anchor in the all-ones direction, so the
    distance is the norm of the anchor-to-state difference with its mean
    component removed; it is invariant under shifting the state along the
    all-ones direction.
    """
    coords = _coords_of(anchor)
    tau = np.asarray(state, dtype=float)
    if tau.shape != coords.shape:
        raise ValueError(f"state shape {tau.shape} does not match anchor shape {coords.shape}")
    diff = coords - tau
    resid = diff - diff.mean()
    return float(np.linalg.norm(resid))


def lyapunov_v(state, dset: DesyncSet) -> float:
    """Minimum distance from a state to the extended desynchronization lines."""
    tau = as_state(state, dset.params.n)
    diffs = dset.matrix - tau
    resid = diffs - diffs.mean(axis=1, keepdims=True)
    return float(np.sqrt((resid * resid).sum(axis=1)).min())


def lyapunov_v_many(states, dset: DesyncSet) -> np.ndarray:
    """Vectorised :func:`lyapunov_v` over rows of an (M, N) state array."""
    tau = np.atleast_2d(np.asarray(states, dtype=float))
    diffs = dset.matrix[None, :, :] - tau[:, None, :]
    resid = diffs - diffs.mean(axis=2, keepdims=True)
    return np.sqrt((resid * resid).sum(axis=2)).min(axis=1)


def lyapunov_v_fast(state, params: OscillatorParams) -> float:
    """Distance to the desynchronization lines without N! enumeration.

    Pairs the sorted state with the sorted anchor under the state's own rank
    order, cycling the leader assignment over the N rotations and taking the
    smallest distance.  Agrees with :func:`lyapunov_v` wherever both are
    defined.
    """
    tau = as_state(state, params.n)
    tau_s = solve_sorted_anchor_closed_form(params)
    order = np.argsort(-tau, kind="stable")
    best = np.inf
    coords = np.empty(params.n)
    for r in range(params.n):
        coords[np.roll(order, r)] = tau_s
        best = min(best, distance_to_line(tau, coords))
    return float(best)


def desync_condition_residual(anchor, params: OscillatorParams) -> float:
    """How far an anchor is from the equal-spacing condition that defines it.

    At a valid anchor the gap between the firing timer and each other timer
    equals the post-jump gap between the next firing timer and the cyclic
    successor.  Returns the largest absolute violation; exact anchors give
    values at rounding level.
    """
    coords = _coords_of(anchor)
    n = params.n
    order = np.argsort(-coords, kind="stable")
    post = jump_map(coords, params)
    residual = 0.0
    for rank in range(1, n):
        nxt = rank + 1 if rank + 1 < n else 0
        lhs = coords[order[0]] - coords[order[rank]]
        rhs = post[order[1]] - post[order[nxt]]
        residual = max(residual, abs(lhs - rhs))
    return residual


def desync_condition_residuals(dset: DesyncSet) -> np.ndarray:
    """Vectorised equal-spacing residuals, one per anchor of the set."""
    params = dset.params
    mat = dset.matrix
    n = params.n
    order = np.argsort(-mat, axis=1, kind="stable")
    post = (1.0 + params.coupling) * mat
    rows = np.arange(mat.shape[0])
    post[rows, order[:, 0]] = 0.0
    lead = np.take_along_axis(mat, order[:, :1], axis=1)
    lhs = lead - np.take_along_axis(mat, order[:, 1:], axis=1)
    post_sorted = np.take_along_axis(post, order, axis=1)
    nxt = np.concatenate([post_sorted[:, 2:], post_sorted[:, :1]], axis=1)
    rhs = post_sorted[:, 1:2] - nxt
    return np.abs(lhs - rhs).max(axis=1)
