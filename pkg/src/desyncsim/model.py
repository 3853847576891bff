"""Hybrid model of an all-to-all network of impulse-coupled oscillators.

The state is a vector of N timers living in the box [0, threshold]^N.
During flows every timer increases at a common rate.  When a timer reaches
the threshold it fires: the firing timer resets to zero and every other
timer is rescaled by (1 + coupling), with coupling in (-1, 0) so that firing
pushes the others away from the threshold.  When several timers reach the
threshold at the same instant the reset is set-valued (each firing timer may
either reset or take the rescale branch); a :class:`BranchPolicy` selects
the branch taken in simulation.

Timer states are plain 1-D float64 numpy arrays.  Everything in this module
is a pure function over immutable values and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

DEFAULT_TOLERANCE = 1e-9


class BranchPolicy(Enum):
    """Branch selection when several timers fire simultaneously.

    ``ALL_RESET`` sends every firing timer to its reset target,
    ``LOWEST_INDEX_RESETS`` resets only the smallest firing index (the
    others take the rescale branch), and ``RANDOM`` lets each firing timer
    pick a branch independently from a seeded generator.
    """

    ALL_RESET = "all-reset"
    LOWEST_INDEX_RESETS = "lowest-index-resets"
    RANDOM = "random"


class HybridTime(NamedTuple):
    """A point (t, j) of a hybrid time domain: t seconds of flow, j jumps.

    Tuples compare lexicographically, which matches the ordering of samples
    along an arc: t is nondecreasing, and a jump keeps t fixed while j
    increments by one.
    """

    t: float
    j: int


@dataclass(frozen=True)
class OscillatorParams:
    """Network parameters: size, firing threshold, timer rate and coupling.

    ``tolerance`` is the absolute band used by every set-membership
    comparison in the package (timer at threshold, equal timers, timer at
    zero); exact real-number comparisons have no floating-point meaning.
    """

    n: int
    threshold: float
    rate: float = 1.0
    coupling: float = -0.2
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need at least 2 oscillators, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not -1.0 < self.coupling < 0.0:
            raise ValueError(f"coupling must lie strictly in (-1, 0), got {self.coupling}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


def as_state(values, n: int) -> np.ndarray:
    """Coerce ``values`` to a length-``n`` float64 timer vector."""
    state = np.asarray(values, dtype=float)
    if state.shape != (n,):
        raise ValueError(f"expected a timer vector of length {n}, got shape {state.shape}")
    if not np.all(np.isfinite(state)):
        raise ValueError("timer vector contains non-finite entries")
    return state


def _thresholds_of(params: OscillatorParams, thresholds) -> np.ndarray:
    if thresholds is None:
        return np.full(params.n, float(params.threshold))
    return as_state(thresholds, params.n)


def in_flow_set(state, params: OscillatorParams, thresholds=None) -> bool:
    """True if every timer lies inside the (possibly widened) flow box."""
    tau = as_state(state, params.n)
    top = _thresholds_of(params, thresholds)
    tol = params.tolerance
    return bool(np.all(tau >= -tol) and np.all(tau <= top + tol))


def in_jump_set(state, params: OscillatorParams, thresholds=None) -> bool:
    """True if some timer sits at its firing threshold (within tolerance)."""
    tau = as_state(state, params.n)
    top = _thresholds_of(params, thresholds)
    return bool(np.any(np.abs(tau - top) <= params.tolerance))


def in_exclusion_set(state, params: OscillatorParams) -> bool:
    """True on the measure-zero set excluded from the basin of attraction.

    A state is excluded when two timers are equal (synchronised pairs can
    stay synchronised forever) or when one timer is at zero while another is
    at the threshold (the next jump produces an equal pair).  Comparisons use
    the params tolerance.
    """
    tau = as_state(state, params.n)
    tol = params.tolerance
    ordered = np.sort(tau)
    if np.any(np.diff(ordered) <= tol):
        return True
    at_zero = np.any(np.abs(tau) <= tol)
    at_top = np.any(np.abs(tau - params.threshold) <= tol)
    return bool(at_zero and at_top)


def rank_order(state) -> tuple[int, ...]:
    """Oscillator indices sorted by decreasing timer value (stable on ties)."""
    tau = np.asarray(state, dtype=float)
    return tuple(int(i) for i in np.argsort(-tau, kind="stable"))


def reset_mask(at_threshold: np.ndarray, policy: BranchPolicy, rng=None) -> np.ndarray:
    """Boolean mask of the timers that take the reset branch at a jump.

    With a single firing timer every policy resets it; the policies only
    differ when ``at_threshold`` marks two or more timers.
    """
    idx = np.flatnonzero(at_threshold)
    if idx.size == 0:
        raise ValueError("no timer is at its threshold; the jump map is undefined here")
    mask = np.zeros(at_threshold.shape, dtype=bool)
    if idx.size == 1 or policy is BranchPolicy.ALL_RESET:
        mask[idx] = True
    elif policy is BranchPolicy.LOWEST_INDEX_RESETS:
        mask[idx[0]] = True
    elif policy is BranchPolicy.RANDOM:
        if rng is None:
            raise ValueError("the random branch policy needs a seeded generator")
        mask[idx] = rng.random(idx.size) < 0.5
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown branch policy {policy!r}")
    return mask


def apply_jump(
    state: np.ndarray,
    at_threshold: np.ndarray,
    reset_targets: np.ndarray,
    rescale_factors: np.ndarray,
    policy: BranchPolicy,
    rng=None,
) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    """Apply one jump given per-timer reset targets and rescale factors.

    Returns ``(post_state, triggered, fired)`` where ``triggered`` are the
    indices at threshold and ``fired`` the subset that took the reset branch.
    """
    mask = reset_mask(at_threshold, policy, rng)
    post = state * rescale_factors
    post[mask] = reset_targets[mask]
    triggered = tuple(int(i) for i in np.flatnonzero(at_threshold))
    fired = tuple(int(i) for i in np.flatnonzero(mask))
    return post, triggered, fired


def jump_map(
    state,
    params: OscillatorParams,
    policy: BranchPolicy = BranchPolicy.LOWEST_INDEX_RESETS,
    rng=None,
) -> np.ndarray:
    """Nominal jump map: firing timers reset to 0, the rest rescale.

    Requires the state to be in the jump set; off the exclusion set the map
    is single-valued and the policy is irrelevant.
    """
    tau = as_state(state, params.n)
    top = _thresholds_of(params, None)
    at_thr = np.abs(tau - top) <= params.tolerance
    if not at_thr.any():
        raise ValueError("jump_map called off the jump set (no timer at threshold)")
    factors = np.full(params.n, 1.0 + params.coupling)
    post, _, _ = apply_jump(tau, at_thr, np.zeros(params.n), factors, policy, rng)
    return post
