"""Perturbation families for heterogeneous networks.

Four concrete ways the nominal data can be off, each described by one
per-oscillator magnitude vector:

* ``threshold``: oscillator i fires at threshold + rho_i (flow box widens),
* ``reset-offset``: a firing timer lands on rho_i instead of 0,
* ``bump``: the rescale factor becomes 1 + (coupling + rho_i),
* ``flow-rate``: timer i runs at rate + delta_i.

Exactly one kind is active per run; zero magnitudes of any kind reproduce
the nominal system bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import BranchPolicy, OscillatorParams, apply_jump, as_state


class PerturbationKind(Enum):
    NONE = "none"
    THRESHOLD = "threshold"
    RESET_OFFSET = "reset-offset"
    BUMP = "bump"
    FLOW_RATE = "flow-rate"


@dataclass(frozen=True)
class PerturbationSpec:
    """Which perturbation family is active, with per-oscillator magnitudes.

    Magnitudes are stored as a tuple so specs are hashable and compare by
    value; ``NONE`` takes an empty tuple.
    """

    kind: PerturbationKind = PerturbationKind.NONE
    magnitudes: tuple[float, ...] = ()

    def magnitude_array(self, n: int) -> np.ndarray:
        if self.kind is PerturbationKind.NONE and len(self.magnitudes) == 0:
            return np.zeros(n)
        return as_state(self.magnitudes, n)


NOMINAL = PerturbationSpec()


def validate_spec(spec: PerturbationSpec, params: OscillatorParams) -> None:
    """Check the magnitude vector against the active kind's admissible range."""
    if spec.kind is PerturbationKind.NONE:
        if len(spec.magnitudes) not in (0, params.n):
            raise ValueError("a 'none' perturbation takes no magnitudes")
        if len(spec.magnitudes) and any(m != 0.0 for m in spec.magnitudes):
            raise ValueError("a 'none' perturbation must have zero magnitudes")
        return
    mags = spec.magnitude_array(params.n)
    if spec.kind is PerturbationKind.THRESHOLD:
        if np.any(mags < 0):
            raise ValueError("threshold offsets must be nonnegative")
    elif spec.kind is PerturbationKind.RESET_OFFSET:
        if np.any(mags < 0) or np.any(mags >= params.threshold):
            raise ValueError("reset offsets must lie in [0, threshold)")
    elif spec.kind is PerturbationKind.BUMP:
        # zero is admitted so a zero-magnitude bump degenerates to nominal
        if np.any(mags < 0) or np.any(mags >= abs(params.coupling)):
            raise ValueError("bump magnitudes must lie in [0, |coupling|)")
    elif spec.kind is PerturbationKind.FLOW_RATE:
        if np.any(params.rate + mags <= 0):
            raise ValueError("perturbed rates must stay positive")


def effective_thresholds(spec: PerturbationSpec, params: OscillatorParams) -> np.ndarray:
    """Per-oscillator firing thresholds; widened only by the threshold kind."""
    base = np.full(params.n, float(params.threshold))
    if spec.kind is PerturbationKind.THRESHOLD:
        return base + spec.magnitude_array(params.n)
    return base


def effective_rates(spec: PerturbationSpec, params: OscillatorParams) -> np.ndarray:
    """Per-oscillator timer rates; offset only by the flow-rate kind."""
    base = np.full(params.n, float(params.rate))
    if spec.kind is PerturbationKind.FLOW_RATE:
        rates = base + spec.magnitude_array(params.n)
        if np.any(rates <= 0):
            raise ValueError("perturbed rates must stay positive")
        return rates
    return base


def jump_outcome(
    state,
    spec: PerturbationSpec,
    params: OscillatorParams,
    policy: BranchPolicy = BranchPolicy.LOWEST_INDEX_RESETS,
    rng=None,
    thresholds: np.ndarray | None = None,
) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    """One jump under the active perturbation.

    Returns ``(post_state, triggered, fired)``; ``triggered`` are the timers
    at their effective threshold, ``fired`` the subset that reset.
    """
    tau = as_state(state, params.n)
    if thresholds is None:
        thresholds = effective_thresholds(spec, params)
    at_thr = np.abs(tau - thresholds) <= params.tolerance
    if not at_thr.any():
        raise ValueError("jump requested off the jump set (no timer at its threshold)")
    n = params.n
    reset_targets = np.zeros(n)
    if spec.kind is PerturbationKind.RESET_OFFSET:
        reset_targets = spec.magnitude_array(n)
    if spec.kind is PerturbationKind.BUMP:
        # 1 + (coupling + rho) keeps a uniform bump bit-compatible with a
        # nominal system whose coupling is coupling + rho
        factors = 1.0 + (params.coupling + spec.magnitude_array(n))
    else:
        factors = np.full(n, 1.0 + params.coupling)
    return apply_jump(tau, at_thr, reset_targets, factors, policy, rng)


def perturbed_jump(
    state,
    spec: PerturbationSpec,
    params: OscillatorParams,
    policy: BranchPolicy = BranchPolicy.LOWEST_INDEX_RESETS,
    rng=None,
) -> np.ndarray:
    """Post-jump state under the active perturbation (see :func:`jump_outcome`)."""
    post, _, _ = jump_outcome(state, spec, params, policy, rng)
    return post
