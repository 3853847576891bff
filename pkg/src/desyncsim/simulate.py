"""Event-driven simulation of the oscillator network.

Flows are affine (constant rates), so the time of the next firing is exact
up to floating point and no ODE stepper is involved: a simulation
alternates closed-form flow segments with jump applications.  Arcs are
parameterised by hybrid time (t, j); a jump produces two samples with equal
t and j differing by one.

Runs are deterministic: the same parameters, perturbation, initial state,
stop criteria, policy and seed reproduce an arc bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .desync import DesyncSet, lyapunov_v_fast, lyapunov_v_many
from .model import (
    BranchPolicy,
    HybridTime,
    OscillatorParams,
    as_state,
    in_exclusion_set,
)
from .perturb import (
    NOMINAL,
    PerturbationSpec,
    effective_rates,
    effective_thresholds,
    jump_outcome,
    validate_spec,
)

AUTO_SAMPLING = "auto"


class ZenoError(RuntimeError):
    """Raised when jumps chain with no flow in between beyond the guard limit."""


@dataclass(frozen=True)
class StopCriteria:
    """Truncation of a (formally never-ending) solution: flow-time and/or jump caps."""

    max_flow_time: float | None = None
    max_jumps: int | None = None

    def __post_init__(self) -> None:
        if self.max_flow_time is None and self.max_jumps is None:
            raise ValueError("at least one of max_flow_time and max_jumps must be set")
        if self.max_flow_time is not None and not self.max_flow_time > 0:
            raise ValueError(f"max_flow_time must be positive, got {self.max_flow_time}")
        if self.max_jumps is not None and not self.max_jumps >= 1:
            raise ValueError(f"max_jumps must be at least 1, got {self.max_jumps}")


@dataclass(frozen=True, eq=False)
class JumpRecord:
    """One jump: when it happened, who triggered it, who reset, and the states."""

    time: HybridTime
    triggered: tuple[int, ...]
    fired: tuple[int, ...]
    pre_state: np.ndarray
    post_state: np.ndarray


@dataclass(frozen=True, eq=False)
class HybridArc:
    """A simulated solution: samples on a hybrid time domain plus jump records.

    ``t``, ``j`` and ``states`` are parallel arrays (one row per sample).
    Within a fixed j the times are nondecreasing; each jump contributes two
    samples with equal t and j differing by one.
    """

    t: np.ndarray
    j: np.ndarray
    states: np.ndarray
    jumps: tuple[JumpRecord, ...]

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]

    @property
    def n_oscillators(self) -> int:
        return self.states.shape[1]

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def initial_state(self) -> np.ndarray:
        return self.states[0]

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def segment_slices(self) -> list[tuple[int, slice]]:
        """(jump count, sample slice) for each maximal constant-j run."""
        out: list[tuple[int, slice]] = []
        start = 0
        for k in range(1, self.n_samples + 1):
            if k == self.n_samples or self.j[k] != self.j[start]:
                out.append((int(self.j[start]), slice(start, k)))
                start = k
        return out


def time_to_next_jump(state, rates, thresholds, tol: float = 1e-9) -> tuple[float, tuple[int, ...]]:
    """Exact flow time until some timer reaches its threshold.

    Returns the minimum of (threshold_i - tau_i) / rate_i together with the
    arriving index set; indices whose arrival lands within ``tol`` of their
    threshold are grouped as simultaneous.
    """
    tau = np.asarray(state, dtype=float)
    rates = np.asarray(rates, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if not (tau.shape == rates.shape == thresholds.shape):
        raise ValueError("state, rates and thresholds must have matching shapes")
    if np.any(rates <= 0):
        raise ValueError("all timer rates must be positive")
    dt = max(float(((thresholds - tau) / rates).min()), 0.0)
    arrival = tau + rates * dt
    idx = np.flatnonzero(thresholds - arrival <= tol)
    return dt, tuple(int(i) for i in idx)


def simulate(
    params: OscillatorParams,
    perturbation: PerturbationSpec = NOMINAL,
    initial=None,
    stop: StopCriteria = StopCriteria(max_flow_time=10.0),
    policy: BranchPolicy = BranchPolicy.LOWEST_INDEX_RESETS,
    seed: int = 0,
    sample_interval: float | None | str = AUTO_SAMPLING,
) -> HybridArc:
    """Simulate one solution of the (possibly perturbed) network.

    Args:
        params: network parameters.
        perturbation: active perturbation family; ``NOMINAL`` by default.
        initial: initial timer vector, inside the (effective) flow box or on
            the jump set.
        stop: flow-time and/or jump-count truncation.
        policy: branch selection at simultaneous firings.
        seed: seeds the generator used by the random branch policy.
        sample_interval: extra uniform flow sampling for plotting;
            ``"auto"`` picks threshold / (50 * rate), ``None`` records jump
            boundaries only.

    Returns:
        The simulated :class:`HybridArc`.
    """
    if initial is None:
        raise ValueError("simulate needs an initial timer vector")
    validate_spec(perturbation, params)
    thresholds = effective_thresholds(perturbation, params)
    rates = effective_rates(perturbation, params)
    tol = params.tolerance
    state = as_state(initial, params.n).copy()
    if np.any(state < -tol) or np.any(state > thresholds + tol):
        raise ValueError("initial state lies outside the flow and jump sets")

    if sample_interval == AUTO_SAMPLING:
        interval = params.threshold / (50.0 * params.rate)
    else:
        interval = sample_interval
        if interval is not None and not interval > 0:
            raise ValueError(f"sample_interval must be positive, got {interval}")

    max_t = math.inf if stop.max_flow_time is None else float(stop.max_flow_time)
    max_j = math.inf if stop.max_jumps is None else int(stop.max_jumps)
    rng = np.random.default_rng(seed)

    ts: list[float] = [0.0]
    js: list[int] = [0]
    samples: list[np.ndarray] = [state.copy()]
    jumps: list[JumpRecord] = []
    t, j = 0.0, 0
    consecutive_jumps = 0

    while t < max_t and j < max_j:
        at_thr = np.abs(state - thresholds) <= tol
        if at_thr.any():
            post, triggered, fired = jump_outcome(
                state, perturbation, params, policy, rng, thresholds=thresholds
            )
            jumps.append(
                JumpRecord(
                    time=HybridTime(t, j),
                    triggered=triggered,
                    fired=fired,
                    pre_state=state.copy(),
                    post_state=post.copy(),
                )
            )
            j += 1
            ts.append(t)
            js.append(j)
            samples.append(post.copy())
            state = post
            consecutive_jumps += 1
            if consecutive_jumps > params.n:
                raise ZenoError(
                    f"{consecutive_jumps} jumps with no flow in between at t={t}, j={j}; "
                    f"state={state.tolist()}"
                )
            continue

        dt, arriving = time_to_next_jump(state, rates, thresholds, tol)
        t_next = t + dt
        if t_next >= max_t:
            if max_t > t:
                _record_flow_samples(ts, js, samples, state, rates, t, max_t, j, interval)
                state = state + rates * (max_t - t)
                ts.append(max_t)
                js.append(j)
                samples.append(state.copy())
                t = max_t
            break
        _record_flow_samples(ts, js, samples, state, rates, t, t_next, j, interval)
        state = state + rates * dt
        for i in arriving:
            state[i] = thresholds[i]
        t = t_next
        consecutive_jumps = 0
        ts.append(t)
        js.append(j)
        samples.append(state.copy())

    t_arr = np.asarray(ts, dtype=float)
    j_arr = np.asarray(js, dtype=np.int64)
    state_arr = np.vstack(samples)
    for arr in (t_arr, j_arr, state_arr):
        arr.setflags(write=False)
    return HybridArc(t=t_arr, j=j_arr, states=state_arr, jumps=tuple(jumps))


def _record_flow_samples(ts, js, samples, state, rates, t0, t1, j, interval) -> None:
    """Append uniform interior samples of the flow on (t0, t1)."""
    if interval is None:
        return
    k = 1
    while True:
        tk = t0 + k * interval
        if tk >= t1:
            return
        ts.append(tk)
        js.append(j)
        samples.append(state + rates * (tk - t0))
        k += 1


def interjump_gaps(arc: HybridArc, oscillator: int) -> np.ndarray:
    """Gaps between successive resets of one oscillator's timer.

    Returns an empty array when the arc holds fewer than two resets of that
    oscillator.
    """
    times = [rec.time.t for rec in arc.jumps if oscillator in rec.fired]
    if len(times) < 2:
        return np.empty(0)
    return np.diff(np.asarray(times))


def firing_separations(arc: HybridArc) -> np.ndarray:
    """Time separations between consecutive firing events, any oscillator."""
    times = [rec.time.t for rec in arc.jumps if rec.fired]
    if len(times) < 2:
        return np.empty(0)
    return np.diff(np.asarray(times))


def sample_initial_states(
    count: int,
    params: OscillatorParams,
    rng,
    thresholds: np.ndarray | None = None,
    avoid_exclusion: bool = True,
    max_tries: int = 1000,
) -> np.ndarray:
    """Draw initial states uniformly from the (effective) flow box.

    With ``avoid_exclusion`` a draw that falls in the tolerance band of the
    exclusion set is rejected and redrawn.
    """
    if thresholds is None:
        thresholds = np.full(params.n, float(params.threshold))
    out = np.empty((count, params.n))
    for k in range(count):
        for _ in range(max_tries):
            cand = rng.uniform(0.0, thresholds)
            if not avoid_exclusion or not in_exclusion_set(cand, params):
                out[k] = cand
                break
        else:  # pragma: no cover - rejection is essentially immediate
            raise RuntimeError("could not sample a state off the exclusion set")
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _v_values(arc: HybridArc, dset_or_params) -> np.ndarray:
    if isinstance(dset_or_params, DesyncSet):
        return lyapunov_v_many(arc.states, dset_or_params)
    if isinstance(dset_or_params, OscillatorParams):
        return np.array([lyapunov_v_fast(s, dset_or_params) for s in arc.states])
    raise TypeError("expected a DesyncSet or OscillatorParams for the distance column")


def write_arc_csv(arc: HybridArc, file, dset_or_params) -> None:
    """Write samples as ``t,j,tau_1,...,tau_N,V`` with 17 significant digits.

    ``file`` is a path or an open text file.  Jumps produce two consecutive
    rows with equal t and j differing by one.
    """
    v = _v_values(arc, dset_or_params)
    n = arc.n_oscillators

    def _write(f) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t", "j"] + [f"tau_{i + 1}" for i in range(n)] + ["V"])
        for k in range(arc.n_samples):
            row = [_fmt(arc.t[k]), str(int(arc.j[k]))]
            row += [_fmt(x) for x in arc.states[k]]
            row.append(_fmt(v[k]))
            writer.writerow(row)

    if hasattr(file, "write"):
        _write(file)
    else:
        with open(file, "w", newline="") as f:
            _write(f)


def write_jumps_csv(arc: HybridArc, file) -> None:
    """Write jump records: time, counts, trigger/reset index sets and states.

    Oscillator index sets use 1-based labels joined by ``;`` to match the
    ``tau_k`` column names.
    """
    n = arc.n_oscillators

    def _write(f) -> None:
        writer = csv.writer(f, lineterminator="\n")
        header = ["t", "j", "triggered", "fired"]
        header += [f"pre_tau_{i + 1}" for i in range(n)]
        header += [f"post_tau_{i + 1}" for i in range(n)]
        writer.writerow(header)
        for rec in arc.jumps:
            row = [
                _fmt(rec.time.t),
                str(rec.time.j),
                ";".join(str(i + 1) for i in rec.triggered),
                ";".join(str(i + 1) for i in rec.fired),
            ]
            row += [_fmt(x) for x in rec.pre_state]
            row += [_fmt(x) for x in rec.post_state]
            writer.writerow(row)

    if hasattr(file, "write"):
        _write(file)
    else:
        with open(file, "w", newline="") as f:
            _write(f)
