"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete.  Tolerances are fixed here, not calibrated.
"""

import dataclasses
import math
import time

import numpy as np

from conftest import brute_double_geometric_sum, brute_geometric_sum
from desyncsim import (
    NOMINAL,
    BranchPolicy,
    OscillatorParams,
    PerturbationKind,
    PerturbationSpec,
    StopCriteria,
    convergence_time_bound,
    desync_condition_residuals,
    double_geometric_sum,
    enumerate_anchors,
    flow_perturbation_cbar,
    geometric_sum,
    in_exclusion_set,
    lyapunov_v_many,
    max_exclusion_distance,
    rank_order,
    sample_initial_states,
    simulate,
    solve_sorted_anchor_closed_form,
    solve_sorted_anchor_elimination,
    steady_state_v,
)
from desyncsim.cli import run_fig4

EPS_GRID = (-0.9, -0.7, -0.5, -0.3, -0.1)


def _report(num: int, ok: bool, desc: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {desc}")
    assert ok, f"criterion {num:02d} failed: {desc}"


def _draw_jump_states(rng, count, n, params):
    """Random states on the jump set, off the exclusion set."""
    out = np.empty((count, n))
    k = 0
    while k < count:
        state = rng.uniform(0.0, params.threshold, size=n)
        state[rng.integers(n)] = params.threshold
        if in_exclusion_set(state, params):
            continue
        out[k] = state
        k += 1
    return out


def test_criterion_01_anchor_correctness():
    start = time.perf_counter()
    worst_gap = 0.0
    worst_residual = 0.0
    for n in range(2, 9):
        for eps in EPS_GRID:
            for tau in (1.0, 3.0):
                params = OscillatorParams(n=n, threshold=tau, rate=1.0, coupling=eps)
                a = solve_sorted_anchor_elimination(params)
                b = solve_sorted_anchor_closed_form(params)
                worst_gap = max(worst_gap, float(np.max(np.abs(a - b) / np.abs(b))))
                dset = enumerate_anchors(params)
                worst_residual = max(
                    worst_residual, float(desync_condition_residuals(dset).max())
                )
    elapsed = time.perf_counter() - start
    ok = worst_gap <= 1e-12 and worst_residual <= 1e-10 and elapsed < 1.0
    _report(
        1,
        ok,
        f"anchors agree (rel {worst_gap:.2e} <= 1e-12), equal-spacing residual "
        f"{worst_residual:.2e} <= 1e-10, runtime {elapsed:.2f}s < 1s",
    )


def test_criterion_02_jump_contraction():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for n in range(2, 7):
        for eps in (-0.2, -0.5):
            params = OscillatorParams(n=n, threshold=1.0, rate=1.0, coupling=eps)
            dset = enumerate_anchors(params)
            states = _draw_jump_states(rng, 500, n, params)
            post = (1.0 + eps) * states
            fired = np.argmax(np.isclose(states, 1.0, atol=params.tolerance), axis=1)
            post[np.arange(500), fired] = 0.0
            v_pre = lyapunov_v_many(states, dset)
            v_post = lyapunov_v_many(post, dset)
            rel = np.abs(v_post - (1.0 + eps) * v_pre) / v_pre
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10.0
    _report(
        2,
        ok,
        f"1000 jump contractions per n in 2..6 within 1e-9 relative "
        f"(worst {worst:.2e}), runtime {elapsed:.1f}s < 10s",
    )


def test_criterion_03_flow_invariance():
    rng = np.random.default_rng(33)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(2, 6))
        eps = float(rng.uniform(-0.85, -0.1))
        params = OscillatorParams(n=n, threshold=1.0, rate=1.0, coupling=eps)
        dset = enumerate_anchors(params)
        init = sample_initial_states(1, params, rng)[0]
        arc = simulate(params, NOMINAL, init, StopCriteria(max_flow_time=10.0))
        v = lyapunov_v_many(arc.states, dset)
        for _, sl in arc.segment_slices():
            seg = v[sl]
            worst = max(worst, float(np.abs(seg - seg[0]).max()))
    ok = worst <= 1e-9
    _report(3, ok, f"max distance drift along flow segments of 100 arcs: {worst:.2e} <= 1e-9")


def test_criterion_04_two_oscillator_scenario():
    params = OscillatorParams(n=2, threshold=1.0, rate=1.0, coupling=-0.2)
    bound = convergence_time_bound(params, 0.24, 0.1, ceiling_mode=False)
    m_ok = abs(bound.time_bound - 7.84) <= 0.01
    arc = simulate(params, NOMINAL, [0.0, 0.1], StopCriteria(max_flow_time=10.0), sample_interval=None)
    dset = enumerate_anchors(params)
    v = lyapunov_v_many(arc.states, dset)
    tj = arc.t + arc.j
    late = tj >= bound.time_bound
    bound_ok = bool(np.all(v[late] <= 0.1 + 1e-12))
    seg4 = [sl for j, sl in arc.segment_slices() if j == 4]
    crossing_ok = bool(
        seg4
        and arc.t[seg4[0].start] <= 3.0 <= arc.t[seg4[0].stop - 1]
        and 0.09 <= v[seg4[0].start] <= 0.11
    )
    ok = m_ok and bound_ok and crossing_ok
    _report(
        4,
        ok,
        f"M={bound.time_bound:.4f} within 7.84±0.01; V<=0.1 for t+j>=M; "
        f"V(3,4)={v[seg4[0].start]:.4f} in [0.09, 0.11]",
    )


def test_criterion_05_time_bound_soundness_sweep():
    rng = np.random.default_rng(55)
    violations = 0
    pairs_checked = 0
    for n in range(2, 6):
        params = OscillatorParams(n=n, threshold=1.0, rate=1.0, coupling=-0.2)
        dset = enumerate_anchors(params)
        radius = max_exclusion_distance(params, dset, samples_per_piece=800, seed=5)
        c2_grid = [0.5 * radius, 0.75 * radius, 0.9 * radius]
        initials = sample_initial_states(500, params, rng)
        for init in initials:
            arc = simulate(
                params, NOMINAL, init, StopCriteria(max_flow_time=16.0), sample_interval=None
            )
            v = lyapunov_v_many(arc.states, dset)
            tj = arc.t + arc.j
            v0 = float(v[0])
            for c2 in c2_grid:
                if v0 > c2:
                    continue
                for c1 in (0.25 * c2, 0.5 * c2):
                    m = convergence_time_bound(params, c2, c1, ceiling_mode=True).time_bound
                    late = tj >= m
                    pairs_checked += 1
                    if np.any(v[late] > c1 + 1e-12):
                        violations += 1
    ok = violations == 0 and pairs_checked > 0
    _report(
        5,
        ok,
        f"ceiling-mode bound held in all {pairs_checked} (state, c2, c1) checks "
        f"({violations} violations)",
    )


def test_criterion_06_convergence_sweep_curves():
    eps_values = np.linspace(-0.9, -0.1, 33)
    c1_fracs = [0.5, 0.3, 0.1, 0.05]
    rows = run_fig4(eps_values, c1_fracs, 0.99)
    curves = {c1: [nm for e, c, nm in rows if c == c1] for c1 in c1_fracs}
    # along the grid |coupling| decreases, so each curve must strictly increase
    monotone = all(
        all(a < b for a, b in zip(curve, curve[1:])) for curve in curves.values()
    )
    above = all(a > b for a, b in zip(curves[0.05], curves[0.5]))
    ok = monotone and above and len(rows) == 33 * 4
    _report(
        6,
        ok,
        "four sweep curves strictly decreasing in |coupling|, "
        "c1=0.05 curve pointwise above c1=0.5",
    )


def test_criterion_07_flow_rate_robustness():
    params = OscillatorParams(n=2, threshold=4.0, rate=1.0, coupling=-0.3)
    delta = (0.120, 0.134)
    cbar = flow_perturbation_cbar(params, delta)
    oracle_cbar = 0.007 * math.sqrt(2.0)
    cbar_ok = abs(cbar - oracle_cbar) <= 1e-12 and abs(cbar - 0.0099) <= 1e-4
    limit = cbar * params.threshold / (0.3 * 1.0)
    pert = PerturbationSpec(PerturbationKind.FLOW_RATE, delta)
    dset = enumerate_anchors(params)
    rng = np.random.default_rng(77)
    initials = sample_initial_states(10, params, rng)
    steadies = []
    for k in range(10):
        arc = simulate(
            params, pert, initials[k], StopCriteria(max_flow_time=100.0),
            seed=k, sample_interval=None,
        )
        v = lyapunov_v_many(arc.states, dset)
        steadies.append(steady_state_v(arc.t, v))
    settle_ok = all(s <= limit for s in steadies)
    ok = cbar_ok and settle_ok
    _report(
        7,
        ok,
        f"cbar={cbar:.6f} matches the formula (0.0099); 10 runs settle with "
        f"steady-state V <= {limit:.4f} (worst {max(steadies):.4f})",
    )


def test_criterion_08_bump_equivalence():
    params = OscillatorParams(n=2, threshold=3.0, rate=1.0, coupling=-0.3)
    stop = StopCriteria(max_flow_time=50.0)
    rho = 0.1
    bump = PerturbationSpec(PerturbationKind.BUMP, (rho, rho))
    bumped = simulate(params, bump, [0.1, 0.2], stop)
    shifted = dataclasses.replace(params, coupling=params.coupling + rho)
    nominal = simulate(shifted, NOMINAL, [0.1, 0.2], stop)
    identical = (
        np.array_equal(bumped.t, nominal.t)
        and np.array_equal(bumped.j, nominal.j)
        and np.array_equal(bumped.states, nominal.states)
    )

    dset = enumerate_anchors(params)
    rng = np.random.default_rng(88)

    def batch_steady(mags):
        pert = PerturbationSpec(PerturbationKind.BUMP, mags)
        initials = sample_initial_states(10, params, rng)
        worst = 0.0
        for k in range(10):
            arc = simulate(
                params, pert, initials[k], StopCriteria(max_flow_time=120.0),
                sample_interval=None,
            )
            v = lyapunov_v_many(arc.states, dset)
            worst = max(worst, steady_state_v(arc.t, v))
        return worst

    small = batch_steady((0.02, 0.01))
    large = batch_steady((0.15, 0.1))
    levels_ok = small <= 0.06 * 1.2 and large <= 0.3 * 1.2
    ok = identical and levels_ok and small < large
    _report(
        8,
        ok,
        f"uniform bump arc bit-identical to shifted-coupling arc; batch steady "
        f"levels {small:.3f} <= 0.072 and {large:.3f} <= 0.36",
    )


def test_criterion_09_sum_identities():
    rng = np.random.default_rng(99)
    ok = True
    for _ in range(1000):
        x = float(rng.uniform(-2.0, 2.0))
        if abs(x - 1.0) <= 0.05:
            x -= 0.2
        m = int(rng.integers(0, 9))
        n = m + int(rng.integers(1, 13))
        if not math.isclose(
            geometric_sum(x, m, n), brute_geometric_sum(x, m, n), rel_tol=1e-12, abs_tol=1e-12
        ):
            ok = False
            break
    if ok:
        for _ in range(1000):
            x = float(rng.uniform(-2.0, 2.0))
            if abs(x - 1.0) <= 0.05:
                x -= 0.2
            m = int(rng.integers(0, 9))
            big_n = m + int(rng.integers(0, 11))
            if not math.isclose(
                double_geometric_sum(x, m, big_n),
                brute_double_geometric_sum(x, m, big_n),
                rel_tol=1e-12,
                abs_tol=1e-12,
            ):
                ok = False
                break
    _report(9, ok, "geometric sum identities match brute force on 1000 instances each")


def test_criterion_10_ordering_preservation():
    rng = np.random.default_rng(110)
    ok = True
    for n in (2, 3, 4, 5):
        params = OscillatorParams(n=n, threshold=1.0, rate=1.0, coupling=-0.35)
        initials = sample_initial_states(50, params, rng)
        for init in initials:
            arc = simulate(params, NOMINAL, init, StopCriteria(max_jumps=10 * n))
            orders = [rank_order(rec.post_state) for rec in arc.jumps]
            if any(orders[k] != orders[k + n] for k in range(len(orders) - n)):
                ok = False
    _report(10, ok, "cyclic rank order identical every n jumps over 10n jumps, 200 arcs")


def test_criterion_11_exclusion_set_behaviour():
    params = OscillatorParams(n=3, threshold=1.0, rate=1.0, coupling=-0.2)
    dset = enumerate_anchors(params)
    arc = simulate(
        params, NOMINAL, [0.4, 0.4, 0.4], StopCriteria(max_flow_time=10.0),
        policy=BranchPolicy.ALL_RESET,
    )
    spread = float((arc.states.max(axis=1) - arc.states.min(axis=1)).max())
    v = lyapunov_v_many(arc.states, dset)
    sync_ok = spread == 0.0 and float(np.abs(v - v[0]).max()) <= 1e-12

    arc2 = simulate(params, NOMINAL, [1.0, 0.0, 0.6], StopCriteria(max_jumps=1))
    post = arc2.jumps[0].post_state
    pair_ok = in_exclusion_set(post, params) and np.sort(post)[1] - np.sort(post)[0] <= 1e-12
    ok = sync_ok and pair_ok
    _report(
        11,
        ok,
        "synchronised all-reset arcs keep equal timers with constant V; "
        "zero/threshold starts reach an equal pair in one jump",
    )
