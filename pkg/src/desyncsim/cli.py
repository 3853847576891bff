"""Batch experiment runner and command-line interface.

Subcommands::

    simulate    run one configured simulation, write arc.csv / jumps.csv
    batch       run a seeded batch, write dist_<k>.csv and summary.csv
    desync-set  print the anchors of the desynchronization set as CSV
    bound       print convergence/robustness bound values as key=value lines
    verify      simulate and check the arc's invariants (exit 3 on violation)
    fig4        sweep the normalised convergence-time bound over the coupling

Exit codes: 0 success, 1 config/schema error, 2 I/O error, 3 numerical
invariant violation during verify.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (
    convergence_time_bound,
    flow_rate_bound,
    integrable_perturbation_bound,
    steady_state_v,
    verify_arc,
)
from .config import ConfigError, ExplicitInitial, RandomBatch, RunConfig, load_config
from .desync import MAX_ENUMERATED_N, enumerate_anchors, lyapunov_v_many
from .model import OscillatorParams
from .perturb import PerturbationKind, effective_thresholds, validate_spec
from .simulate import (
    sample_initial_states,
    simulate,
    write_arc_csv,
    write_jumps_csv,
)

_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _FMT)


def _distance_backend(params: OscillatorParams):
    """The object handed to CSV/V evaluation: the full set when enumerable."""
    if params.n <= MAX_ENUMERATED_N:
        return enumerate_anchors(params)
    return params


def _v_series(arc, backend) -> np.ndarray:
    if isinstance(backend, OscillatorParams):
        from .desync import lyapunov_v_fast

        return np.array([lyapunov_v_fast(s, backend) for s in arc.states])
    return lyapunov_v_many(arc.states, backend)


def run_single(cfg: RunConfig, out_dir: Path) -> dict[str, Path]:
    """Run one simulation and write its trajectory artifacts."""
    if not isinstance(cfg.initial, ExplicitInitial) or not cfg.initial.state:
        raise ConfigError("simulate needs an explicit initial.state vector")
    arc = simulate(
        cfg.params,
        cfg.perturbation,
        cfg.initial.state,
        cfg.stop,
        cfg.policy,
        cfg.seed,
        cfg.sample_interval,
    )
    backend = _distance_backend(cfg.params)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if cfg.outputs.arc_csv:
        path = out_dir / "arc.csv"
        write_arc_csv(arc, path, backend)
        written["arc_csv"] = path
    if cfg.outputs.jumps_csv:
        path = out_dir / "jumps.csv"
        write_jumps_csv(arc, path)
        written["jumps_csv"] = path
    if cfg.outputs.plots:
        from .plots import plot_arc

        path = out_dir / "arc.png"
        plot_arc(arc, _v_series(arc, backend), path, cfg.params.threshold)
        written["plot"] = path
    return written


def run_batch(cfg: RunConfig, out_dir: Path) -> dict[str, Path]:
    """Run a seeded batch of simulations and write per-run plus summary artifacts."""
    if not isinstance(cfg.initial, RandomBatch):
        raise ConfigError("batch needs an initial.random section")
    batch = cfg.initial
    master_seed = batch.seed if batch.seed is not None else cfg.seed
    rng = np.random.default_rng(master_seed)
    validate_spec(cfg.perturbation, cfg.params)
    thresholds = effective_thresholds(cfg.perturbation, cfg.params)
    initials = sample_initial_states(
        batch.count, cfg.params, rng, thresholds, batch.avoid_exclusion
    )
    run_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master_seed).spawn(batch.count)]
    backend = _distance_backend(cfg.params)
    out_dir.mkdir(parents=True, exist_ok=True)

    limit = None
    if cfg.perturbation.kind is PerturbationKind.FLOW_RATE:
        limit = flow_rate_bound(
            cfg.params, cfg.perturbation.magnitude_array(cfg.params.n)
        ).asymptotic_distance

    def one_run(k: int):
        arc = simulate(
            cfg.params,
            cfg.perturbation,
            initials[k],
            cfg.stop,
            cfg.policy,
            run_seeds[k],
            cfg.sample_interval,
        )
        v = _v_series(arc, backend)
        path = out_dir / f"dist_{k + 1}.csv"
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["t", "j", "V"])
            for i in range(arc.n_samples):
                writer.writerow([_fmt(arc.t[i]), str(int(arc.j[i])), _fmt(v[i])])
        v0 = float(v[0])
        c1 = cfg.report_c1 if cfg.report_c1 is not None else 0.1 * max(v0, cfg.params.tolerance)
        if v0 > c1:
            m = convergence_time_bound(cfg.params, v0, c1, ceiling_mode=True).time_bound
        else:
            m = 0.0
        tj = arc.t + arc.j
        below = np.flatnonzero(v <= c1 + 1e-15)
        crossing = float(tj[below[0]]) if below.size else math.nan
        steady = steady_state_v(arc.t, v) if arc.duration > 0 else v0
        return k, arc, v, v0, c1, m, crossing, steady

    with ThreadPoolExecutor(max_workers=min(8, batch.count)) as pool:
        results = list(pool.map(one_run, range(batch.count)))
    results.sort(key=lambda r: r[0])

    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["run", "v0", "c1", "bound_m", "crossing_tj", "steady_state_v"])
        for k, _, _, v0, c1, m, crossing, steady in results:
            writer.writerow(
                [str(k + 1), _fmt(v0), _fmt(c1), _fmt(m), "" if math.isnan(crossing) else _fmt(crossing), _fmt(steady)]
            )
    written: dict[str, Path] = {"summary": summary}
    if cfg.outputs.plots:
        from .plots import plot_batch

        path = out_dir / "batch.png"
        plot_batch([(r[1].t, r[2]) for r in results], path, limit)
        written["plot"] = path
    return written


def run_fig4(eps_values, c1_values, c2: float, tau: float = 1.0, omega: float = 1.0):
    """Normalised convergence-time sweep: rows of (coupling, c1, bound/(tau/omega+1))."""
    rows = []
    for c1 in c1_values:
        for eps in eps_values:
            params = OscillatorParams(n=2, threshold=tau, rate=omega, coupling=float(eps))
            bound = convergence_time_bound(params, c2, float(c1), ceiling_mode=False)
            rows.append((float(eps), float(c1), bound.time_bound / (tau / omega + 1.0)))
    return rows


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    run_single(cfg, _out_dir(args, "out"))
    return 0


def _cmd_batch(args) -> int:
    cfg = _load(args)
    run_batch(cfg, _out_dir(args, "out"))
    return 0


def _cmd_desync_set(args) -> int:
    if args.config:
        params = load_config(args.config).params
    else:
        if args.n is None or args.threshold is None or args.coupling is None:
            raise ConfigError("desync-set needs --config or all of --n/--threshold/--coupling")
        params = OscillatorParams(n=args.n, threshold=args.threshold, coupling=args.coupling)
    dset = enumerate_anchors(params)
    rows = [[_fmt(x) for x in anchor.coords] for anchor in dset.anchors]
    header = [f"tau_{i + 1}" for i in range(params.n)]
    if args.out:
        with open(args.out, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def _cmd_bound(args) -> int:
    cfg = _load(args)
    b = cfg.bounds
    if b is None:
        raise ConfigError("bound needs a 'bounds' section in the config")
    printed = False
    if b.c2 is not None and b.c1 is not None:
        cb = convergence_time_bound(cfg.params, b.c2, b.c1, ceiling_mode=b.ceiling)
        print(f"c2={_fmt(cb.c_from)}")
        print(f"c1={_fmt(cb.c_to)}")
        print(f"jumps={_fmt(cb.jumps)}")
        print(f"m={_fmt(cb.time_bound)}")
        printed = True
    if b.delta_rates is not None:
        rb = flow_rate_bound(cfg.params, b.delta_rates)
        print(f"cbar={_fmt(rb.c_bar)}")
        print(f"asymptotic_distance={_fmt(rb.asymptotic_distance)}")
        printed = True
    if b.b_integral is not None:
        print(f"integrable_limit={_fmt(integrable_perturbation_bound(b.b_integral, cfg.params))}")
        printed = True
    if not printed:
        raise ConfigError("bounds section is empty: set c2/c1, delta_rates or b_integral")
    return 0


def _cmd_verify(args) -> int:
    cfg = _load(args)
    if not isinstance(cfg.initial, ExplicitInitial) or not cfg.initial.state:
        raise ConfigError("verify needs an explicit initial.state vector")
    if cfg.params.n > MAX_ENUMERATED_N:
        raise ConfigError(f"verify needs n <= {MAX_ENUMERATED_N} for the enumerated set")
    arc = simulate(
        cfg.params,
        cfg.perturbation,
        cfg.initial.state,
        cfg.stop,
        cfg.policy,
        cfg.seed,
        cfg.sample_interval,
    )
    dset = enumerate_anchors(cfg.params)
    report = verify_arc(
        arc,
        dset,
        cfg.params,
        c1=cfg.report_c1,
        perturbation=cfg.perturbation,
        drift_tol=args.drift_tol,
        contraction_tol=args.contraction_tol,
    )
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["metric", "value"])
    writer.writerows(report.rows())
    if report.violations:
        for msg in report.violations:
            print(f"violation: {msg}", file=sys.stderr)
        return 3
    return 0


def _cmd_fig4(args) -> int:
    eps_values = np.linspace(args.eps_start, args.eps_stop, args.eps_count)
    if np.any(eps_values <= -1.0) or np.any(eps_values >= 0.0):
        raise ConfigError("fig4 coupling values must lie strictly in (-1, 0)")
    c1_fracs = args.c1 if args.c1 else [0.5, 0.3, 0.1, 0.05]
    tau, omega = args.threshold, args.rate
    c1_values = [f * tau for f in c1_fracs]
    c2 = args.c2 * tau
    rows = run_fig4(eps_values, c1_values, c2, tau, omega)
    out_dir = _out_dir(args, "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "fig4.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["eps", "c1", "normalized_m"])
        for eps, c1, nm in rows:
            writer.writerow([_fmt(eps), _fmt(c1), _fmt(nm)])
    if not args.no_plots:
        from .plots import plot_convergence_sweep

        curves = {
            c1: np.array([nm for e, c, nm in rows if c == c1]) for c1 in c1_values
        }
        plot_convergence_sweep(eps_values, curves, out_dir / "fig4.png")
    return 0


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("missing --config")
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "no_plots", False):
        cfg = replace(cfg, outputs=replace(cfg.outputs, plots=False))
    return cfg


def _out_dir(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desyncsim",
        description="Simulate impulse-coupled oscillator networks and verify desynchronization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    common(sub.add_parser("simulate", help="run one simulation"))
    common(sub.add_parser("batch", help="run a seeded batch of simulations"))

    p = sub.add_parser("desync-set", help="print the desynchronization anchors as CSV")
    p.add_argument("--config", help="JSON run configuration (for the params)")
    p.add_argument("--n", type=int, help="number of oscillators")
    p.add_argument("--threshold", type=float, help="firing threshold")
    p.add_argument("--coupling", type=float, help="coupling in (-1, 0)")
    p.add_argument("--out", help="write to this file instead of stdout")

    p = sub.add_parser("bound", help="print bound values as key=value lines")
    p.add_argument("--config", required=True, help="JSON run configuration with a bounds section")

    p = sub.add_parser("verify", help="simulate and verify arc invariants")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--drift-tol", type=float, default=None, help="flow drift tolerance")
    p.add_argument(
        "--contraction-tol", type=float, default=1e-9, help="relative jump contraction tolerance"
    )

    p = sub.add_parser("fig4", help="sweep the normalised convergence-time bound")
    p.add_argument("--out", help="output directory (default: ./out)")
    p.add_argument("--eps-start", type=float, default=-0.9)
    p.add_argument("--eps-stop", type=float, default=-0.1)
    p.add_argument("--eps-count", type=int, default=33)
    p.add_argument("--c2", type=float, default=0.99, help="start level as a threshold fraction")
    p.add_argument(
        "--c1",
        type=float,
        action="append",
        help="target level as a threshold fraction (repeatable)",
    )
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--no-plots", action="store_true")

    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "batch": _cmd_batch,
    "desync-set": _cmd_desync_set,
    "bound": _cmd_bound,
    "verify": _cmd_verify,
    "fig4": _cmd_fig4,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
