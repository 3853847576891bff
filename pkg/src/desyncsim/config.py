"""Run configuration: a JSON document describing one experiment.

A config bundles the network parameters, the active perturbation, the
initial condition (explicit vector or seeded random batch), stop criteria,
branch policy and output options.  Parsing is strict: unknown keys and
out-of-range values fail with the offending field named, and a parsed
config serialises back to an equal document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .model import BranchPolicy, OscillatorParams
from .perturb import PerturbationKind, PerturbationSpec
from .simulate import AUTO_SAMPLING, StopCriteria


class ConfigError(ValueError):
    """A config document is malformed; the message names the field."""


@dataclass(frozen=True)
class ExplicitInitial:
    state: tuple[float, ...]


@dataclass(frozen=True)
class RandomBatch:
    count: int
    seed: int | None = None
    avoid_exclusion: bool = True


@dataclass(frozen=True)
class OutputOptions:
    arc_csv: bool = True
    jumps_csv: bool = True
    plots: bool = True


@dataclass(frozen=True)
class BoundQuery:
    """Optional inputs for the ``bound`` subcommand."""

    c2: float | None = None
    c1: float | None = None
    ceiling: bool = False
    delta_rates: tuple[float, ...] | None = None
    b_integral: float | None = None


@dataclass(frozen=True)
class RunConfig:
    params: OscillatorParams
    perturbation: PerturbationSpec = PerturbationSpec()
    initial: ExplicitInitial | RandomBatch = ExplicitInitial(state=())
    stop: StopCriteria = StopCriteria(max_flow_time=10.0)
    policy: BranchPolicy = BranchPolicy.LOWEST_INDEX_RESETS
    seed: int = 0
    sample_interval: float | None | str = AUTO_SAMPLING
    report_c1: float | None = None
    outputs: OutputOptions = field(default_factory=OutputOptions)
    bounds: BoundQuery | None = None


def _require(mapping: dict, key: str, ctx: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"missing field {ctx}.{key}")
    return mapping[key]


def _as_mapping(value: Any, ctx: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"field {ctx} must be an object")
    return value


def _as_number(value: Any, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {ctx} must be a number")
    return float(value)


def _as_int(value: Any, ctx: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field {ctx} must be an integer")
    return value


def _as_bool(value: Any, ctx: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"field {ctx} must be a boolean")
    return value


def _as_vector(value: Any, ctx: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"field {ctx} must be an array of numbers")
    return tuple(_as_number(v, f"{ctx}[{k}]") for k, v in enumerate(value))


def _reject_unknown(mapping: dict, allowed: set[str], ctx: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown field {ctx}.{sorted(unknown)[0]}")


def _parse_params(doc: Any) -> OscillatorParams:
    m = _as_mapping(doc, "params")
    _reject_unknown(m, {"n", "threshold", "rate", "coupling", "tolerance"}, "params")
    kwargs = {
        "n": _as_int(_require(m, "n", "params"), "params.n"),
        "threshold": _as_number(_require(m, "threshold", "params"), "params.threshold"),
    }
    if "rate" in m:
        kwargs["rate"] = _as_number(m["rate"], "params.rate")
    if "coupling" in m:
        kwargs["coupling"] = _as_number(m["coupling"], "params.coupling")
    if "tolerance" in m:
        kwargs["tolerance"] = _as_number(m["tolerance"], "params.tolerance")
    try:
        return OscillatorParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc


def _parse_perturbation(doc: Any) -> PerturbationSpec:
    m = _as_mapping(doc, "perturbation")
    _reject_unknown(m, {"kind", "magnitudes"}, "perturbation")
    kind_name = _require(m, "kind", "perturbation")
    try:
        kind = PerturbationKind(kind_name)
    except ValueError as exc:
        names = ", ".join(k.value for k in PerturbationKind)
        raise ConfigError(f"perturbation.kind must be one of: {names}") from exc
    mags = _as_vector(m.get("magnitudes", []), "perturbation.magnitudes")
    return PerturbationSpec(kind=kind, magnitudes=mags)


def _parse_initial(doc: Any) -> ExplicitInitial | RandomBatch:
    m = _as_mapping(doc, "initial")
    if "state" in m:
        _reject_unknown(m, {"state"}, "initial")
        return ExplicitInitial(state=_as_vector(m["state"], "initial.state"))
    if "random" in m:
        _reject_unknown(m, {"random"}, "initial")
        r = _as_mapping(m["random"], "initial.random")
        _reject_unknown(r, {"count", "seed", "avoid_exclusion"}, "initial.random")
        count = _as_int(_require(r, "count", "initial.random"), "initial.random.count")
        if count < 1:
            raise ConfigError("field initial.random.count must be at least 1")
        seed = _as_int(r["seed"], "initial.random.seed") if "seed" in r else None
        avoid = (
            _as_bool(r["avoid_exclusion"], "initial.random.avoid_exclusion")
            if "avoid_exclusion" in r
            else True
        )
        return RandomBatch(count=count, seed=seed, avoid_exclusion=avoid)
    raise ConfigError("field initial needs either 'state' or 'random'")


def _parse_stop(doc: Any) -> StopCriteria:
    m = _as_mapping(doc, "stop")
    _reject_unknown(m, {"max_flow_time", "max_jumps"}, "stop")
    t = _as_number(m["max_flow_time"], "stop.max_flow_time") if "max_flow_time" in m else None
    j = _as_int(m["max_jumps"], "stop.max_jumps") if "max_jumps" in m else None
    try:
        return StopCriteria(max_flow_time=t, max_jumps=j)
    except ValueError as exc:
        raise ConfigError(f"stop: {exc}") from exc


def _parse_bounds(doc: Any) -> BoundQuery:
    m = _as_mapping(doc, "bounds")
    _reject_unknown(m, {"c2", "c1", "ceiling", "delta_rates", "b_integral"}, "bounds")
    return BoundQuery(
        c2=_as_number(m["c2"], "bounds.c2") if "c2" in m else None,
        c1=_as_number(m["c1"], "bounds.c1") if "c1" in m else None,
        ceiling=_as_bool(m["ceiling"], "bounds.ceiling") if "ceiling" in m else False,
        delta_rates=_as_vector(m["delta_rates"], "bounds.delta_rates")
        if "delta_rates" in m
        else None,
        b_integral=_as_number(m["b_integral"], "bounds.b_integral") if "b_integral" in m else None,
    )


_TOP_KEYS = {
    "params",
    "perturbation",
    "initial",
    "stop",
    "policy",
    "seed",
    "sample_interval",
    "report_c1",
    "outputs",
    "bounds",
}


def config_from_dict(doc: dict) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed JSON document."""
    m = _as_mapping(doc, "config")
    _reject_unknown(m, _TOP_KEYS, "config")
    params = _parse_params(_require(m, "params", "config"))

    perturbation = PerturbationSpec()
    if "perturbation" in m:
        perturbation = _parse_perturbation(m["perturbation"])

    initial: ExplicitInitial | RandomBatch = ExplicitInitial(state=())
    if "initial" in m:
        initial = _parse_initial(m["initial"])

    stop = StopCriteria(max_flow_time=10.0)
    if "stop" in m:
        stop = _parse_stop(m["stop"])

    policy = BranchPolicy.LOWEST_INDEX_RESETS
    if "policy" in m:
        try:
            policy = BranchPolicy(m["policy"])
        except ValueError as exc:
            names = ", ".join(p.value for p in BranchPolicy)
            raise ConfigError(f"policy must be one of: {names}") from exc

    seed = _as_int(m["seed"], "seed") if "seed" in m else 0

    sample_interval: float | None | str = AUTO_SAMPLING
    if "sample_interval" in m:
        raw = m["sample_interval"]
        if raw is None or raw == AUTO_SAMPLING:
            sample_interval = raw
        else:
            sample_interval = _as_number(raw, "sample_interval")
            if sample_interval <= 0:
                raise ConfigError("field sample_interval must be positive, 'auto' or null")

    report_c1 = None
    if "report_c1" in m and m["report_c1"] is not None:
        report_c1 = _as_number(m["report_c1"], "report_c1")
        if report_c1 <= 0:
            raise ConfigError("field report_c1 must be positive")

    outputs = OutputOptions()
    if "outputs" in m:
        om = _as_mapping(m["outputs"], "outputs")
        _reject_unknown(om, {"arc_csv", "jumps_csv", "plots"}, "outputs")
        outputs = OutputOptions(
            arc_csv=_as_bool(om["arc_csv"], "outputs.arc_csv") if "arc_csv" in om else True,
            jumps_csv=_as_bool(om["jumps_csv"], "outputs.jumps_csv") if "jumps_csv" in om else True,
            plots=_as_bool(om["plots"], "outputs.plots") if "plots" in om else True,
        )

    bounds = _parse_bounds(m["bounds"]) if "bounds" in m else None

    if isinstance(initial, ExplicitInitial) and len(initial.state) not in (0, params.n):
        raise ConfigError(f"field initial.state must have length {params.n}")

    return RunConfig(
        params=params,
        perturbation=perturbation,
        initial=initial,
        stop=stop,
        policy=policy,
        seed=seed,
        sample_interval=sample_interval,
        report_c1=report_c1,
        outputs=outputs,
        bounds=bounds,
    )


def config_to_dict(cfg: RunConfig) -> dict:
    """Serialise a config back to a JSON-compatible document."""
    doc: dict[str, Any] = {
        "params": {
            "n": cfg.params.n,
            "threshold": cfg.params.threshold,
            "rate": cfg.params.rate,
            "coupling": cfg.params.coupling,
            "tolerance": cfg.params.tolerance,
        },
        "perturbation": {
            "kind": cfg.perturbation.kind.value,
            "magnitudes": list(cfg.perturbation.magnitudes),
        },
        "stop": {},
        "policy": cfg.policy.value,
        "seed": cfg.seed,
        "sample_interval": cfg.sample_interval,
        "outputs": {
            "arc_csv": cfg.outputs.arc_csv,
            "jumps_csv": cfg.outputs.jumps_csv,
            "plots": cfg.outputs.plots,
        },
    }
    if isinstance(cfg.initial, ExplicitInitial):
        doc["initial"] = {"state": list(cfg.initial.state)}
    else:
        doc["initial"] = {
            "random": {
                "count": cfg.initial.count,
                **({"seed": cfg.initial.seed} if cfg.initial.seed is not None else {}),
                "avoid_exclusion": cfg.initial.avoid_exclusion,
            }
        }
    if cfg.stop.max_flow_time is not None:
        doc["stop"]["max_flow_time"] = cfg.stop.max_flow_time
    if cfg.stop.max_jumps is not None:
        doc["stop"]["max_jumps"] = cfg.stop.max_jumps
    if cfg.report_c1 is not None:
        doc["report_c1"] = cfg.report_c1
    if cfg.bounds is not None:
        b: dict[str, Any] = {"ceiling": cfg.bounds.ceiling}
        if cfg.bounds.c2 is not None:
            b["c2"] = cfg.bounds.c2
        if cfg.bounds.c1 is not None:
            b["c1"] = cfg.bounds.c1
        if cfg.bounds.delta_rates is not None:
            b["delta_rates"] = list(cfg.bounds.delta_rates)
        if cfg.bounds.b_integral is not None:
            b["b_integral"] = cfg.bounds.b_integral
        doc["bounds"] = b
    return doc


def load_config(path) -> RunConfig:
    """Parse a JSON config file into a :class:`RunConfig`."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
