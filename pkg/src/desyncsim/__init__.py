"""Simulation and verification of desynchronization in impulse-coupled
oscillator networks: exact event-driven arcs, the desynchronization set and
its line distance, convergence-time and robustness bounds, and perturbed
variants of the nominal dynamics."""

from .analysis import (
    ArcVerification,
    ConvergenceBound,
    RobustnessBound,
    asymptotic_distance_bound,
    convergence_time_bound,
    double_geometric_sum,
    flow_perturbation_cbar,
    flow_rate_bound,
    geometric_sum,
    integrable_perturbation_bound,
    max_exclusion_distance,
    perturbation_series,
    steady_state_v,
    verify_arc,
)
from .config import (
    BoundQuery,
    ConfigError,
    ExplicitInitial,
    OutputOptions,
    RandomBatch,
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from .desync import (
    MAX_ENUMERATED_N,
    AnchorPoint,
    CapacityError,
    DesyncSet,
    desync_condition_residual,
    desync_condition_residuals,
    distance_to_line,
    enumerate_anchors,
    gamma_matrix,
    lyapunov_v,
    lyapunov_v_fast,
    lyapunov_v_many,
    solve_sorted_anchor_closed_form,
    solve_sorted_anchor_elimination,
)
from .model import (
    DEFAULT_TOLERANCE,
    BranchPolicy,
    HybridTime,
    OscillatorParams,
    as_state,
    in_exclusion_set,
    in_flow_set,
    in_jump_set,
    jump_map,
    rank_order,
)
from .perturb import (
    NOMINAL,
    PerturbationKind,
    PerturbationSpec,
    effective_rates,
    effective_thresholds,
    jump_outcome,
    perturbed_jump,
    validate_spec,
)
from .simulate import (
    AUTO_SAMPLING,
    HybridArc,
    JumpRecord,
    StopCriteria,
    ZenoError,
    firing_separations,
    interjump_gaps,
    sample_initial_states,
    simulate,
    time_to_next_jump,
    write_arc_csv,
    write_jumps_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ArcVerification",
    "ConvergenceBound",
    "RobustnessBound",
    "asymptotic_distance_bound",
    "convergence_time_bound",
    "double_geometric_sum",
    "flow_perturbation_cbar",
    "flow_rate_bound",
    "geometric_sum",
    "integrable_perturbation_bound",
    "max_exclusion_distance",
    "perturbation_series",
    "steady_state_v",
    "verify_arc",
    "BoundQuery",
    "ConfigError",
    "ExplicitInitial",
    "OutputOptions",
    "RandomBatch",
    "RunConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "save_config",
    "MAX_ENUMERATED_N",
    "AnchorPoint",
    "CapacityError",
    "DesyncSet",
    "desync_condition_residual",
    "desync_condition_residuals",
    "distance_to_line",
    "enumerate_anchors",
    "gamma_matrix",
    "lyapunov_v",
    "lyapunov_v_fast",
    "lyapunov_v_many",
    "solve_sorted_anchor_closed_form",
    "solve_sorted_anchor_elimination",
    "DEFAULT_TOLERANCE",
    "BranchPolicy",
    "HybridTime",
    "OscillatorParams",
    "as_state",
    "in_exclusion_set",
    "in_flow_set",
    "in_jump_set",
    "jump_map",
    "rank_order",
    "NOMINAL",
    "PerturbationKind",
    "PerturbationSpec",
    "effective_rates",
    "effective_thresholds",
    "jump_outcome",
    "perturbed_jump",
    "validate_spec",
    "AUTO_SAMPLING",
    "HybridArc",
    "JumpRecord",
    "StopCriteria",
    "ZenoError",
    "firing_separations",
    "interjump_gaps",
    "sample_initial_states",
    "simulate",
    "time_to_next_jump",
    "write_arc_csv",
    "write_jumps_csv",
]
