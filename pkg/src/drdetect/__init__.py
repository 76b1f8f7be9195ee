"""Distributionally robust tuning of quadratic anomaly detectors.

Given the first k moments of the detection measure — and nothing else
about its law — the package computes tight worst-case tail bounds via
small semidefinite programs, bisects them into detector thresholds with
guaranteed false-alarm rates, and quantifies the security payoff through
ellipsoidal outer bounds on the states reachable by zero-alarm sensor
attacks.
"""

from .attack_reach import (
    AttackMode,
    AttackPolicy,
    Ellipsoid,
    ReachBound,
    VolumeReport,
    noise_threshold,
    reach_bound,
    volume_comparison,
    zero_alarm_attack,
)
from .benchmark import benchmark_system, gaussian_config, laplacian_config
from .bound_engine import (
    PolyBound,
    SdpProblem,
    SdpSolution,
    build_sdp,
    chebyshev_bound,
    markov_bound,
    oracle_worst_case,
    solve_sdp,
)
from .cli_runner import ExperimentConfig, run_far, run_reach, run_tune
from .cps_sim import (
    LtiSystem,
    NoiseFamily,
    NoiseModel,
    ResidualTrace,
    empirical_false_alarm_rate,
    simulate,
    solve_dare,
)
from .detector_tuning import (
    Method,
    ThresholdResult,
    TuningError,
    chi_squared_threshold,
    closed_form_threshold,
    dr_threshold_two_moments,
    tune_threshold_sdp,
)
from .ipm import ConicProblem, ConicSolution, Status
from .moment_core import (
    HankelPair,
    MomentSequence,
    Support,
    chi_squared_moments,
    estimate_moments,
    hankel_pair,
    is_feasible,
)

__version__ = "0.1.0"

__all__ = [
    "AttackMode",
    "AttackPolicy",
    "ConicProblem",
    "ConicSolution",
    "Ellipsoid",
    "ExperimentConfig",
    "HankelPair",
    "LtiSystem",
    "Method",
    "MomentSequence",
    "NoiseFamily",
    "NoiseModel",
    "PolyBound",
    "ReachBound",
    "ResidualTrace",
    "SdpProblem",
    "SdpSolution",
    "Status",
    "Support",
    "ThresholdResult",
    "TuningError",
    "VolumeReport",
    "benchmark_system",
    "build_sdp",
    "chebyshev_bound",
    "chi_squared_moments",
    "chi_squared_threshold",
    "closed_form_threshold",
    "dr_threshold_two_moments",
    "empirical_false_alarm_rate",
    "estimate_moments",
    "gaussian_config",
    "hankel_pair",
    "is_feasible",
    "laplacian_config",
    "markov_bound",
    "noise_threshold",
    "oracle_worst_case",
    "reach_bound",
    "run_far",
    "run_reach",
    "run_tune",
    "simulate",
    "solve_dare",
    "solve_sdp",
    "tune_threshold_sdp",
    "volume_comparison",
    "zero_alarm_attack",
]
