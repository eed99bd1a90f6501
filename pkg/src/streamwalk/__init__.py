"""Simulator and analyzer for 1d self-interacting random walks driven
by their own edge local times: walk engines, exact trapping thresholds
and limiting profiles, path diagnostics, and a Monte Carlo experiment
harness."""

from . import analysis, experiments, fastsim, profiles, reporting
from .kernels import InteractionKernel
from .profiles import (
    CriticalAlpha,
    LimitProfile,
    ProfileSystemError,
    Regime,
    RegimeClassification,
    alpha_threshold,
    boundary_streams,
    classify_regime,
    extend_profile,
    limit_profile,
    omega_of_alpha,
    phase_of,
    solve_profile_system,
    trapping_index,
)
from .walk import (
    LocalTimeField,
    StepRecord,
    TrajectoryLog,
    WalkParameters,
    WalkState,
    delta_at,
    drift_at_walker,
    geometric_checkpoints,
    log_from_path,
    make_state,
    run_walk,
    step_confined,
    step_free,
    step_probability_right,
)

__all__ = [
    "CriticalAlpha",
    "InteractionKernel",
    "LimitProfile",
    "LocalTimeField",
    "ProfileSystemError",
    "Regime",
    "RegimeClassification",
    "StepRecord",
    "TrajectoryLog",
    "WalkParameters",
    "WalkState",
    "alpha_threshold",
    "analysis",
    "boundary_streams",
    "classify_regime",
    "delta_at",
    "drift_at_walker",
    "experiments",
    "extend_profile",
    "fastsim",
    "geometric_checkpoints",
    "limit_profile",
    "log_from_path",
    "make_state",
    "omega_of_alpha",
    "phase_of",
    "profiles",
    "reporting",
    "run_walk",
    "solve_profile_system",
    "step_confined",
    "step_free",
    "step_probability_right",
    "trapping_index",
]

__version__ = "0.1.0"
