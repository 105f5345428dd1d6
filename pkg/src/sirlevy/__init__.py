"""Stochastic SIR toolkit: dual white-noise and compound-Poisson perturbations,
closed-form persistence/extinction thresholds, and Monte Carlo verification."""

__version__ = "0.1.0"

from .ensemble import simulate_ensemble
from .errors import (
    AssumptionViolated,
    ConfigError,
    EmptyTrajectory,
    InvalidMeasure,
    NonFiniteIntegrand,
    NonpositiveChi2,
    NonpositiveChi3,
    NumericalBlowup,
    SirLevyError,
    StepSizeTooLarge,
    TooFewSamples,
)
from .estimators import (
    EnsembleSummary,
    Histogram,
    LyapunovEstimate,
    ergodicity_check,
    lyapunov_exponent,
    moment_bound_check,
    persistence_verdict,
    stationary_histogram,
    time_average,
)
from .jumps import (
    AssumptionReport,
    JumpMeasure,
    MarkKind,
    check_assumptions,
    first_moment,
    integral_functional,
    jump_penalty,
    levy_moment,
)
from .scenarios import Scenario, load_preset, preset_names, validate_config
from .sde import (
    SimConfig,
    State,
    Trajectory,
    integrate_aux,
    integrate_deterministic,
    integrate_sir_jump,
    rng_stream,
)
from .thresholds import (
    Classification,
    EpidemicParameters,
    NoiseSpec,
    ThresholdReport,
    chi1_chi2,
    chi3,
    classify,
    r0_deterministic,
    r0s,
    r0s_hat,
)

__all__ = [
    "AssumptionReport",
    "AssumptionViolated",
    "Classification",
    "ConfigError",
    "EmptyTrajectory",
    "EnsembleSummary",
    "EpidemicParameters",
    "Histogram",
    "InvalidMeasure",
    "JumpMeasure",
    "LyapunovEstimate",
    "MarkKind",
    "NoiseSpec",
    "NonFiniteIntegrand",
    "NonpositiveChi2",
    "NonpositiveChi3",
    "NumericalBlowup",
    "Scenario",
    "SimConfig",
    "SirLevyError",
    "State",
    "StepSizeTooLarge",
    "ThresholdReport",
    "TooFewSamples",
    "Trajectory",
    "check_assumptions",
    "chi1_chi2",
    "chi3",
    "classify",
    "ergodicity_check",
    "first_moment",
    "integral_functional",
    "integrate_aux",
    "integrate_deterministic",
    "integrate_sir_jump",
    "jump_penalty",
    "levy_moment",
    "load_preset",
    "lyapunov_exponent",
    "moment_bound_check",
    "persistence_verdict",
    "preset_names",
    "r0_deterministic",
    "r0s",
    "r0s_hat",
    "rng_stream",
    "simulate_ensemble",
    "stationary_histogram",
    "time_average",
    "validate_config",
]
