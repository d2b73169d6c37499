"""Average-power analysis and phase design for two cooperating IRSs under Rician fading."""

from .baselines import (
    BaselineKind,
    NonCooperativePower,
    SingleIrsPower,
    asymptotic_gamma_baseline,
    classify_case_dnc,
    gamma_dnc,
    gamma_sgl,
    optimal_phases_dnc,
    optimal_phases_sgl,
    single_irs_scenario,
)
from .channel import assemble_rician, equivalent_channel, path_loss, phase_offset, steering_vector, wrap_phase
from .config import ConfigError, default_scenario, load_scenario, resolve_scenario
from .montecarlo import McConfig, estimate_gamma_mc, estimate_rate_mc, verify_analytic
from .optimize import OptimizerConfig, OptimizerTrace, run_optimizer
from .power import Case, CaseLabel, DoubleIrsPower, asymptotic_gamma_dirc, average_power, classify_case, gamma, rate_bound
from .scenario import ArraySpec, LinkAngles, LinkFading, PhaseShifts, Regime, ScenarioConfig

__version__ = "0.1.0"

__all__ = [
    "BaselineKind",
    "NonCooperativePower",
    "SingleIrsPower",
    "asymptotic_gamma_baseline",
    "classify_case_dnc",
    "gamma_dnc",
    "gamma_sgl",
    "optimal_phases_dnc",
    "optimal_phases_sgl",
    "single_irs_scenario",
    "assemble_rician",
    "equivalent_channel",
    "path_loss",
    "phase_offset",
    "steering_vector",
    "wrap_phase",
    "ConfigError",
    "default_scenario",
    "load_scenario",
    "resolve_scenario",
    "McConfig",
    "estimate_gamma_mc",
    "estimate_rate_mc",
    "verify_analytic",
    "OptimizerConfig",
    "OptimizerTrace",
    "run_optimizer",
    "Case",
    "CaseLabel",
    "DoubleIrsPower",
    "asymptotic_gamma_dirc",
    "average_power",
    "classify_case",
    "gamma",
    "rate_bound",
    "ArraySpec",
    "LinkAngles",
    "LinkFading",
    "PhaseShifts",
    "Regime",
    "ScenarioConfig",
]
