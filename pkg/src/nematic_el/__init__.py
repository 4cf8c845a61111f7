"""Pseudo-spectral simulator for regularised Ericksen-Leslie nematic liquid crystal models."""
from .coefficients import (
    PRESETS,
    LeslieCoefficients,
    ModelParams,
    ValidationReport,
    coercivity_constants,
    derive_lambdas,
    preset,
    validate_constraints,
)
from .config import ConfigError, SimConfig, emit_config, parse_config
from .diagnostics import (
    ConvergenceReport,
    EnergyRecord,
    convergence_monitor,
    dissipation_components,
    dissipative_bound_check,
    energy_budget_residual,
    equilibrium_residual,
    steady_state_solve,
    total_energy,
)
from .dynamics import (
    BlowUpError,
    ForcingSpec,
    SimState,
    StepReport,
    System,
    forcing_eval,
    max_principle_monitor,
    rhs_director,
    rhs_velocity,
    step_imex,
)
from .io import read_records_csv, read_snapshot, write_records_csv, write_snapshot
from .runner import RunResult, run_simulation
from .spectral import Grid, SpectralField

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "LeslieCoefficients", "ModelParams", "ValidationReport", "coercivity_constants",
    "derive_lambdas", "preset", "validate_constraints", "ConfigError", "SimConfig", "emit_config",
    "parse_config", "ConvergenceReport", "EnergyRecord", "convergence_monitor", "dissipation_components",
    "dissipative_bound_check", "energy_budget_residual", "equilibrium_residual", "steady_state_solve",
    "total_energy", "BlowUpError", "ForcingSpec", "SimState", "StepReport", "System", "forcing_eval",
    "max_principle_monitor", "rhs_director", "rhs_velocity", "step_imex", "read_records_csv",
    "read_snapshot", "write_records_csv", "write_snapshot", "RunResult", "run_simulation", "Grid",
    "SpectralField",
]
