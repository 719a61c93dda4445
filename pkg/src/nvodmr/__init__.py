"""Simulation and analysis toolkit for frequency-tunable AC magnetometry
with CW-ODMR of doubly RF-driven NV centers."""

from .errors import (
    ConfigError,
    ControlOffResonance,
    DegenerateSweep,
    FitDiverged,
    InsufficientResolution,
    NegativeFrequency,
    NoOptimum,
    NVODMRError,
    ParameterError,
    SingularSystem,
    StepTooLarge,
    TraceDrift,
    WeakDriveViolation,
    ZeroSlope,
)
from .oracle import (
    IntegrationConfig,
    IntegrationResult,
    default_integration_config,
    integrate_lab_frame,
    rwa_error_scan,
    scan_mw_frequencies,
    steady_state_linear_solve,
)
from .resonance import (
    DipFit,
    ResonanceEntry,
    ResonanceSet,
    fit_dips,
    resonances_bare,
    resonances_double_dressed,
    resonances_for_scheme,
    resonances_previous,
    resonant_target_condition,
    splitting_slope,
)
from .sensing import (
    LinewidthModel,
    QuadraticFit,
    ResponseCurve,
    SchemeChoice,
    SensitivityReport,
    Side,
    bandwidth,
    choose_scheme,
    contrast_response,
    demo_linewidth_model,
    mw_operating_point,
    rwa_valid_range,
    sensitivity,
    sensitivity_vs_frequency,
)
from .spin import (
    DriveConfig,
    EffectiveZFS,
    NVParameters,
    build_bare_hamiltonian,
    build_lab_hamiltonian,
    effective_zfs,
    spin_operators,
)
from .steady_state import (
    Branch,
    ModeFamily,
    OscillatorModel,
    Scheme,
    Spectrum,
    branch_model,
    contrast_at,
    default_mw_grid,
    population_p0,
    scheme_families,
    simulate_spectrum,
)

__version__ = "0.1.0"
