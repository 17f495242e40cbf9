"""Pseudo-spectral simulator for coupled phase-field / incompressible-flow
dynamics on the 2-D torus, driven by truncated multiplicative Wiener forcing,
with diagnostics for conservation laws, energy balance, moment growth and
time-averaged (empirical invariant) measures."""

__version__ = "0.1.0"

from .spectral import (
    GridSpec,
    PhysicsParams,
    SpectralField,
    VelocityField,
    capillary_force,
    chemical_potential,
    convective_term,
    double_well_derivative,
    free_energy,
    inner,
    l2_norm,
    l2_norm_sq,
    leray_project,
    neg_laplacian,
    scalar_advection,
    sobolev_norm,
    spatial_mean,
    stokes_operator,
    to_physical,
    to_spectral,
)
from .noise import (
    ConditionReport,
    NoiseModel,
    WienerIncrement,
    check_conditions,
    h_apply,
    hs_norm_sq,
    make_noise_model,
    sample_increment,
)
from .integrator import (
    BlowUpError,
    ConvergenceReport,
    ScalarObserver,
    SchemeConfig,
    SimulationResult,
    SnapshotObserver,
    StepRecord,
    SystemState,
    TrajectoryWindow,
    default_stabilization,
    em_order_probe,
    simulate,
    step,
)
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint
from .diagnostics import (
    EnergyReport,
    MomentAccumulator,
    ObservableSeries,
    StateNorms,
    accumulate_moment,
    balance_residual,
    energy_report,
    holder_seminorm,
    merge_moment_accumulators,
    state_norms,
)
from .measure import (
    EmpiricalMeasure,
    FellerReport,
    ObservableSpec,
    TightnessProfile,
    WindowComparison,
    convergence_diagnostic,
    evaluate_observable,
    feller_probe,
    kb_average,
    perturb_initial,
    tightness_profile,
)
from .config import ConfigError, RunConfig, RunManifest, parse_config, serialize_config

__all__ = [name for name in dir() if not name.startswith("_")]
