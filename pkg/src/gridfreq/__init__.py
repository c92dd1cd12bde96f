"""Multi-area power-system frequency dynamics toolkit.

Swing-equation simulation with primary/secondary frequency control,
fault-event scenarios, stability-region estimation and dispatch-based
inertia analytics, plus a scenario-driven command line (``gridfreq``).
"""

from .control import (
    AceInputs,
    DelayBuffer,
    PrimaryState,
    SecondaryState,
    augmented_damping,
    primary_step,
    secondary_step,
)
from .dynamics import (
    AreaState,
    aggregate_inertia,
    ase_delta_rhs,
    coi_frequency,
    damping_from_k_load,
    multi_area_rhs,
    tie_flow,
    wrap_angle,
)
from .engine import (
    ComparisonReport,
    Event,
    Metrics,
    Scenario,
    SimOptions,
    Trajectory,
    compare_runs,
    extract_metrics,
    integrate,
    metrics_to_flat_dict,
    trajectory_to_csv,
)
from .model import (
    AreaParams,
    GridModel,
    PrimaryControlParams,
    SecondaryControlParams,
    TieLine,
    ValidatedGridModel,
    inertia_constant,
    kinetic_energy,
    load_damping_per_hz,
    m_from_h,
    stored_energy,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AceInputs",
    "AreaParams",
    "AreaState",
    "ComparisonReport",
    "DelayBuffer",
    "Event",
    "GridModel",
    "Metrics",
    "PrimaryControlParams",
    "PrimaryState",
    "Scenario",
    "SecondaryControlParams",
    "SecondaryState",
    "SimOptions",
    "TieLine",
    "Trajectory",
    "ValidatedGridModel",
    "aggregate_inertia",
    "ase_delta_rhs",
    "augmented_damping",
    "coi_frequency",
    "compare_runs",
    "damping_from_k_load",
    "extract_metrics",
    "inertia_constant",
    "integrate",
    "kinetic_energy",
    "load_damping_per_hz",
    "m_from_h",
    "metrics_to_flat_dict",
    "multi_area_rhs",
    "primary_step",
    "secondary_step",
    "stored_energy",
    "tie_flow",
    "trajectory_to_csv",
    "validate",
    "wrap_angle",
]
