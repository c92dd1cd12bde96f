"""Canned experiment setups shared by scripts, tests and the CLI examples.

The phase-portrait cases compare one disturbed area (varying inertia and
damping) against a nominal neighbor, both anchored to a stiff reference bus.
The disturbance is a staged cascade: six onset steps spaced to avoid ringing
up the local mode, a dwell long enough to settle at the shifted equilibrium,
then a two-stage restoration whose spacing rings the low-inertia area.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import damping_from_k_load
from .engine import Event
from .model import AreaParams, GridModel, TieLine, ValidatedGridModel, validate

PHASE_BASE_POWER_MW = 115000.0
PHASE_ANCHOR_COUPLING_MW = 60000.0
PHASE_TIE_COUPLING_MW = 1500.0
PHASE_TIE_RATING_MW = 2875.0
PHASE_FAULT_MW = 48000.0
PHASE_ONSET_STEPS = 6
PHASE_ONSET_GAP_S = 4.16
PHASE_ONSET_START_S = 1.0
PHASE_RESTORE_START_S = 45.0
PHASE_RESTORE_GAP_S = 6.4
PHASE_HORIZON_S = 110.0
PHASE_DT_S = 0.01
PHASE_REFERENCE = "REF"


@dataclass(frozen=True)
class PhaseCase:
    name: str
    description: str
    model: ValidatedGridModel
    damping: tuple[float, ...]
    events: tuple[Event, ...]
    horizon: float
    dt: float
    reference_area: str


def _phase_model(h_disturbed: float, k_load_disturbed: float) -> ValidatedGridModel:
    areas = [
        AreaParams(id="I", H=h_disturbed, S_B=PHASE_BASE_POWER_MW, k_load=k_load_disturbed),
        AreaParams(id="II", H=6.0, S_B=PHASE_BASE_POWER_MW, k_load=1.5),
        AreaParams(id=PHASE_REFERENCE, H=6.0, S_B=PHASE_BASE_POWER_MW, k_load=1.5),
    ]
    ties = [
        TieLine("I", "II", rating=PHASE_TIE_RATING_MW, coupling=PHASE_TIE_COUPLING_MW),
        TieLine("I", PHASE_REFERENCE, rating=PHASE_TIE_RATING_MW, coupling=PHASE_ANCHOR_COUPLING_MW),
        TieLine("II", PHASE_REFERENCE, rating=PHASE_TIE_RATING_MW, coupling=PHASE_ANCHOR_COUPLING_MW),
    ]
    return validate(GridModel(f0=50.0, areas=areas, ties=ties))


def phase_events() -> tuple[Event, ...]:
    step = PHASE_FAULT_MW / PHASE_ONSET_STEPS
    events = [
        Event(round(PHASE_ONSET_START_S + i * PHASE_ONSET_GAP_S, 2),
              "step_power_imbalance", "I", power=-step)
        for i in range(PHASE_ONSET_STEPS)
    ]
    half = PHASE_FAULT_MW / 2.0
    events.append(Event(PHASE_RESTORE_START_S, "step_power_imbalance", "I", power=half))
    events.append(
        Event(round(PHASE_RESTORE_START_S + PHASE_RESTORE_GAP_S, 2),
              "step_power_imbalance", "I", power=half)
    )
    return tuple(events)


_PHASE_CASES = {
    "high_inertia_low_damping": (6.0, 1.5, "disturbed area at H = 6 s, k_load = 1.5"),
    "low_inertia_low_damping": (3.0, 1.5, "disturbed area at H = 3 s, k_load = 1.5"),
    "low_inertia_high_damping": (3.0, 4.5, "disturbed area at H = 3 s, k_load = 4.5"),
}


def phase_case_names() -> tuple[str, ...]:
    return tuple(_PHASE_CASES)


def phase_case(name: str) -> PhaseCase:
    """Build one of the named phase-portrait cases."""
    h, k_load, description = _PHASE_CASES[name]
    model = _phase_model(h, k_load)
    damping = tuple(damping_from_k_load(a.k_load, a.S_B) for a in model.areas)
    return PhaseCase(
        name=name,
        description=description,
        model=model,
        damping=damping,
        events=phase_events(),
        horizon=PHASE_HORIZON_S,
        dt=PHASE_DT_S,
        reference_area=PHASE_REFERENCE,
    )
