"""Grid data model: areas, tie-lines, control parameters, inertia conversions.

Conventions used throughout the package:

* power in MW (except the SI energy helpers, which only need consistent units),
  frequency in Hz, angles in rad, time in s;
* ``k_load`` is the load self-regulation coefficient: a deviation of 1 Hz
  changes the area load by ``k_load`` percent of its base power, i.e. the
  per-Hz damping is ``k_load * S_B / 100`` MW/Hz;
* tie ``coupling`` is the power transferred at sin(angle difference) = 1,
  with voltages folded in (fixed at nominal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    DanglingTieEndpoint,
    DisconnectedGraph,
    DuplicateArea,
    DuplicateTie,
    InvalidTie,
    NonPositiveBasePower,
    NonPositiveFrequency,
    NonPositiveParameter,
)

#: Frequency deviation at which the full primary reserve is activated when no
#: droop bias is configured explicitly (the 200 mHz full-activation convention).
FULL_ACTIVATION_DEVIATION_HZ = 0.2


@dataclass(frozen=True)
class PrimaryControlParams:
    """Droop-based primary reserve with activation delay, ramp and saturation.

    reserve               saturation magnitude, MW
    droop_bias            Hz per MW of response; None selects the default
                          (full reserve at 0.2 Hz deviation)
    delay                 activation dead time, s
    full_activation_time  time after a worst-case step at which the reserve is
                          fully deployed, s; the ramp slope is
                          reserve / (full_activation_time - delay)
    """

    reserve: float
    delay: float
    full_activation_time: float
    droop_bias: Optional[float] = None

    def resolved_droop(self) -> float:
        if self.droop_bias is not None:
            return self.droop_bias
        if self.reserve <= 0.0:
            return math.inf
        return FULL_ACTIVATION_DEVIATION_HZ / self.reserve

    @property
    def ramp_rate(self) -> float:
        """Rate limit in MW/s."""
        return self.reserve / (self.full_activation_time - self.delay)


@dataclass(frozen=True)
class SecondaryControlParams:
    """PI controller on the area control error (automatic generation control).

    reserve          saturation magnitude, MW
    C_p              proportional gain, dimensionless
    T_N              integral time constant, s
    response_time    time to deploy the full reserve, s; sets the output ramp
                     limit reserve / response_time
    frequency_bias   ACE frequency weighting, MW/Hz; None selects the default
                     (primary droop gain plus load-damping equivalent)
    activation_delay dead time before the controller sees the ACE, s
    ace_filter_time  first-order smoothing of the ACE measurement, s
                     (0 disables it; nonzero values keep the slow dispatch
                     loop from reacting to inter-area swings)
    """

    reserve: float
    C_p: float
    T_N: float
    response_time: float
    frequency_bias: Optional[float] = None
    activation_delay: float = 0.0
    ace_filter_time: float = 0.0


@dataclass(frozen=True)
class AreaParams:
    """One aggregated grid area.

    H       inertia constant, s (0 is legal for a fully inverter-fed area but
            cannot be simulated dynamically)
    S_B     base (rated) power, MW
    k_load  load damping, percent of S_B per Hz
    """

    id: str
    H: float
    S_B: float
    k_load: float
    primary: Optional[PrimaryControlParams] = None
    secondary: Optional[SecondaryControlParams] = None


@dataclass(frozen=True)
class TieLine:
    """Transmission corridor between two areas.

    rating    protection/thermal threshold, MW
    coupling  synchronizing power at sin = 1, MW; None defaults to the rating
    """

    from_area: str
    to_area: str
    rating: float
    coupling: Optional[float] = None

    def key(self) -> tuple[str, str]:
        return (self.from_area, self.to_area)


@dataclass(frozen=True)
class GridModel:
    f0: float
    areas: tuple[AreaParams, ...]
    ties: tuple[TieLine, ...]

    def __init__(self, f0, areas, ties=()):
        object.__setattr__(self, "f0", float(f0))
        object.__setattr__(self, "areas", tuple(areas))
        object.__setattr__(self, "ties", tuple(ties))


@dataclass(frozen=True)
class ValidatedGridModel:
    """A checked model with resolved defaults and area indices.

    Immutable after construction; safe to share across concurrent runs.
    """

    f0: float
    areas: tuple[AreaParams, ...]
    ties: tuple[TieLine, ...]

    @property
    def area_index(self) -> dict[str, int]:
        return {a.id: i for i, a in enumerate(self.areas)}

    def area(self, area_id: str) -> AreaParams:
        return self.areas[self.area_index[area_id]]

    def tie_endpoints(self) -> list[tuple[int, int, float]]:
        """Resolved (index_i, index_j, coupling) triples."""
        idx = self.area_index
        return [(idx[t.from_area], idx[t.to_area], t.coupling) for t in self.ties]


def _require_positive(value, field, strict=True, exc=NonPositiveParameter):
    if value is None or not math.isfinite(value):
        raise exc(f"{field} must be a finite number, got {value!r}")
    if strict and value <= 0.0:
        raise exc(f"{field} must be > 0, got {value!r}")
    if not strict and value < 0.0:
        raise exc(f"{field} must be >= 0, got {value!r}")


def load_damping_per_hz(k_load: float, s_b_mw: float) -> float:
    """Per-Hz load damping in MW/Hz: k_load percent of base power per Hz."""
    return k_load * s_b_mw / 100.0


def _resolve_area(area: AreaParams) -> AreaParams:
    _require_positive(area.H, f"areas[{area.id}].H", strict=False)
    _require_positive(area.S_B, f"areas[{area.id}].S_B")
    _require_positive(area.k_load, f"areas[{area.id}].k_load")
    primary = area.primary
    if primary is not None:
        _require_positive(primary.reserve, f"areas[{area.id}].primary.reserve", strict=False)
        _require_positive(primary.delay, f"areas[{area.id}].primary.delay", strict=False)
        if not primary.full_activation_time > primary.delay:
            raise NonPositiveParameter(
                f"areas[{area.id}].primary.full_activation_time must exceed the "
                f"delay ({primary.delay}), got {primary.full_activation_time}"
            )
        primary = replace(primary, droop_bias=primary.resolved_droop())
        _require_positive(primary.droop_bias, f"areas[{area.id}].primary.droop_bias")
    secondary = area.secondary
    if secondary is not None:
        _require_positive(secondary.reserve, f"areas[{area.id}].secondary.reserve", strict=False)
        _require_positive(secondary.C_p, f"areas[{area.id}].secondary.C_p", strict=False)
        _require_positive(secondary.T_N, f"areas[{area.id}].secondary.T_N")
        _require_positive(secondary.response_time, f"areas[{area.id}].secondary.response_time")
        _require_positive(
            secondary.activation_delay, f"areas[{area.id}].secondary.activation_delay",
            strict=False,
        )
        _require_positive(
            secondary.ace_filter_time, f"areas[{area.id}].secondary.ace_filter_time",
            strict=False,
        )
        if secondary.frequency_bias is None:
            gain = 0.0
            if primary is not None and math.isfinite(primary.droop_bias):
                gain = 1.0 / primary.droop_bias
            bias = gain + load_damping_per_hz(area.k_load, area.S_B)
            secondary = replace(secondary, frequency_bias=bias)
        _require_positive(secondary.frequency_bias, f"areas[{area.id}].secondary.frequency_bias")
    return replace(area, primary=primary, secondary=secondary)


def validate(model: GridModel | ValidatedGridModel) -> ValidatedGridModel:
    """Check all model invariants and resolve defaults. Idempotent."""
    if isinstance(model, ValidatedGridModel):
        return model
    _require_positive(model.f0, "f0", exc=NonPositiveFrequency)
    if not model.areas:
        raise NonPositiveParameter("model must declare at least one area")

    seen: set[str] = set()
    for area in model.areas:
        if area.id in seen:
            raise DuplicateArea(f"area id {area.id!r} declared twice")
        seen.add(area.id)
    areas = tuple(_resolve_area(a) for a in model.areas)

    ties = []
    pairs: set[frozenset[str]] = set()
    for n, tie in enumerate(model.ties):
        if tie.from_area == tie.to_area:
            raise InvalidTie(f"ties[{n}] connects area {tie.from_area!r} to itself")
        for end in (tie.from_area, tie.to_area):
            if end not in seen:
                raise DanglingTieEndpoint(f"ties[{n}] references unknown area {end!r}")
        pair = frozenset((tie.from_area, tie.to_area))
        if pair in pairs:
            raise DuplicateTie(f"ties[{n}] duplicates the {tie.from_area}-{tie.to_area} pair")
        pairs.add(pair)
        _require_positive(tie.rating, f"ties[{n}].rating")
        coupling = tie.coupling if tie.coupling is not None else tie.rating
        _require_positive(coupling, f"ties[{n}].coupling")
        ties.append(replace(tie, coupling=coupling))

    # connectivity over the tie graph (a single area is trivially connected)
    if len(areas) > 1:
        adjacency: dict[str, set[str]] = {a.id: set() for a in areas}
        for tie in ties:
            adjacency[tie.from_area].add(tie.to_area)
            adjacency[tie.to_area].add(tie.from_area)
        reached = {areas[0].id}
        frontier = [areas[0].id]
        while frontier:
            nxt = frontier.pop()
            for neigh in adjacency[nxt]:
                if neigh not in reached:
                    reached.add(neigh)
                    frontier.append(neigh)
        if len(reached) != len(areas):
            missing = sorted(a.id for a in areas if a.id not in reached)
            raise DisconnectedGraph(f"areas {missing} are not connected to {areas[0].id!r}")

    return ValidatedGridModel(f0=model.f0, areas=areas, ties=tuple(ties))


# --- elementary inertia conversions ------------------------------------------

def kinetic_energy(moment_of_inertia: float, machine_hz: float) -> float:
    """Rotational energy 0.5 * J * (2*pi*f)^2 of a machine spinning at f Hz."""
    if moment_of_inertia < 0.0:
        raise NonPositiveParameter(f"moment_of_inertia must be >= 0, got {moment_of_inertia}")
    if machine_hz < 0.0:
        raise NonPositiveParameter(f"machine_hz must be >= 0, got {machine_hz}")
    return 0.5 * moment_of_inertia * (2.0 * math.pi * machine_hz) ** 2


def inertia_constant(kinetic_energy_j: float, base_power_w: float) -> float:
    """Seconds of rated power deliverable from stored energy: H = E / S_B.

    Any consistent unit pair works (J and W, or MJ and MW).
    """
    if base_power_w <= 0.0:
        raise NonPositiveBasePower(f"base power must be > 0, got {base_power_w}")
    return kinetic_energy_j / base_power_w


def stored_energy(h_s: float, base_power_w: float) -> float:
    """Inverse of :func:`inertia_constant`: E = H * S_B."""
    if base_power_w <= 0.0:
        raise NonPositiveBasePower(f"base power must be > 0, got {base_power_w}")
    return h_s * base_power_w


def m_from_h(h_s: float, base_power_mw: float, f0_hz: float) -> float:
    """Angular-momentum style inertia M = 2*H*S_B / (2*pi*f0), MW*s^2/rad."""
    if f0_hz <= 0.0:
        raise NonPositiveFrequency(f"f0 must be > 0, got {f0_hz}")
    return 2.0 * h_s * base_power_mw / (2.0 * math.pi * f0_hz)
