"""Time-domain integration of the closed-loop multi-area model.

Fixed-step explicit 4th-order (RK4) integration of the area angles and
speeds; controller states (delay histories, ramp limiters, ACE integrals)
advance once per step by explicit accumulation. Events are applied exactly at
step boundaries, so identical inputs give bit-identical trajectories.

The power driving the swing dynamics over a step is the rate-limiter
consistent predicted window mean of the controller output (clipped linear
extrapolation of the last two outputs); recorded controller outputs are the
exact per-step values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .control import AceInputs, PrimaryState, SecondaryState, primary_step, secondary_step
from .dynamics import TWO_PI, damping_from_k_load, wrap_angle
from .errors import (
    EmptyTrajectory,
    EventOffGrid,
    NonFiniteState,
    SimulationError,
    TopologyMismatch,
    ZeroInertia,
)
from .model import GridModel, ValidatedGridModel, m_from_h, validate

logger = logging.getLogger(__name__)

#: Deviation beyond which the model is considered to have left its validity
#: range and the run is aborted with a partial trajectory.
DIVERGENCE_LIMIT_HZ = 5.0

STEP_POWER_IMBALANCE = "step_power_imbalance"
CLEAR_FAULT = "clear_fault"


@dataclass(frozen=True)
class Event:
    """A scheduled disturbance.

    kind "step_power_imbalance": adds ``power`` MW to ``area`` at ``time`` for
    ``duration`` seconds (persistent when duration is None).
    kind "clear_fault": removes all active imbalances in ``area``.
    """

    time: float
    kind: str
    area: str
    power: Optional[float] = None
    duration: Optional[float] = None


@dataclass(frozen=True)
class SimOptions:
    """Controls on/off, globally and per area, plus reference-area pinning."""

    primary: bool = True
    secondary: bool = True
    load_damping: bool = True
    per_area: Mapping[str, Mapping[str, bool]] = field(default_factory=dict)
    reference_areas: tuple[str, ...] = ()

    def primary_enabled(self, area_id: str) -> bool:
        return bool(self.per_area.get(area_id, {}).get("primary", self.primary))

    def secondary_enabled(self, area_id: str) -> bool:
        return bool(self.per_area.get(area_id, {}).get("secondary", self.secondary))


@dataclass(frozen=True)
class Scenario:
    model: ValidatedGridModel
    events: tuple[Event, ...]
    horizon: float
    dt: float = 0.01
    record_stride: int = 10
    options: SimOptions = field(default_factory=SimOptions)


@dataclass
class Trajectory:
    """Uniformly sampled run record. Angles are wrapped to (-pi, pi]."""

    f0: float
    area_ids: tuple[str, ...]
    tie_keys: tuple[tuple[str, str], ...]
    time: np.ndarray
    f_dev: np.ndarray
    delta: np.ndarray
    p_primary: np.ndarray
    p_secondary: np.ndarray
    tie_flow: np.ndarray
    tie_flow_rate: np.ndarray
    record_dt: float

    @property
    def frequency(self) -> np.ndarray:
        return self.f0 + self.f_dev


def _steps_on_grid(value: float, dt: float, what: str) -> int:
    steps = value / dt
    rounded = round(steps)
    if abs(steps - rounded) > 1e-6:
        raise EventOffGrid(
            f"{what} = {value} s is not a multiple of dt = {dt} s"
        )
    return int(rounded)


def validate_scenario(scenario: Scenario) -> int:
    """Check scenario invariants; returns the number of integration steps."""
    if scenario.dt <= 0.0:
        raise SimulationError(f"dt must be > 0, got {scenario.dt}")
    if scenario.horizon <= 0.0:
        raise SimulationError(f"horizon must be > 0, got {scenario.horizon}")
    if scenario.record_stride < 1:
        raise SimulationError(f"record_stride must be >= 1, got {scenario.record_stride}")
    n_steps = _steps_on_grid(scenario.horizon, scenario.dt, "horizon")

    known = {a.id for a in scenario.model.areas}
    for ref in scenario.options.reference_areas:
        if ref not in known:
            raise SimulationError(f"reference area {ref!r} is not in the model")
    for area_id in scenario.options.per_area:
        if area_id not in known:
            raise SimulationError(f"per-area control toggle names unknown area {area_id!r}")

    last_time = -math.inf
    for n, event in enumerate(scenario.events):
        if event.kind not in (STEP_POWER_IMBALANCE, CLEAR_FAULT):
            raise SimulationError(f"events[{n}]: unknown kind {event.kind!r}")
        if event.area not in known:
            raise SimulationError(f"events[{n}] references unknown area {event.area!r}")
        if event.time < last_time:
            raise SimulationError(f"events[{n}] is not sorted by time")
        last_time = event.time
        if not 0.0 <= event.time <= scenario.horizon:
            raise SimulationError(
                f"events[{n}] time {event.time} outside [0, {scenario.horizon}]"
            )
        _steps_on_grid(event.time, scenario.dt, f"events[{n}].time")
        if event.kind == STEP_POWER_IMBALANCE:
            if event.power is None or not math.isfinite(event.power):
                raise SimulationError(f"events[{n}] needs a finite power, got {event.power!r}")
            if event.duration is not None:
                if event.duration <= 0.0:
                    raise SimulationError(f"events[{n}] duration must be > 0")
                _steps_on_grid(event.duration, scenario.dt, f"events[{n}].duration")

    refs = set(scenario.options.reference_areas)
    for area in scenario.model.areas:
        if area.id not in refs and area.H <= 0.0:
            raise ZeroInertia(
                f"area {area.id!r} has H = {area.H} and cannot be integrated; "
                "pin it as a reference area or give it inertia"
            )
    return n_steps


def event_schedule(
    events: Sequence[Event],
    dt: float,
    n_steps: int,
    area_index: Mapping[str, int],
) -> dict[int, list[tuple[int, float]]]:
    """Flatten events into per-step power changes, honoring clear_fault."""
    active: list[dict] = []
    for event in events:
        step = round(event.time / dt)
        if event.kind == STEP_POWER_IMBALANCE:
            end = None
            if event.duration is not None:
                end = step + round(event.duration / dt)
            active.append(
                {"area": area_index[event.area], "power": event.power, "start": step, "end": end}
            )
        else:  # clear_fault
            for entry in active:
                if entry["area"] != area_index[event.area]:
                    continue
                if entry["start"] <= step and (entry["end"] is None or entry["end"] > step):
                    entry["end"] = step
    changes: dict[int, list[tuple[int, float]]] = {}
    for entry in active:
        changes.setdefault(entry["start"], []).append((entry["area"], entry["power"]))
        if entry["end"] is not None and entry["end"] <= n_steps:
            changes.setdefault(entry["end"], []).append((entry["area"], -entry["power"]))
    return changes


def integrate(scenario: Scenario) -> Trajectory:
    """Run the scenario and return its trajectory.

    Raises NonFiniteState (with the partial trajectory attached) if any area
    deviates beyond the divergence limit or the state stops being finite.
    """
    model = scenario.model
    if isinstance(model, GridModel):
        model = validate(model)
    n_steps = validate_scenario(scenario)
    options = scenario.options
    dt = scenario.dt
    stride = scenario.record_stride
    f0 = model.f0
    n = len(model.areas)
    area_ids = tuple(a.id for a in model.areas)
    is_ref = [a.id in options.reference_areas for a in model.areas]
    dynamic = [i for i in range(n) if not is_ref[i]]

    m_inv = [0.0] * n
    for i in dynamic:
        m_inv[i] = 1.0 / m_from_h(model.areas[i].H, model.areas[i].S_B, f0)
    k = [
        damping_from_k_load(a.k_load, a.S_B) if options.load_damping else 0.0
        for a in model.areas
    ]
    ties = model.tie_endpoints()
    tie_keys = tuple(t.key() for t in model.ties)

    primaries: list = [None] * n
    secondaries: list = [None] * n
    for i, area in enumerate(model.areas):
        if not is_ref[i] and area.primary is not None and options.primary_enabled(area.id):
            primaries[i] = (area.primary, PrimaryState())
        if not is_ref[i] and area.secondary is not None and options.secondary_enabled(area.id):
            secondaries[i] = (area.secondary, SecondaryState())
    need_tie_dev = any(s is not None for s in secondaries)

    changes = event_schedule(scenario.events, dt, n_steps, model.area_index)

    n_rec = n_steps // stride + 1
    n_ties = len(ties)
    rec_time = np.empty(n_rec)
    rec_fdev = np.empty((n_rec, n))
    rec_delta = np.empty((n_rec, n))
    rec_prim = np.zeros((n_rec, n))
    rec_sec = np.zeros((n_rec, n))
    rec_flow = np.empty((n_rec, n_ties))
    rec_rate = np.empty((n_rec, n_ties))

    delta = [0.0] * n
    omega = [0.0] * n
    p_ext = [0.0] * n
    p_prim = [0.0] * n
    p_sec = [0.0] * n
    prev_prim = [0.0] * n
    prev_sec = [0.0] * n

    sin = math.sin
    cos = math.cos
    half = 0.5 * dt
    sixth = dt / 6.0

    def rhs(d: list, w: list, drive: list) -> tuple[list, list]:
        net = drive[:]
        for i, j, coupling in ties:
            flow = coupling * sin(d[i] - d[j])
            net[i] -= flow
            net[j] += flow
        dd = [0.0] * n
        dw = [0.0] * n
        for i in dynamic:
            dd[i] = w[i]
            dw[i] = (net[i] - k[i] * w[i]) * m_inv[i]
        return dd, dw

    def snapshot(rec: int, t: float):
        rec_time[rec] = t
        for i in range(n):
            rec_fdev[rec, i] = omega[i] / TWO_PI
            rec_delta[rec, i] = wrap_angle(delta[i])
            rec_prim[rec, i] = p_prim[i]
            rec_sec[rec, i] = p_sec[i]
        for col, (i, j, coupling) in enumerate(ties):
            diff = delta[i] - delta[j]
            rec_flow[rec, col] = coupling * sin(diff)
            rec_rate[rec, col] = coupling * cos(diff) * (omega[i] - omega[j])

    def partial(records: int) -> Trajectory:
        return Trajectory(
            f0=f0,
            area_ids=area_ids,
            tie_keys=tie_keys,
            time=rec_time[:records].copy(),
            f_dev=rec_fdev[:records].copy(),
            delta=rec_delta[:records].copy(),
            p_primary=rec_prim[:records].copy(),
            p_secondary=rec_sec[:records].copy(),
            tie_flow=rec_flow[:records].copy(),
            tie_flow_rate=rec_rate[:records].copy(),
            record_dt=dt * stride,
        )

    records = 0
    for s in range(n_steps + 1):
        t = s * dt
        if s in changes:
            for i, power in changes[s]:
                p_ext[i] += power

        tie_dev = None
        if need_tie_dev:
            tie_dev = [0.0] * n
            for i, j, coupling in ties:
                flow = coupling * sin(delta[i] - delta[j])
                tie_dev[i] += flow
                tie_dev[j] -= flow

        for i in range(n):
            if primaries[i] is not None:
                params, state = primaries[i]
                _, p_prim[i] = primary_step(state, omega[i] / TWO_PI, params, dt)
            if secondaries[i] is not None:
                params, state = secondaries[i]
                ace = AceInputs(tie_dev[i], omega[i] / TWO_PI, params.frequency_bias)
                _, p_sec[i] = secondary_step(state, ace, params, dt)

        if s % stride == 0:
            snapshot(records, t)
            records += 1

        bad = None
        for i in dynamic:
            fd = omega[i] / TWO_PI
            if not math.isfinite(fd) or abs(fd) > DIVERGENCE_LIMIT_HZ:
                bad = (i, fd)
                break
        if bad is not None:
            traj = partial(records)
            raise NonFiniteState(
                f"area {area_ids[bad[0]]!r} deviated to {bad[1]!r} Hz at t = {t} s; "
                "model validity exceeded",
                trajectory=traj,
            )

        if s == n_steps:
            break

        drive = p_ext[:]
        for i in range(n):
            if primaries[i] is not None:
                reserve = primaries[i][0].reserve
                mid = 1.5 * p_prim[i] - 0.5 * prev_prim[i]
                drive[i] += max(-reserve, min(reserve, mid))
                prev_prim[i] = p_prim[i]
            if secondaries[i] is not None:
                reserve = secondaries[i][0].reserve
                mid = 1.5 * p_sec[i] - 0.5 * prev_sec[i]
                drive[i] += max(-reserve, min(reserve, mid))
                prev_sec[i] = p_sec[i]

        d1, w1 = rhs(delta, omega, drive)
        d2, w2 = rhs(
            [delta[i] + half * d1[i] for i in range(n)],
            [omega[i] + half * w1[i] for i in range(n)],
            drive,
        )
        d3, w3 = rhs(
            [delta[i] + half * d2[i] for i in range(n)],
            [omega[i] + half * w2[i] for i in range(n)],
            drive,
        )
        d4, w4 = rhs(
            [delta[i] + dt * d3[i] for i in range(n)],
            [omega[i] + dt * w3[i] for i in range(n)],
            drive,
        )
        for i in dynamic:
            delta[i] += sixth * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i])
            omega[i] += sixth * (w1[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i])

    logger.debug("integrated %d steps over %d areas", n_steps, n)
    return partial(records)


# --- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    f0: float
    area_ids: tuple[str, ...]
    tie_keys: tuple[tuple[str, str], ...]
    nadir_hz: dict
    max_rocof_hz_per_s: dict
    settling_time_s: dict
    tie_peak_mw: dict
    tie_peak_rate_mw_per_s: dict
    crossings: tuple


SETTLING_BAND_HZ = 0.010


def _central_diff(values: np.ndarray, h: float) -> np.ndarray:
    if values.shape[0] < 3:
        return np.zeros(0)
    return (values[2:] - values[:-2]) / (2.0 * h)


def extract_metrics(traj: Trajectory, thresholds: Sequence[float] = ()) -> Metrics:
    """Post-run metrics on the recorded grid; derivatives by central differences."""
    if traj.time.size == 0:
        raise EmptyTrajectory("trajectory holds no records")
    h = traj.record_dt
    nadir = {}
    rocof = {}
    settled = {}
    for col, area in enumerate(traj.area_ids):
        fdev = traj.f_dev[:, col]
        nadir[area] = float(traj.f0 + fdev.min())
        diffs = _central_diff(fdev, h)
        rocof[area] = float(np.abs(diffs).max()) if diffs.size else 0.0
        outside = np.nonzero(np.abs(fdev) >= SETTLING_BAND_HZ)[0]
        if outside.size == 0:
            settled[area] = float(traj.time[0])
        elif outside[-1] == traj.time.size - 1:
            settled[area] = None
        else:
            settled[area] = float(traj.time[outside[-1] + 1])

    tie_peak = {}
    tie_rate = {}
    for col, key in enumerate(traj.tie_keys):
        name = f"{key[0]}-{key[1]}"
        flow = traj.tie_flow[:, col]
        tie_peak[name] = float(np.abs(flow).max())
        diffs = _central_diff(flow, h)
        tie_rate[name] = float(np.abs(diffs).max()) if diffs.size else 0.0

    crossings = []
    freq = traj.f0 + traj.f_dev
    low = freq.min(axis=1)
    high = freq.max(axis=1)
    for th in thresholds:
        if th < traj.f0:
            hit = np.nonzero(low <= th)[0]
        elif th > traj.f0:
            hit = np.nonzero(high >= th)[0]
        else:
            hit = np.zeros(0, dtype=int)
        crossings.append((float(th), float(traj.time[hit[0]]) if hit.size else None))

    return Metrics(
        f0=traj.f0,
        area_ids=traj.area_ids,
        tie_keys=traj.tie_keys,
        nadir_hz=nadir,
        max_rocof_hz_per_s=rocof,
        settling_time_s=settled,
        tie_peak_mw=tie_peak,
        tie_peak_rate_mw_per_s=tie_rate,
        crossings=tuple(crossings),
    )


@dataclass(frozen=True)
class ComparisonReport:
    tie_peak_ratio: dict
    tie_rate_ratio: dict
    nadir_depth_ratio: dict


def _ratio(variant: float, base: float) -> float:
    if base == 0.0:
        return 1.0 if variant == 0.0 else math.inf
    return variant / base


def compare_runs(base: Metrics, variant: Metrics) -> ComparisonReport:
    """Peak-flow, flow-derivative and nadir-depth ratios (variant over base)."""
    if base.area_ids != variant.area_ids or base.tie_keys != variant.tie_keys:
        raise TopologyMismatch(
            f"runs disagree on topology: {base.area_ids}/{base.tie_keys} vs "
            f"{variant.area_ids}/{variant.tie_keys}"
        )
    tie_peak = {
        key: _ratio(variant.tie_peak_mw[key], base.tie_peak_mw[key])
        for key in base.tie_peak_mw
    }
    tie_rate = {
        key: _ratio(variant.tie_peak_rate_mw_per_s[key], base.tie_peak_rate_mw_per_s[key])
        for key in base.tie_peak_rate_mw_per_s
    }
    depth = {
        area: _ratio(variant.f0 - variant.nadir_hz[area], base.f0 - base.nadir_hz[area])
        for area in base.area_ids
    }
    return ComparisonReport(
        tie_peak_ratio=tie_peak, tie_rate_ratio=tie_rate, nadir_depth_ratio=depth
    )


# --- export -------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write the trajectory as CSV with a leading unit-comment line.

    Identical trajectories produce byte-identical files.
    """
    columns = ["time"]
    for area in traj.area_ids:
        columns += [f"f_{area}", f"delta_{area}", f"p_prim_{area}", f"p_sec_{area}"]
    for i, j in traj.tie_keys:
        columns += [f"flow_{i}-{j}", f"flow_rate_{i}-{j}"]
    with open(path, "w", newline="") as out:
        out.write(
            "# units: time s, f Hz, delta rad (wrapped to (-pi, pi]), "
            "p_prim/p_sec MW, flow MW, flow_rate MW/s\n"
        )
        out.write(",".join(columns) + "\n")
        freq = traj.frequency
        for row in range(traj.time.shape[0]):
            cells = [repr(float(traj.time[row]))]
            for col in range(len(traj.area_ids)):
                cells += [
                    repr(float(freq[row, col])),
                    repr(float(traj.delta[row, col])),
                    repr(float(traj.p_primary[row, col])),
                    repr(float(traj.p_secondary[row, col])),
                ]
            for col in range(len(traj.tie_keys)):
                cells += [
                    repr(float(traj.tie_flow[row, col])),
                    repr(float(traj.tie_flow_rate[row, col])),
                ]
            out.write(",".join(cells) + "\n")


def metrics_to_flat_dict(metrics: Metrics) -> dict:
    """Flatten metrics into a single-level JSON-ready mapping."""
    flat: dict = {"f0_hz": metrics.f0}
    for area in metrics.area_ids:
        flat[f"nadir_hz.{area}"] = metrics.nadir_hz[area]
        flat[f"max_rocof_hz_per_s.{area}"] = metrics.max_rocof_hz_per_s[area]
        flat[f"settling_time_s.{area}"] = metrics.settling_time_s[area]
    for key in metrics.tie_peak_mw:
        flat[f"tie_peak_mw.{key}"] = metrics.tie_peak_mw[key]
        flat[f"tie_peak_rate_mw_per_s.{key}"] = metrics.tie_peak_rate_mw_per_s[key]
    for th, when in metrics.crossings:
        flat[f"crossing_s.{th:g}"] = when
    return flat
