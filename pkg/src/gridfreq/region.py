"""Region-of-attraction estimation and phase portraits for two-area models.

The reduced system has two dynamic areas (optionally anchored to a reference
area pinned at angle 0, speed 0) and is classified in the plane

    x1 = delta_1 - delta_2   [rad]
    x2 = f_1 - f_2           [Hz]

A plane point is embedded into the 4-dimensional state by the symmetric
split delta = (+x1/2, -x1/2), speed = (+pi*x2, -pi*x2). Classification is by
direct simulation over a vectorized batch of initial conditions: converged
once |x1 mod 2pi| and |x2| stay inside the tolerance ball for the hold time,
diverged once the unwrapped |x1| passes the unwrap bound, undecided at the
time budget. Points are independent, so evaluation is a deterministic data-
parallel map (optionally chunked over worker processes).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import TWO_PI
from .engine import Event, event_schedule
from .errors import SimulationError, ZeroInertia
from .model import ValidatedGridModel, m_from_h

UNDECIDED = 0
CONVERGED = 1
DIVERGED = 2
LABEL_NAMES = {UNDECIDED: "undecided", CONVERGED: "converged", DIVERGED: "diverged"}


@dataclass(frozen=True)
class RegionSpec:
    """Sampling grid and classification settings.

    tolerance applies to both |x1 mod 2pi| (rad) and |x2| (Hz); a trajectory
    must stay inside for hold_time seconds to count as converged.
    """

    x1_min: float
    x1_max: float
    x1_count: int
    x2_min: float
    x2_max: float
    x2_count: int
    tolerance: float
    time_budget: float
    hold_time: float = 5.0
    dt: float = 0.02
    unwrap_bound: float = 4.0 * math.pi

    def __post_init__(self):
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise SimulationError("region ranges must be non-degenerate")
        if self.x1_count < 2 or self.x2_count < 2:
            raise SimulationError("region sample counts must be >= 2")
        if self.tolerance <= 0.0:
            raise SimulationError("tolerance must be > 0")
        if self.time_budget <= 0.0 or self.hold_time < 0.0 or self.dt <= 0.0:
            raise SimulationError("time budget, hold time and dt must be positive")
        if self.unwrap_bound <= math.pi:
            raise SimulationError("unwrap bound must exceed pi")


def _axis(lo: float, hi: float, count: int) -> np.ndarray:
    # exact negation symmetry for symmetric ranges so mirrored trajectories
    # are bit-identical
    if lo == -hi and count % 2 == 1:
        half = np.linspace(0.0, hi, count // 2 + 1)
        return np.concatenate([-half[:0:-1], half])
    return np.linspace(lo, hi, count)


@dataclass
class RegionMap:
    x1_values: np.ndarray
    x2_values: np.ndarray
    status: np.ndarray
    time_to_converge: np.ndarray
    spec: RegionSpec

    def counts(self) -> dict:
        return {
            name: int(np.count_nonzero(self.status == code))
            for code, name in LABEL_NAMES.items()
        }

    def converged_mask(self) -> np.ndarray:
        return self.status == CONVERGED

    def x2_axis_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Converged flags along x1 = 0 (nearest grid column)."""
        col = int(np.argmin(np.abs(self.x1_values)))
        return self.x2_values, self.status[col, :] == CONVERGED

    def x1_axis_profile(self) -> tuple[np.ndarray, np.ndarray]:
        row = int(np.argmin(np.abs(self.x2_values)))
        return self.x1_values, self.status[:, row] == CONVERGED

    def summary(self) -> dict:
        x2_vals, x2_conv = self.x2_axis_profile()
        x1_vals, x1_conv = self.x1_axis_profile()
        return {
            "grid": {
                "x1": [float(self.x1_values[0]), float(self.x1_values[-1]), len(self.x1_values)],
                "x2": [float(self.x2_values[0]), float(self.x2_values[-1]), len(self.x2_values)],
            },
            "counts": self.counts(),
            "x2_axis_converged": [float(v) for v in x2_vals[x2_conv]],
            "x1_axis_converged": [float(v) for v in x1_vals[x1_conv]],
            "x2_axis_extent": float(np.abs(x2_vals[x2_conv]).max()) if x2_conv.any() else 0.0,
            "x1_axis_extent": float(np.abs(x1_vals[x1_conv]).max()) if x1_conv.any() else 0.0,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as out:
            out.write("# units: x1 rad, x2 Hz, time_to_converge s (empty unless converged)\n")
            out.write("x1,x2,label,time_to_converge\n")
            for i, x1 in enumerate(self.x1_values):
                for j, x2 in enumerate(self.x2_values):
                    label = LABEL_NAMES[int(self.status[i, j])]
                    ttc = self.time_to_converge[i, j]
                    cell = repr(float(ttc)) if math.isfinite(ttc) else ""
                    out.write(f"{float(x1)!r},{float(x2)!r},{label},{cell}\n")


@dataclass(frozen=True)
class _ReducedModel:
    """Constants of the two-dynamic-area (plus optional reference) system."""

    m1: float
    m2: float
    k1: float
    k2: float
    k_12: float
    k_1r: float
    k_2r: float
    ids: tuple[str, str]


def _reduce(
    model: ValidatedGridModel,
    damping: Sequence[float],
    reference_area: Optional[str],
) -> _ReducedModel:
    ids = [a.id for a in model.areas]
    if reference_area is None:
        dynamic = ids
    else:
        if reference_area not in ids:
            raise SimulationError(f"reference area {reference_area!r} is not in the model")
        dynamic = [a for a in ids if a != reference_area]
    if len(dynamic) != 2:
        raise SimulationError(
            f"the reduced model needs exactly two dynamic areas, got {dynamic}"
        )
    if len(damping) != len(ids):
        raise SimulationError("damping must list one coefficient per model area")
    a1, a2 = dynamic
    index = model.area_index
    area1, area2 = model.areas[index[a1]], model.areas[index[a2]]
    for area in (area1, area2):
        if area.H <= 0.0:
            raise ZeroInertia(f"area {area.id!r} has H = {area.H}")
    couplings = {"12": 0.0, "1r": 0.0, "2r": 0.0}
    for tie in model.ties:
        pair = {tie.from_area, tie.to_area}
        if pair == {a1, a2}:
            couplings["12"] = tie.coupling
        elif reference_area is not None and pair == {a1, reference_area}:
            couplings["1r"] = tie.coupling
        elif reference_area is not None and pair == {a2, reference_area}:
            couplings["2r"] = tie.coupling
    return _ReducedModel(
        m1=m_from_h(area1.H, area1.S_B, model.f0),
        m2=m_from_h(area2.H, area2.S_B, model.f0),
        k1=damping[index[a1]],
        k2=damping[index[a2]],
        k_12=couplings["12"],
        k_1r=couplings["1r"],
        k_2r=couplings["2r"],
        ids=(a1, a2),
    )


def _rk4_step(rm: _ReducedModel, state, dt: float, p1: float, p2: float):
    """One vectorized RK4 step of (d1, d2, w1, w2)."""
    d1, d2, w1, w2 = state

    def rhs(d1, d2, w1, w2):
        flow = rm.k_12 * np.sin(d1 - d2)
        a1 = (p1 - rm.k1 * w1 - flow - rm.k_1r * np.sin(d1)) / rm.m1
        a2 = (p2 - rm.k2 * w2 + flow - rm.k_2r * np.sin(d2)) / rm.m2
        return w1, w2, a1, a2

    h = 0.5 * dt
    k1 = rhs(d1, d2, w1, w2)
    k2 = rhs(d1 + h * k1[0], d2 + h * k1[1], w1 + h * k1[2], w2 + h * k1[3])
    k3 = rhs(d1 + h * k2[0], d2 + h * k2[1], w1 + h * k2[2], w2 + h * k2[3])
    k4 = rhs(d1 + dt * k3[0], d2 + dt * k3[1], w1 + dt * k3[2], w2 + dt * k3[3])
    s = dt / 6.0
    return (
        d1 + s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        d2 + s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        w1 + s * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        w2 + s * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    )


def _classify_batch(
    rm: _ReducedModel, x1: np.ndarray, x2: np.ndarray, spec: RegionSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Classify a flat batch of (x1, x2) initial conditions."""
    n = x1.shape[0]
    status = np.zeros(n, dtype=np.int8)
    t_conv = np.full(n, np.nan)

    d1 = 0.5 * x1.astype(float)
    d2 = -0.5 * x1.astype(float)
    w1 = math.pi * x2.astype(float)
    w2 = -math.pi * x2.astype(float)
    idx = np.arange(n)
    ball_since = np.full(n, np.nan)

    eps = spec.tolerance
    bound = spec.unwrap_bound
    n_steps = int(round(spec.time_budget / spec.dt))

    def observe(t: float):
        nonlocal d1, d2, w1, w2, idx, ball_since
        rel = d1 - d2
        wrapped = rel - TWO_PI * np.round(rel / TWO_PI)
        freq = (w1 - w2) / TWO_PI
        in_ball = (np.abs(wrapped) < eps) & (np.abs(freq) < eps)
        entering = in_ball & np.isnan(ball_since)
        ball_since[entering] = t
        ball_since[~in_ball] = np.nan
        held = in_ball & (t - ball_since >= spec.hold_time)
        escaped = np.abs(rel) > bound
        if held.any():
            status[idx[held]] = CONVERGED
            t_conv[idx[held]] = ball_since[held]
        if escaped.any():
            status[idx[escaped]] = DIVERGED
        done = held | escaped
        if done.any():
            keep = ~done
            d1, d2, w1, w2 = d1[keep], d2[keep], w1[keep], w2[keep]
            idx = idx[keep]
            ball_since = ball_since[keep]

    observe(0.0)
    for step in range(n_steps):
        if idx.size == 0:
            break
        d1, d2, w1, w2 = _rk4_step(rm, (d1, d2, w1, w2), spec.dt, 0.0, 0.0)
        observe((step + 1) * spec.dt)
    return status, t_conv


def _classify_chunk(args):
    rm, x1, x2, spec = args
    return _classify_batch(rm, x1, x2, spec)


def classify_point(
    x0: tuple[float, float],
    model: ValidatedGridModel,
    damping: Sequence[float],
    spec: RegionSpec,
    reference_area: Optional[str] = None,
) -> str:
    """Classify a single plane point; returns 'converged', 'diverged' or
    'undecided'."""
    rm = _reduce(model, damping, reference_area)
    status, _ = _classify_batch(
        rm, np.array([x0[0]], dtype=float), np.array([x0[1]], dtype=float), spec
    )
    return LABEL_NAMES[int(status[0])]


def estimate_region(
    model: ValidatedGridModel,
    damping: Sequence[float],
    spec: RegionSpec,
    reference_area: Optional[str] = None,
    workers: Optional[int] = None,
) -> RegionMap:
    """Classify the full grid. Points are independent; with ``workers`` > 1
    the grid is chunked over processes and reassembled in index order."""
    rm = _reduce(model, damping, reference_area)
    x1_values = _axis(spec.x1_min, spec.x1_max, spec.x1_count)
    x2_values = _axis(spec.x2_min, spec.x2_max, spec.x2_count)
    g1, g2 = np.meshgrid(x1_values, x2_values, indexing="ij")
    flat1, flat2 = g1.ravel(), g2.ravel()

    if workers is not None and workers > 1:
        chunks = np.array_split(np.arange(flat1.size), workers * 4)
        jobs = [(rm, flat1[c], flat2[c], spec) for c in chunks if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_classify_chunk, jobs))
        status = np.concatenate([p[0] for p in parts])
        t_conv = np.concatenate([p[1] for p in parts])
    else:
        status, t_conv = _classify_batch(rm, flat1, flat2, spec)

    shape = (spec.x1_count, spec.x2_count)
    return RegionMap(
        x1_values=x1_values,
        x2_values=x2_values,
        status=status.reshape(shape),
        time_to_converge=t_conv.reshape(shape),
        spec=spec,
    )


#: Frequency-deviation band beyond which generation tripping is likely.
TRIP_BAND_HZ = 0.5


@dataclass
class PhaseTrace:
    """Faulted-run trace in the (x1, x2) plane plus per-area deviations."""

    time: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    f_dev: np.ndarray
    area_ids: tuple[str, str]
    clear_time: Optional[float]
    band_hz: float = TRIP_BAND_HZ
    band_crossed: dict = field(default_factory=dict)

    @property
    def max_abs_x2(self) -> float:
        return float(np.abs(self.x2).max())

    def fault_segment(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.clear_time is None:
            return self.time, self.x1, self.x2
        mask = self.time <= self.clear_time
        return self.time[mask], self.x1[mask], self.x2[mask]

    def recovery_segment(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.clear_time is None:
            empty = np.zeros(0)
            return empty, empty, empty
        mask = self.time >= self.clear_time
        return self.time[mask], self.x1[mask], self.x2[mask]

    def to_csv(self, path) -> None:
        a1, a2 = self.area_ids
        with open(path, "w", newline="") as out:
            out.write("# units: time s, x1 rad, x2 Hz, f_dev Hz; segment fault|recovery\n")
            out.write(f"time,x1,x2,f_dev_{a1},f_dev_{a2},segment\n")
            for row in range(self.time.shape[0]):
                t = float(self.time[row])
                seg = "fault" if self.clear_time is None or t < self.clear_time else "recovery"
                out.write(
                    f"{t!r},{float(self.x1[row])!r},{float(self.x2[row])!r},"
                    f"{float(self.f_dev[row, 0])!r},{float(self.f_dev[row, 1])!r},{seg}\n"
                )


def phase_trajectory(
    model: ValidatedGridModel,
    damping: Sequence[float],
    events: Sequence[Event],
    horizon: float,
    dt: float = 0.01,
    reference_area: Optional[str] = None,
    record_stride: int = 1,
) -> PhaseTrace:
    """Run the faulted autonomous system (no controllers) and trace (x1, x2).

    The trace is split into the fault-on and post-clear segments; per-area
    frequency deviations are checked against the tripping band.
    """
    rm = _reduce(model, damping, reference_area)
    n_steps = int(round(horizon / dt))
    if abs(horizon / dt - n_steps) > 1e-6:
        raise SimulationError(f"horizon {horizon} is not a multiple of dt {dt}")
    index = {rm.ids[0]: 0, rm.ids[1]: 1}
    for event in events:
        if event.area not in index:
            raise SimulationError(
                f"event area {event.area!r} must be one of the dynamic areas {rm.ids}"
            )
    changes = event_schedule(events, dt, n_steps, index)

    # the fault clears when the net injected power returns to zero for good
    power = [0.0, 0.0]
    clear_time = None
    any_fault = False
    for step in sorted(changes):
        for area_i, dp in changes[step]:
            power[area_i] += dp
        if power[0] != 0.0 or power[1] != 0.0:
            any_fault = True
            clear_time = None
        elif any_fault and clear_time is None:
            clear_time = step * dt

    n_rec = n_steps // record_stride + 1
    time = np.empty(n_rec)
    x1 = np.empty(n_rec)
    x2 = np.empty(n_rec)
    f_dev = np.empty((n_rec, 2))

    d1 = d2 = w1 = w2 = np.zeros(1)
    p = [0.0, 0.0]
    rec = 0
    for step in range(n_steps + 1):
        if step in changes:
            for area_i, dp in changes[step]:
                p[area_i] += dp
        if step % record_stride == 0:
            time[rec] = step * dt
            x1[rec] = d1[0] - d2[0]
            x2[rec] = (w1[0] - w2[0]) / TWO_PI
            f_dev[rec, 0] = w1[0] / TWO_PI
            f_dev[rec, 1] = w2[0] / TWO_PI
            rec += 1
        if step == n_steps:
            break
        d1, d2, w1, w2 = _rk4_step(rm, (d1, d2, w1, w2), dt, p[0], p[1])

    crossed = {
        rm.ids[0]: bool(np.abs(f_dev[:, 0]).max() > TRIP_BAND_HZ),
        rm.ids[1]: bool(np.abs(f_dev[:, 1]).max() > TRIP_BAND_HZ),
    }
    return PhaseTrace(
        time=time[:rec],
        x1=x1[:rec],
        x2=x2[:rec],
        f_dev=f_dev[:rec],
        area_ids=rm.ids,
        clear_time=clear_time,
        band_crossed=crossed,
    )
