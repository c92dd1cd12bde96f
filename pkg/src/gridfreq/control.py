"""Primary and secondary frequency-control chains.

Both controllers follow the same block structure: dead time (transport delay
over a time-tagged sample history), the control law, a ramp-rate limiter, and
saturation at the reserve magnitude. States are owned by a single simulation
run and are advanced in place once per engine step.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .model import PrimaryControlParams, SecondaryControlParams, load_damping_per_hz


class DelayBuffer:
    """Time-tagged history with linear interpolation.

    Samples before the first recorded one read as 0 (pre-scenario
    equilibrium), so a cold-started controller sees nothing until its dead
    time has elapsed.
    """

    def __init__(self):
        self._times: list[float] = []
        self._values: list[float] = []

    def append(self, t: float, value: float) -> None:
        if self._times and t <= self._times[-1]:
            raise ValueError(f"samples must be strictly increasing in time, got {t}")
        self._times.append(t)
        self._values.append(value)

    def sample(self, t: float) -> float:
        times = self._times
        if not times or t < times[0]:
            return 0.0
        if t >= times[-1]:
            return self._values[-1]
        hi = bisect_right(times, t)
        lo = hi - 1
        t0, t1 = times[lo], times[hi]
        v0, v1 = self._values[lo], self._values[hi]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def trim(self, t_min: float) -> None:
        """Drop history strictly older than t_min, keeping one bracketing sample."""
        times = self._times
        cut = bisect_right(times, t_min) - 1
        if cut > 0:
            del times[:cut]
            del self._values[:cut]

    def span(self) -> float:
        if len(self._times) < 2:
            return 0.0
        return self._times[-1] - self._times[0]


def _rate_limit(target: float, previous: float, slope: float, dt: float) -> float:
    step = slope * dt
    lo, hi = previous - step, previous + step
    if target < lo:
        return lo
    if target > hi:
        return hi
    return target


def _saturate(value: float, bound: float) -> float:
    if value > bound:
        return bound
    if value < -bound:
        return -bound
    return value


@dataclass
class PrimaryState:
    """Delay history plus the rate-limiter memory of the droop channel.

    Time is tracked as an integer step count so long runs accumulate no
    clock round-off.
    """

    delay_buffer: DelayBuffer = field(default_factory=DelayBuffer)
    last_output: float = 0.0
    step: int = 0


def primary_step(
    state: PrimaryState,
    f_dev_now: float,
    params: PrimaryControlParams,
    dt: float,
) -> tuple[PrimaryState, float]:
    """Advance the primary controller by one step of length dt.

    The raw droop command -f_dev(t - delay)/droop_bias passes through a ramp
    limiter of slope reserve/(full_activation_time - delay) and a saturator at
    +/- reserve, so the returned power is always total and bounded.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    t = state.step * dt
    buf = state.delay_buffer
    buf.append(t, f_dev_now)
    delayed = buf.sample(t - params.delay)
    droop = params.resolved_droop()
    raw = -delayed / droop
    limited = _rate_limit(raw, state.last_output, params.ramp_rate, dt)
    power = _saturate(limited, params.reserve)
    state.last_output = power
    state.step += 1
    buf.trim(t - params.delay - 2.0 * dt)
    return state, power


@dataclass
class AceInputs:
    """Inputs to the area control error: tie deviation (MW), frequency
    deviation (Hz) and the frequency bias weighting (MW/Hz)."""

    tie_deviation: float
    f_dev: float
    frequency_bias: float

    @property
    def ace(self) -> float:
        return self.tie_deviation + self.frequency_bias * self.f_dev


@dataclass
class SecondaryState:
    """Accumulated area control error plus delay, filter and limiter memory."""

    ace_integral: float = 0.0
    delay_buffer: DelayBuffer = field(default_factory=DelayBuffer)
    filtered_ace: float = 0.0
    last_output: float = 0.0
    step: int = 0


def secondary_step(
    state: SecondaryState,
    ace: AceInputs,
    params: SecondaryControlParams,
    dt: float,
) -> tuple[SecondaryState, float]:
    """Advance the secondary (PI on ACE) controller by one step of length dt.

    command = -(C_p * ACE + integral(ACE)/T_N); the output is ramp-limited at
    reserve/response_time and saturated at +/- reserve. The integral uses
    explicit per-step accumulation and freezes while the output is saturated
    (anti-windup by conditional integration). The ACE seen by the controller
    is delayed by activation_delay and smoothed by ace_filter_time.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    t = state.step * dt
    buf = state.delay_buffer
    buf.append(t, ace.ace)
    delayed_ace = buf.sample(t - params.activation_delay)
    if params.ace_filter_time > 0.0:
        state.filtered_ace += (delayed_ace - state.filtered_ace) * dt / params.ace_filter_time
        effective_ace = state.filtered_ace
    else:
        state.filtered_ace = delayed_ace
        effective_ace = delayed_ace
    command = -(params.C_p * effective_ace + state.ace_integral / params.T_N)
    slope = params.reserve / params.response_time if params.response_time > 0 else float("inf")
    limited = _rate_limit(command, state.last_output, slope, dt)
    power = _saturate(limited, params.reserve)
    if abs(power) < params.reserve:
        state.ace_integral += effective_ace * dt
    state.last_output = power
    state.step += 1
    buf.trim(t - params.activation_delay - 2.0 * dt)
    return state, power


def augmented_damping(k_load: float, primary_gain_now: float, s_b_mw: float) -> float:
    """Effective frequency damping in MW/Hz: load damping plus the
    instantaneous primary-control gain.

    Fast primary control acts as additional, time-variant damping; at full
    proportional activation its gain equals 1/droop_bias.
    """
    return load_damping_per_hz(k_load, s_b_mw) + primary_gain_now
