"""Swing-equation right-hand sides and aggregation formulas.

All functions are pure and re-entrant. Two equivalent formulations are
provided:

* the one-area aggregated swing equation in frequency-deviation form
  (:func:`ase_delta_rhs`), and
* the multi-area phase model in angle/angular-speed form
  (:func:`multi_area_rhs`).

They agree exactly for a single isolated area when the per-area damping is
derived with :func:`damping_from_k_load` (tested cross-model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

from .errors import EmptyEntryList, NonPositiveBasePower, ZeroInertia, ZeroTotalInertia
from .model import AreaParams, ValidatedGridModel, load_damping_per_hz, m_from_h

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AreaState:
    """Dynamic state of one area: angle (rad) and frequency deviation (Hz).

    Angles are kept unwrapped while integrating; wrap only for reporting.
    """

    delta: float
    f_dev: float

    @property
    def omega(self) -> float:
        """Angular speed deviation in rad/s."""
        return TWO_PI * self.f_dev


#: Per-area net power deviation in MW (generation minus load change).
PowerImbalance = Sequence[float]


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    m = math.fmod(x + math.pi, TWO_PI)
    if m <= 0.0:
        m += TWO_PI
    return m - math.pi


def damping_from_k_load(k_load: float, s_b_mw: float) -> float:
    """Damping coefficient k in MW per rad/s equivalent to the load damping.

    A 1 Hz deviation sheds k_load percent of S_B, so per-Hz damping is
    k_load*S_B/100 and per-(rad/s) damping is that value over 2*pi.
    """
    return load_damping_per_hz(k_load, s_b_mw) / TWO_PI


def ase_delta_rhs(f_dev: float, net_power: float, area: AreaParams, f0: float) -> float:
    """d(delta f)/dt of the one-area aggregated swing equation, Hz/s.

    df/dt = f0 / (2*H*S_B) * (net_power - D*delta_f) with the per-Hz load
    damping D = k_load*S_B/100.
    """
    if area.H <= 0.0:
        raise ZeroInertia(
            f"area {area.id!r} has H = {area.H}; the swing equation is singular "
            "(reject the area or assign synthetic inertia explicitly)"
        )
    damping_mw = load_damping_per_hz(area.k_load, area.S_B) * f_dev
    return f0 / (2.0 * area.H * area.S_B) * (net_power - damping_mw)


def tie_flow(delta_i: float, delta_j: float, coupling: float) -> float:
    """Power flowing from area i to area j: coupling * sin(delta_i - delta_j)."""
    return coupling * math.sin(delta_i - delta_j)


def multi_area_rhs(
    states: Sequence[AreaState],
    imbalances: PowerImbalance,
    model: ValidatedGridModel,
    damping: Sequence[float],
    reference: Collection[str] = (),
) -> list[tuple[float, float]]:
    """Derivatives (d delta/dt, d omega/dt) of the multi-area phase model.

    M_i * d(omega_i)/dt = dP_i - k_i*omega_i - sum_j coupling_ij * sin(delta_i - delta_j)

    ``damping`` holds k_i in MW/(rad/s); ``reference`` names areas pinned at
    fixed angle and zero speed (their derivatives are zero).
    """
    n = len(model.areas)
    ref = [a.id in reference for a in model.areas]
    m_values = []
    for i, area in enumerate(model.areas):
        if ref[i]:
            m_values.append(math.inf)
            continue
        m = m_from_h(area.H, area.S_B, model.f0)
        if m <= 0.0:
            raise ZeroInertia(
                f"area {area.id!r} has H = {area.H}; M must be > 0 to integrate"
            )
        m_values.append(m)

    net = [imbalances[i] - damping[i] * states[i].omega for i in range(n)]
    for i, j, coupling in model.tie_endpoints():
        flow = tie_flow(states[i].delta, states[j].delta, coupling)
        net[i] -= flow
        net[j] += flow

    out = []
    for i in range(n):
        if ref[i]:
            out.append((0.0, 0.0))
        else:
            out.append((states[i].omega, net[i] / m_values[i]))
    return out


def aggregate_inertia(entries: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Aggregate (H_i, S_B_i) pairs into (H_agg, S_B_total).

    H_agg is the rated-power-weighted mean of the H_i and always lies between
    min(H_i) and max(H_i).
    """
    total_s = 0.0
    weighted = 0.0
    count = 0
    for h, s in entries:
        if s <= 0.0:
            raise NonPositiveBasePower(f"entry {count} has S_B = {s}; must be > 0")
        total_s += s
        weighted += h * s
        count += 1
    if count == 0:
        raise EmptyEntryList("aggregate_inertia needs at least one entry")
    return weighted / total_s, total_s


def coi_frequency(entries: Iterable[tuple[float, float, float]]) -> float:
    """Center-of-inertia frequency: the H*S_B-weighted mean of area frequencies."""
    weight = 0.0
    weighted_f = 0.0
    for h, s, f in entries:
        weight += h * s
        weighted_f += h * s * f
    if weight <= 0.0:
        raise ZeroTotalInertia(f"total H*S_B must be > 0, got {weight}")
    return weighted_f / weight
