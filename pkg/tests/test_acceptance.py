"""Acceptance gate: every shipped claim, checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion. The heavy scenario runs are shared module-scoped fixtures, so
the whole gate stays within a couple of minutes.
"""

import math
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

from gridfreq import compare_runs, extract_metrics, integrate
from gridfreq.analytics import (
    duration_below,
    inertia_series,
    res_share_series,
    synthetic_year_dispatch,
)
from gridfreq.analytics import DispatchRecord
from gridfreq.config import build_region_request, build_scenario, load_config
from gridfreq.engine import Scenario
from gridfreq.experiments import phase_case, phase_case_names
from gridfreq.region import estimate_region, phase_trajectory

from datetime import datetime, timedelta

from conftest import bare_two_area_model


@contextmanager
def criterion(number, name):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number} ({name}): FAIL")
        raise
    print(f"\nACCEPTANCE {number} ({name}): PASS")


def timed_run(scenario: Scenario):
    start = time.perf_counter()
    trajectory = integrate(scenario)
    return trajectory, time.perf_counter() - start


@pytest.fixture(scope="module")
def one_area_runs():
    runs = {}
    for name in ("one_area_h6", "one_area_h3", "one_area_h3_fast"):
        scenario = build_scenario(load_config(name))
        assert scenario.dt == 0.01 and scenario.horizon == 400.0
        trajectory, wall = timed_run(scenario)
        runs[name] = {
            "trajectory": trajectory,
            "wall": wall,
            "metrics": extract_metrics(trajectory, [49.5]),
        }
    return runs


@pytest.fixture(scope="module")
def rocof_runs():
    runs = {}
    for name in ("one_area_h6", "one_area_h3"):
        cfg = load_config(name)
        cfg["scenario"]["horizon"] = 130.0
        cfg["scenario"]["record_stride"] = 1
        trajectory = integrate(build_scenario(cfg))
        runs[name] = extract_metrics(trajectory)
    return runs


@pytest.fixture(scope="module")
def two_area_runs():
    runs = {}
    for h2 in (1, 3, 6):
        scenario = build_scenario(load_config(f"two_area_hII_{h2}"))
        trajectory, wall = timed_run(scenario)
        runs[h2] = {
            "trajectory": trajectory,
            "wall": wall,
            "metrics": extract_metrics(trajectory, [49.5]),
        }
    return runs


@pytest.fixture(scope="module")
def region_maps():
    maps = {}
    for name in ("region_baseline", "region_double_damping"):
        request = build_region_request(load_config(name))
        assert request.spec.x1_count == 101 and request.spec.x2_count == 101
        start = time.perf_counter()
        region = estimate_region(
            request.model, request.damping, request.spec,
            reference_area=request.reference_area, workers=request.workers,
        )
        maps[name] = {"map": region, "wall": time.perf_counter() - start}
    return maps


@pytest.fixture(scope="module")
def phase_traces():
    traces = {}
    for name in phase_case_names():
        case = phase_case(name)
        traces[name] = phase_trajectory(
            case.model, case.damping, case.events, case.horizon, case.dt,
            case.reference_area,
        )
    return traces


def test_criterion_1_one_area_nadir_classifications(one_area_runs):
    """Worst-case 3000 MW loss at 230 GW: nominal reserves absorb it at
    H = 6 s, cross 49.5 Hz at H = 3 s, and fast reserves absorb it again."""
    with criterion(1, "one-area nadir classification"):
        nadir_h6 = one_area_runs["one_area_h6"]["metrics"].nadir_hz["CE"]
        nadir_h3 = one_area_runs["one_area_h3"]["metrics"].nadir_hz["CE"]
        nadir_fast = one_area_runs["one_area_h3_fast"]["metrics"].nadir_hz["CE"]
        print(f"  nadirs: H6={nadir_h6:.4f}  H3={nadir_h3:.4f}  H3fast={nadir_fast:.4f}")
        assert nadir_h6 > 49.5
        assert nadir_h3 < 49.5
        assert nadir_fast > 49.5
        crossing = one_area_runs["one_area_h3"]["metrics"].crossings[0]
        assert crossing[0] == 49.5 and crossing[1] is not None
        for name, run in one_area_runs.items():
            print(f"  {name}: integrate wall {run['wall']:.2f} s")
            assert run["wall"] < 5.0


def test_criterion_2_initial_rocof(rocof_runs):
    """At fault onset the discrete slope matches f0*dP/(2*H*S_B) within 1%."""
    with criterion(2, "initial rate of change of frequency"):
        expected = {"one_area_h6": 0.05434782608695652,
                    "one_area_h3": 0.10869565217391304}
        for name, value in expected.items():
            got = rocof_runs[name].max_rocof_hz_per_s["CE"]
            print(f"  {name}: rocof {got:.6f} vs analytic {value:.6f} "
                  f"({abs(got - value) / value * 100.0:.3f}% off)")
            assert got == pytest.approx(value, rel=0.01)


def test_criterion_3_two_area_tie_transients(two_area_runs):
    """Lower inertia in the disturbed area amplifies the tie transients:
    monotone peaks, >50% peak increase and >2x steeper flow derivative
    between H_II = 1 s and 6 s."""
    with criterion(3, "two-area tie transients"):
        peaks = {h2: run["metrics"].tie_peak_mw["I-II"]
                 for h2, run in two_area_runs.items()}
        print(f"  tie peaks MW: {peaks}")
        assert peaks[1] > peaks[3] > peaks[6]
        report = compare_runs(two_area_runs[6]["metrics"], two_area_runs[1]["metrics"])
        print(f"  H1/H6 peak ratio {report.tie_peak_ratio['I-II']:.3f}, "
              f"rate ratio {report.tie_rate_ratio['I-II']:.3f}")
        assert report.tie_peak_ratio["I-II"] > 1.5
        assert report.tie_rate_ratio["I-II"] > 2.0
        for h2, run in two_area_runs.items():
            print(f"  H_II={h2}: integrate wall {run['wall']:.2f} s")
            assert run["wall"] < 10.0


def test_criterion_4_secondary_restoration(two_area_runs):
    """Every two-area run ends restored: |df| < 1 mHz, |tie| < 10 MW."""
    with criterion(4, "secondary restoration"):
        for h2, run in two_area_runs.items():
            trajectory = run["trajectory"]
            f_dev_end = np.abs(trajectory.f_dev[-1]).max()
            tie_end = np.abs(trajectory.tie_flow[-1]).max()
            print(f"  H_II={h2}: end |df| {f_dev_end * 1000.0:.4f} mHz, "
                  f"end |tie| {tie_end:.4f} MW")
            assert f_dev_end < 1e-3
            assert tie_end < 10.0


def test_criterion_5_stability_region(region_maps):
    """Doubling the damping only grows the attraction region along the
    frequency axis; maps are symmetric under state negation; the origin
    converges; each 101x101 map classifies in under a minute."""
    with criterion(5, "stability-region properties"):
        base = region_maps["region_baseline"]["map"]
        damped = region_maps["region_double_damping"]["map"]
        _, base_conv = base.x2_axis_profile()
        _, damped_conv = damped.x2_axis_profile()
        assert np.all(damped_conv[base_conv])
        print(f"  x2-axis extents: base {base.summary()['x2_axis_extent']:.3f} Hz, "
              f"double damping {damped.summary()['x2_axis_extent']:.3f} Hz")
        for name, entry in region_maps.items():
            region = entry["map"]
            assert np.array_equal(region.status, region.status[::-1, ::-1])
            center = (region.spec.x1_count // 2, region.spec.x2_count // 2)
            assert region.status[center] == 1
            print(f"  {name}: wall {entry['wall']:.1f} s, counts {region.counts()}")
            assert entry["wall"] < 60.0


def test_criterion_6_phase_plot_excursions(phase_traces):
    """Relative-frequency excursions order by inertia then damping, and only
    the low-inertia/low-damping case leaves the 0.5 Hz band."""
    with criterion(6, "phase-plot excursions"):
        high = phase_traces["high_inertia_low_damping"]
        low = phase_traces["low_inertia_low_damping"]
        damped = phase_traces["low_inertia_high_damping"]
        print(f"  max|x2|: high-H {high.max_abs_x2:.4f}, damped {damped.max_abs_x2:.4f}, "
              f"low-H {low.max_abs_x2:.4f}")
        assert high.max_abs_x2 < damped.max_abs_x2 < low.max_abs_x2
        assert low.band_crossed["I"]
        assert not high.band_crossed["I"]
        assert not damped.band_crossed["I"]


def test_criterion_7_oracle_equivalence():
    """Aggregation, share, inertia and duration statistics match brute-force
    oracles on 1000-point random fixtures to 1e-9 relative."""
    with criterion(7, "oracle equivalence"):
        rng = random.Random(20120815)
        from gridfreq import aggregate_inertia

        entries = [(rng.uniform(0.0, 10.0), rng.uniform(1.0, 1e5)) for _ in range(1000)]
        total = sum(s for _, s in entries)
        expected = sum(h * s for h, s in entries) / total
        h_agg, s_total = aggregate_inertia(entries)
        assert h_agg == pytest.approx(expected, rel=1e-9)
        assert s_total == pytest.approx(total, rel=1e-9)

        start = datetime(2012, 1, 1)
        records = [
            DispatchRecord(start + timedelta(hours=h),
                           rng.uniform(1e3, 6e4), rng.uniform(0.0, 3e4),
                           rng.uniform(0.0, 2e4), rng.uniform(2e4, 9e4))
            for h in range(1000)
        ]
        shares = res_share_series(records)
        inertia = inertia_series(records)
        for (_, got), record in zip(shares, records):
            want = (record.wind_mw + record.pv_mw) / record.load_mw * 100.0
            assert got == pytest.approx(want, rel=1e-9)
        for (_, got), record in zip(inertia, records):
            res = record.wind_mw + record.pv_mw
            want = 6.0 * record.conventional_mw / (record.conventional_mw + res)
            assert got == pytest.approx(want, rel=1e-9)
        for threshold in (3.0, 4.0, 5.0):
            hours, _ = duration_below(inertia, threshold)
            want = sum(1.0 for _, value in inertia if value < threshold)
            assert hours == pytest.approx(want, rel=1e-9)
        print("  aggregate/share/inertia/duration all within 1e-9 of oracles")


def test_criterion_8_property_suite(one_area_runs):
    """Antisymmetry, fixed points, step-size convergence, energy
    conservation and bit-exact determinism."""
    with criterion(8, "property suite"):
        from gridfreq import AreaState, multi_area_rhs, tie_flow
        from gridfreq.dynamics import damping_from_k_load
        from gridfreq.model import m_from_h

        # tie-flow antisymmetry over a random sample
        rng = random.Random(7)
        for _ in range(200):
            a, b = rng.uniform(-6, 6), rng.uniform(-6, 6)
            c = rng.uniform(1.0, 1e5)
            assert tie_flow(a, b, c) == pytest.approx(-tie_flow(b, a, c),
                                                      rel=1e-12, abs=1e-9)

        # synchronous state is a fixed point
        model = bare_two_area_model()
        damping = [damping_from_k_load(a.k_load, a.S_B) for a in model.areas]
        states = [AreaState(0.7, 0.0), AreaState(0.7, 0.0)]
        derivs = multi_area_rhs(states, [0.0, 0.0], model, damping)
        assert all(dd == 0.0 and dw == 0.0 for dd, dw in derivs)

        # halving dt moves the worst-case nadir by less than 0.1 mHz
        cfg = load_config("one_area_h6")
        cfg["scenario"]["dt"] = 0.005
        cfg["scenario"]["record_stride"] = 20
        fine = extract_metrics(integrate(build_scenario(cfg))).nadir_hz["CE"]
        coarse = one_area_runs["one_area_h6"]["metrics"].nadir_hz["CE"]
        print(f"  nadir shift on dt halving: {abs(fine - coarse) * 1000.0:.6f} mHz")
        assert abs(fine - coarse) < 1e-4

        # undamped two-area energy conservation over 100 s
        from gridfreq import Event, SimOptions
        scenario = Scenario(
            model=model,
            events=(Event(0.0, "step_power_imbalance", "I", power=-2000.0,
                          duration=5.0),),
            horizon=105.0, dt=0.01, record_stride=10,
            options=SimOptions(primary=False, secondary=False, load_damping=False),
        )
        trajectory = integrate(scenario)
        m = m_from_h(6.0, 115000.0, 50.0)
        omega = trajectory.f_dev * 2.0 * math.pi
        energy = (0.5 * m * omega[:, 0] ** 2 + 0.5 * m * omega[:, 1] ** 2
                  - 2875.0 * np.cos(trajectory.delta[:, 0] - trajectory.delta[:, 1]))
        energy = energy[trajectory.time >= 5.0]
        drift = (energy.max() - energy.min()) / (energy.max() + 2875.0)
        print(f"  relative energy drift: {drift:.2e}")
        assert drift < 1e-9

        # bit-identical reruns
        scenario = build_scenario(load_config("one_area_h6"))
        again = integrate(scenario)
        reference = one_area_runs["one_area_h6"]["trajectory"]
        for field in ("time", "f_dev", "delta", "p_primary", "p_secondary"):
            assert np.array_equal(getattr(again, field), getattr(reference, field))
        print("  reruns are bit-identical")
