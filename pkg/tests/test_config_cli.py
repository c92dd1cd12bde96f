import json

import pytest

from gridfreq.analytics import synthetic_year_dispatch, write_dispatch_csv
from gridfreq.cli import build_parser, main
from gridfreq.config import (
    apply_overrides,
    build_analytics_request,
    build_grid_model,
    build_region_request,
    build_scenario,
    bundled_config_names,
    load_config,
    resolve_config_path,
    scenario_thresholds,
)
from gridfreq.errors import ConfigError

EXPECTED_BUNDLED = {
    "analytics_synthetic_year",
    "one_area_h3", "one_area_h3_fast", "one_area_h6",
    "region_baseline", "region_double_damping", "region_double_inertia",
    "region_half_inertia_double_damping",
    "three_area_string", "three_area_triangle",
    "two_area_hII_1", "two_area_hII_3", "two_area_hII_6",
}


def test_bundled_configs_present():
    assert set(bundled_config_names()) == EXPECTED_BUNDLED


def test_every_bundled_config_builds():
    for name in bundled_config_names():
        cfg = load_config(name)
        model = build_grid_model(cfg)
        assert model.f0 == 50.0
        if "scenario" in cfg:
            build_scenario(cfg, model)
        if "region" in cfg:
            build_region_request(cfg)
        if "analytics" in cfg:
            build_analytics_request(cfg)


def test_unknown_config_name_lists_bundled():
    with pytest.raises(ConfigError, match="one_area_h6"):
        resolve_config_path("no_such_config")


def test_overrides_scalar_and_indexed():
    cfg = load_config("one_area_h6")
    apply_overrides(cfg, ["scenario.dt=0.005", "grid.areas[0].H=3.5",
                          "scenario.events[0].power=-1500"])
    assert cfg["scenario"]["dt"] == 0.005
    assert cfg["grid"]["areas"][0]["H"] == 3.5
    scenario = build_scenario(cfg)
    assert scenario.dt == 0.005
    assert scenario.events[0].power == -1500


def test_override_bad_forms():
    cfg = load_config("one_area_h6")
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["missing-equals"])
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["grid.areas[9].H=3"])


def test_unknown_keys_rejected():
    cfg = load_config("one_area_h6")
    cfg["scenario"]["typo_key"] = 1
    with pytest.raises(ConfigError, match="typo_key"):
        build_scenario(cfg)


def test_missing_sections_rejected():
    with pytest.raises(ConfigError, match="region"):
        build_region_request(load_config("one_area_h6"))
    cfg = load_config("one_area_h6")
    del cfg["scenario"]
    with pytest.raises(ConfigError):
        build_scenario(cfg)


def test_scenario_thresholds_default_band():
    cfg = load_config("one_area_h6")
    del cfg["scenario"]["thresholds_hz"]
    assert scenario_thresholds(cfg, 50.0) == [49.5, 50.5]


def test_region_scaling_applies_to_model():
    heavy = build_region_request(load_config("region_double_inertia"))
    assert heavy.model.areas[0].H == pytest.approx(12.0)
    baseline = build_region_request(load_config("region_baseline"))
    damped = build_region_request(load_config("region_double_damping"))
    assert damped.damping[0] == pytest.approx(2.0 * baseline.damping[0])


def test_help_documents_config_keys(capsys):
    helptext = build_parser().format_help()
    for token in (
        "grid.areas[].H", "inertia constant [s]",
        "grid.areas[].k_load", "[% of S_B per Hz]",
        "grid.ties[].coupling", "scenario.dt", "integration step [s]",
        "region.tolerance", "analytics.dispatch_csv", "output.directory",
        "bundled configs:", "one_area_h6",
    ):
        assert token in helptext


# --- end-to-end CLI runs -----------------------------------------------------------

QUICK = ["scenario.horizon=40", "scenario.events[0].time=10"]


def test_cli_simulate_writes_artifacts(tmp_path, caplog):
    out = tmp_path / "run"
    code = main(["simulate", "one_area_h6", *QUICK, "-o", str(out), "-q"])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"trajectory.csv", "metrics.json", "manifest.json"}
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["nadir_hz.CE"] < 50.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    listed = {entry["name"] for entry in manifest["outputs"]}
    assert listed == names - {"manifest.json"}
    for entry in manifest["outputs"]:
        assert (out / entry["name"]).stat().st_size == entry["bytes"]
        assert len(entry["sha256"]) == 64


def test_cli_simulate_reruns_byte_identical(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["simulate", "one_area_h6", *QUICK, "-o", str(first), "-q"]) == 0
    assert main(["simulate", "one_area_h6", *QUICK, "-o", str(second), "-q"]) == 0
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()
    assert (first / "metrics.json").read_bytes() == (second / "metrics.json").read_bytes()


def test_cli_event_off_grid_is_config_error(tmp_path, capsys):
    code = main(["simulate", "one_area_h6", "scenario.events[0].time=10.005",
                 "-o", str(tmp_path / "x"), "-q"])
    assert code == 2
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["error"] == "EventOffGrid"


def test_cli_unknown_config_is_config_error(tmp_path, capsys):
    assert main(["simulate", "definitely_missing", "-q"]) == 2
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["error"] == "ConfigError"


def test_cli_region_two_by_two(tmp_path):
    out = tmp_path / "region"
    code = main([
        "region", "region_baseline",
        "region.x1_count=2", "region.x2_count=2", "region.time_budget=40",
        "-o", str(out), "-q",
    ])
    assert code == 0
    lines = (out / "region.csv").read_text().splitlines()
    assert len(lines) == 2 + 4
    summary = json.loads((out / "region_summary.json").read_text())
    assert sum(summary["counts"].values()) == 4


def test_cli_region_missing_section(tmp_path, capsys):
    assert main(["region", "one_area_h6", "-o", str(tmp_path / "r"), "-q"]) == 2
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["error"] == "ConfigError"


def test_cli_inertia_on_synthetic_year(tmp_path):
    csv_path = tmp_path / "dispatch.csv"
    write_dispatch_csv(synthetic_year_dispatch(2012), csv_path)
    out = tmp_path / "analytics"
    code = main([
        "inertia", "analytics_synthetic_year",
        f"analytics.dispatch_csv={csv_path}", "-o", str(out), "-q",
    ])
    assert code == 0
    report = json.loads((out / "analytics_report.json").read_text())
    hist = report["inertia_histogram"]
    total = sum(hist["durations_h"]) + hist["underflow_h"] + hist["overflow_h"]
    assert total == pytest.approx(8784.0)
    assert report["inertia_below"]["4"]["hours"] == pytest.approx(293.0)
    assert report["share_at_or_above"]["30"]["hours"] == pytest.approx(495.0)
    assert (out / "inertia_series.csv").exists()
    assert (out / "share_series.csv").exists()


def test_cli_inertia_empty_csv_is_runtime_error(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("timestamp,conventional_mw,wind_mw,pv_mw,load_mw\n")
    code = main([
        "inertia", "analytics_synthetic_year",
        f"analytics.dispatch_csv={empty}", "-o", str(tmp_path / "out"), "-q",
    ])
    assert code == 3
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["error"] == "EmptySeries"


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("gridfreq ")
