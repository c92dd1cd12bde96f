"""Run configuration: a single hierarchical JSON file per run plus
``key=value`` command-line overrides.

Sections: ``grid`` (required), then at least one of ``scenario``, ``region``,
``analytics``; ``output`` is optional. Unknown keys are rejected so typos in
overrides fail loudly. Relative paths inside a config resolve against the
config file's directory.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

from .engine import Event, Scenario, SimOptions
from .errors import ConfigError
from .model import (
    AreaParams,
    GridModel,
    PrimaryControlParams,
    SecondaryControlParams,
    TieLine,
    ValidatedGridModel,
    validate,
)
from .region import RegionSpec

_GRID_KEYS = {"f0", "areas", "ties"}
_AREA_KEYS = {"id", "H", "S_B", "k_load", "primary", "secondary"}
_PRIMARY_KEYS = {"reserve", "delay", "full_activation_time", "droop_bias"}
_SECONDARY_KEYS = {
    "reserve", "C_p", "T_N", "response_time", "frequency_bias",
    "activation_delay", "ace_filter_time",
}
_TIE_KEYS = {"from", "to", "rating", "coupling"}
_SCENARIO_KEYS = {
    "horizon", "dt", "record_stride", "events", "controls", "reference_areas",
    "thresholds_hz",
}
_CONTROL_KEYS = {"primary", "secondary", "load_damping", "per_area"}
_EVENT_KEYS = {"time", "kind", "area", "power", "duration"}
_REGION_KEYS = {
    "x1_min", "x1_max", "x1_count", "x2_min", "x2_max", "x2_count",
    "tolerance", "time_budget", "hold_time", "dt", "unwrap_bound",
    "reference_area", "inertia_scale", "damping_scale", "workers",
}
_ANALYTICS_KEYS = {
    "dispatch_csv", "h_conv", "h_res", "inertia_bin_edges", "share_bin_edges",
    "inertia_below_thresholds", "share_at_or_above_thresholds",
}
_OUTPUT_KEYS = {"directory"}
_TOP_KEYS = {"grid", "scenario", "region", "analytics", "output"}

CONFIG_KEY_HELP = """\
configuration keys (units in brackets):
  grid.f0                                nominal frequency [Hz]
  grid.areas[].id                        area identifier
  grid.areas[].H                         inertia constant [s]
  grid.areas[].S_B                       base (rated) power [MW]
  grid.areas[].k_load                    load damping [% of S_B per Hz]
  grid.areas[].primary.reserve           primary reserve magnitude [MW]
  grid.areas[].primary.delay             primary activation dead time [s]
  grid.areas[].primary.full_activation_time
                                         time to full primary deployment [s]
  grid.areas[].primary.droop_bias        droop [Hz/MW]; default: full reserve
                                         at a 0.2 Hz deviation
  grid.areas[].secondary.reserve         secondary reserve magnitude [MW]
  grid.areas[].secondary.C_p             proportional gain [-]
  grid.areas[].secondary.T_N             integral time constant [s]
  grid.areas[].secondary.response_time   time to full secondary deployment [s]
  grid.areas[].secondary.frequency_bias  ACE frequency weighting [MW/Hz];
                                         default: droop gain + load damping
  grid.areas[].secondary.activation_delay  dead time before AGC reacts [s]
  grid.areas[].secondary.ace_filter_time   first-order ACE smoothing [s]
  grid.ties[].from, .to                  endpoint area ids
  grid.ties[].rating                     reporting threshold [MW]
  grid.ties[].coupling                   power at sin = 1 [MW]; default rating
  scenario.horizon                       simulated span [s]
  scenario.dt                            integration step [s]
  scenario.record_stride                 steps between recorded samples [-]
  scenario.thresholds_hz                 frequency thresholds to report [Hz]
  scenario.events[].time                 event time [s], multiple of dt
  scenario.events[].kind                 step_power_imbalance | clear_fault
  scenario.events[].area                 affected area id
  scenario.events[].power                imbalance size [MW] (step events)
  scenario.events[].duration             imbalance duration [s]; omit for
                                         persistent
  scenario.controls.primary/.secondary   enable control layers [bool]
  scenario.controls.load_damping         frequency-dependent load [bool]
  scenario.controls.per_area             per-area {primary,secondary} [bool]
  scenario.reference_areas               area ids pinned at angle 0, speed 0
  region.x1_min/.x1_max/.x1_count        angle-difference axis [rad], samples
  region.x2_min/.x2_max/.x2_count        frequency-difference axis [Hz]
  region.tolerance                       convergence ball radius [rad | Hz]
  region.time_budget                     per-point simulation budget [s]
  region.hold_time                       required stay inside the ball [s]
  region.dt                              classification step [s]
  region.unwrap_bound                    |x1| beyond which a point diverged
                                         [rad]
  region.reference_area                  pinned area id
  region.inertia_scale/.damping_scale    multipliers on all dynamic areas [-]
  region.workers                         worker processes; null = in-process
  analytics.dispatch_csv                 dispatch input path (relative to the
                                         config file)
  analytics.h_conv/.h_res                inertia per class [s]
  analytics.inertia_bin_edges            histogram edges [s]
  analytics.share_bin_edges              histogram edges [%]
  analytics.inertia_below_thresholds     duration thresholds [s]
  analytics.share_at_or_above_thresholds duration thresholds [%]
  output.directory                       artifact directory
"""


def bundled_config_names() -> list[str]:
    root = resources.files("gridfreq").joinpath("configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config_path(name_or_path: str) -> Path:
    """Accept a filesystem path or the name of a bundled config."""
    path = Path(name_or_path)
    if path.exists():
        return path
    stem = name_or_path[:-5] if name_or_path.endswith(".json") else name_or_path
    if re.fullmatch(r"[A-Za-z0-9_\-]+", stem):
        bundled = resources.files("gridfreq").joinpath("configs", f"{stem}.json")
        with resources.as_file(bundled) as concrete:
            if concrete.exists():
                return concrete
    raise ConfigError(
        f"config {name_or_path!r} is neither a file nor a bundled name; "
        f"bundled configs: {', '.join(bundled_config_names())}"
    )


def load_config(name_or_path: str) -> dict:
    path = resolve_config_path(name_or_path)
    try:
        with open(path) as stream:
            cfg = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    cfg["_config_dir"] = str(path.resolve().parent)
    return cfg


_INDEX_RE = re.compile(r"^(.*)\[(\d+)\]$")


def apply_overrides(cfg: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as JSON when
    possible, else as strings."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target: Any = cfg
        parts = key.split(".")
        try:
            for n, part in enumerate(parts):
                index = None
                match = _INDEX_RE.match(part)
                if match:
                    part, index = match.group(1), int(match.group(2))
                last = n == len(parts) - 1
                if index is None:
                    if last:
                        target[part] = value
                    else:
                        target = target.setdefault(part, {})
                else:
                    seq = target[part] if part else target
                    if last:
                        seq[index] = value
                    else:
                        target = seq[index]
        except (KeyError, IndexError, TypeError, AttributeError):
            raise ConfigError(f"override path {key!r} does not match the config") from None
    return cfg


def _section(cfg: dict, name: str, allowed: set, required: bool = False) -> Optional[dict]:
    if name not in cfg:
        if required:
            raise ConfigError(f"missing required section {name!r}")
        return None
    section = cfg[name]
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: must be an object")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}: unknown key (see --help)")
    return section


def _number(container: dict, path: str, key: str, default=None, required=True):
    if key not in container:
        if required:
            raise ConfigError(f"{path}.{key}: missing")
        return default
    value = container[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"{path}.{key}: must be finite")
    return float(value)


def check_sections(cfg: dict) -> None:
    for key in cfg:
        if key not in _TOP_KEYS and key != "_config_dir":
            raise ConfigError(f"{key}: unknown top-level section (see --help)")
    if "grid" not in cfg:
        raise ConfigError("missing required section 'grid'")
    if not any(name in cfg for name in ("scenario", "region", "analytics")):
        raise ConfigError("at least one of scenario/region/analytics must be present")


def build_grid_model(cfg: dict) -> ValidatedGridModel:
    grid = _section(cfg, "grid", _GRID_KEYS, required=True)
    f0 = _number(grid, "grid", "f0", default=50.0, required=False)
    raw_areas = grid.get("areas")
    if not isinstance(raw_areas, list) or not raw_areas:
        raise ConfigError("grid.areas: must be a non-empty list")
    areas = []
    for n, raw in enumerate(raw_areas):
        path = f"grid.areas[{n}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: must be an object")
        for key in raw:
            if key not in _AREA_KEYS:
                raise ConfigError(f"{path}.{key}: unknown key")
        if "id" not in raw or not isinstance(raw["id"], str) or not raw["id"]:
            raise ConfigError(f"{path}.id: missing or not a string")
        primary = None
        if raw.get("primary") is not None:
            p = raw["primary"]
            for key in p:
                if key not in _PRIMARY_KEYS:
                    raise ConfigError(f"{path}.primary.{key}: unknown key")
            primary = PrimaryControlParams(
                reserve=_number(p, f"{path}.primary", "reserve"),
                delay=_number(p, f"{path}.primary", "delay"),
                full_activation_time=_number(p, f"{path}.primary", "full_activation_time"),
                droop_bias=_number(p, f"{path}.primary", "droop_bias", required=False),
            )
        secondary = None
        if raw.get("secondary") is not None:
            s = raw["secondary"]
            for key in s:
                if key not in _SECONDARY_KEYS:
                    raise ConfigError(f"{path}.secondary.{key}: unknown key")
            secondary = SecondaryControlParams(
                reserve=_number(s, f"{path}.secondary", "reserve"),
                C_p=_number(s, f"{path}.secondary", "C_p"),
                T_N=_number(s, f"{path}.secondary", "T_N"),
                response_time=_number(s, f"{path}.secondary", "response_time"),
                frequency_bias=_number(s, f"{path}.secondary", "frequency_bias", required=False),
                activation_delay=_number(
                    s, f"{path}.secondary", "activation_delay", default=0.0, required=False
                ),
                ace_filter_time=_number(
                    s, f"{path}.secondary", "ace_filter_time", default=0.0, required=False
                ),
            )
        areas.append(AreaParams(
            id=raw["id"],
            H=_number(raw, path, "H"),
            S_B=_number(raw, path, "S_B"),
            k_load=_number(raw, path, "k_load"),
            primary=primary,
            secondary=secondary,
        ))
    ties = []
    for n, raw in enumerate(grid.get("ties", []) or []):
        path = f"grid.ties[{n}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: must be an object")
        for key in raw:
            if key not in _TIE_KEYS:
                raise ConfigError(f"{path}.{key}: unknown key")
        for key in ("from", "to"):
            if key not in raw or not isinstance(raw[key], str):
                raise ConfigError(f"{path}.{key}: missing or not a string")
        ties.append(TieLine(
            from_area=raw["from"],
            to_area=raw["to"],
            rating=_number(raw, path, "rating"),
            coupling=_number(raw, path, "coupling", required=False),
        ))
    return validate(GridModel(f0=f0, areas=areas, ties=ties))


def build_scenario(cfg: dict, model: Optional[ValidatedGridModel] = None) -> Scenario:
    section = _section(cfg, "scenario", _SCENARIO_KEYS, required=True)
    if model is None:
        model = build_grid_model(cfg)
    events = []
    for n, raw in enumerate(section.get("events", []) or []):
        path = f"scenario.events[{n}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: must be an object")
        for key in raw:
            if key not in _EVENT_KEYS:
                raise ConfigError(f"{path}.{key}: unknown key")
        kind = raw.get("kind")
        if kind not in ("step_power_imbalance", "clear_fault"):
            raise ConfigError(f"{path}.kind: expected step_power_imbalance or clear_fault")
        if not isinstance(raw.get("area"), str):
            raise ConfigError(f"{path}.area: missing or not a string")
        events.append(Event(
            time=_number(raw, path, "time"),
            kind=kind,
            area=raw["area"],
            power=_number(raw, path, "power", required=False),
            duration=_number(raw, path, "duration", required=False),
        ))
    controls = section.get("controls", {}) or {}
    if not isinstance(controls, dict):
        raise ConfigError("scenario.controls: must be an object")
    for key in controls:
        if key not in _CONTROL_KEYS:
            raise ConfigError(f"scenario.controls.{key}: unknown key")
    per_area = controls.get("per_area", {}) or {}
    if not isinstance(per_area, dict):
        raise ConfigError("scenario.controls.per_area: must be an object")
    options = SimOptions(
        primary=bool(controls.get("primary", True)),
        secondary=bool(controls.get("secondary", True)),
        load_damping=bool(controls.get("load_damping", True)),
        per_area={k: dict(v) for k, v in per_area.items()},
        reference_areas=tuple(section.get("reference_areas", []) or []),
    )
    stride = section.get("record_stride", 10)
    if not isinstance(stride, int) or isinstance(stride, bool):
        raise ConfigError("scenario.record_stride: expected an integer")
    return Scenario(
        model=model,
        events=tuple(events),
        horizon=_number(section, "scenario", "horizon"),
        dt=_number(section, "scenario", "dt", default=0.01, required=False),
        record_stride=stride,
        options=options,
    )


def scenario_thresholds(cfg: dict, f0: float) -> list[float]:
    section = cfg.get("scenario", {})
    raw = section.get("thresholds_hz")
    if raw is None:
        return [f0 - 0.5, f0 + 0.5]
    if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
        raise ConfigError("scenario.thresholds_hz: expected a list of numbers")
    return [float(v) for v in raw]


@dataclass(frozen=True)
class RegionRequest:
    model: ValidatedGridModel
    damping: tuple[float, ...]
    spec: RegionSpec
    reference_area: Optional[str]
    workers: Optional[int]


def build_region_request(cfg: dict) -> RegionRequest:
    from .dynamics import damping_from_k_load

    section = _section(cfg, "region", _REGION_KEYS)
    if section is None:
        raise ConfigError("missing required section 'region'")
    model = build_grid_model(cfg)
    inertia_scale = _number(section, "region", "inertia_scale", default=1.0, required=False)
    damping_scale = _number(section, "region", "damping_scale", default=1.0, required=False)
    if inertia_scale <= 0.0 or damping_scale <= 0.0:
        raise ConfigError("region.inertia_scale/.damping_scale: must be > 0")
    if inertia_scale != 1.0:
        scaled = GridModel(
            f0=model.f0,
            areas=[replace(a, H=a.H * inertia_scale) for a in model.areas],
            ties=model.ties,
        )
        model = validate(scaled)
    damping = tuple(
        damping_scale * damping_from_k_load(a.k_load, a.S_B) for a in model.areas
    )
    reference = section.get("reference_area")
    if reference is not None and not isinstance(reference, str):
        raise ConfigError("region.reference_area: expected an area id string")
    workers = section.get("workers")
    if workers is not None and (not isinstance(workers, int) or isinstance(workers, bool)):
        raise ConfigError("region.workers: expected an integer or null")
    counts = {}
    for key in ("x1_count", "x2_count"):
        value = section.get(key)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"region.{key}: expected an integer")
        counts[key] = value
    spec = RegionSpec(
        x1_min=_number(section, "region", "x1_min"),
        x1_max=_number(section, "region", "x1_max"),
        x1_count=counts["x1_count"],
        x2_min=_number(section, "region", "x2_min"),
        x2_max=_number(section, "region", "x2_max"),
        x2_count=counts["x2_count"],
        tolerance=_number(section, "region", "tolerance"),
        time_budget=_number(section, "region", "time_budget"),
        hold_time=_number(section, "region", "hold_time", default=5.0, required=False),
        dt=_number(section, "region", "dt", default=0.02, required=False),
        unwrap_bound=_number(
            section, "region", "unwrap_bound", default=4.0 * math.pi, required=False
        ),
    )
    return RegionRequest(
        model=model, damping=damping, spec=spec, reference_area=reference, workers=workers
    )


@dataclass(frozen=True)
class AnalyticsRequest:
    dispatch_csv: Path
    h_conv: float
    h_res: float
    inertia_bin_edges: tuple[float, ...]
    share_bin_edges: tuple[float, ...]
    inertia_below_thresholds: tuple[float, ...]
    share_at_or_above_thresholds: tuple[float, ...]


def build_analytics_request(cfg: dict) -> AnalyticsRequest:
    section = _section(cfg, "analytics", _ANALYTICS_KEYS)
    if section is None:
        raise ConfigError("missing required section 'analytics'")
    raw_path = section.get("dispatch_csv")
    if not isinstance(raw_path, str) or not raw_path:
        raise ConfigError("analytics.dispatch_csv: missing or not a string")
    path = Path(raw_path)
    if not path.is_absolute():
        path = Path(cfg.get("_config_dir", ".")) / path
    def edge_list(key, default):
        raw = section.get(key, default)
        if (not isinstance(raw, list) or len(raw) < 2
                or not all(isinstance(v, (int, float)) for v in raw)):
            raise ConfigError(f"analytics.{key}: expected a list of >= 2 numbers")
        return tuple(float(v) for v in raw)
    def threshold_list(key, default):
        raw = section.get(key, default)
        if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
            raise ConfigError(f"analytics.{key}: expected a list of numbers")
        return tuple(float(v) for v in raw)
    return AnalyticsRequest(
        dispatch_csv=path,
        h_conv=_number(section, "analytics", "h_conv", default=6.0, required=False),
        h_res=_number(section, "analytics", "h_res", default=0.0, required=False),
        inertia_bin_edges=edge_list("inertia_bin_edges", [2.5, 3.5, 4.5, 5.5, 6.5]),
        share_bin_edges=edge_list("share_bin_edges", [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]),
        inertia_below_thresholds=threshold_list("inertia_below_thresholds", [4.0, 3.5]),
        share_at_or_above_thresholds=threshold_list(
            "share_at_or_above_thresholds", [30.0, 40.0, 50.0]
        ),
    )


def output_directory(cfg: dict, override: Optional[str] = None) -> Path:
    if override:
        return Path(override)
    section = _section(cfg, "output", _OUTPUT_KEYS)
    if section is None or not section.get("directory"):
        return Path("gridfreq-out")
    return Path(section["directory"])
