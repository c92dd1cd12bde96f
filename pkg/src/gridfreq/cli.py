"""Scenario-driven command line: simulate | region | inertia.

Each run reads one config (a file path or a bundled name), applies
``key=value`` overrides, writes its artifacts plus a manifest, and exits 0 on
success, 2 on configuration errors, 3 on runtime errors. Errors also emit a
single machine-readable JSON line on stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analytics import (
    duration_below,
    histogram,
    inertia_series,
    ingest_dispatch,
    InertiaAssumptions,
    res_share_series,
    series_to_csv,
)
from .config import (
    CONFIG_KEY_HELP,
    apply_overrides,
    build_analytics_request,
    build_grid_model,
    build_region_request,
    build_scenario,
    bundled_config_names,
    check_sections,
    load_config,
    output_directory,
    scenario_thresholds,
)
from .engine import extract_metrics, integrate, metrics_to_flat_dict, trajectory_to_csv
from .errors import ConfigError, GridFreqError, ModelError, NonFiniteState, SimulationError
from .region import estimate_region

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as stream:
        for block in iter(lambda: stream.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as out:
        json.dump(payload, out, indent=2, sort_keys=True)
        out.write("\n")


def _write_manifest(out_dir: Path, command: str, cfg: dict, started: str,
                    outputs: Sequence[Path]) -> None:
    snapshot = {k: v for k, v in cfg.items() if k != "_config_dir"}
    manifest = {
        "tool": "gridfreq",
        "version": __version__,
        "command": command,
        "config": snapshot,
        "started_utc": started,
        "finished_utc": _utc_now(),
        "outputs": [
            {"name": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)}
            for p in sorted(outputs)
        ],
    }
    handle, tmp_name = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(handle, "w") as out:
            json.dump(manifest, out, indent=2, sort_keys=True)
            out.write("\n")
        os.replace(tmp_name, out_dir / "manifest.json")
    except BaseException:
        os.unlink(tmp_name)
        raise


def _emit_error(exc: Exception) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))


def run_simulate(config: str, overrides: Sequence[str], output_dir: Optional[str]) -> int:
    started = _utc_now()
    try:
        cfg = apply_overrides(load_config(config), overrides)
        check_sections(cfg)
        model = build_grid_model(cfg)
        scenario = build_scenario(cfg, model)
        from .engine import validate_scenario

        validate_scenario(scenario)
        thresholds = scenario_thresholds(cfg, model.f0)
        out_dir = output_directory(cfg, output_dir)
    except (ConfigError, ModelError, SimulationError) as exc:
        logger.error("configuration error: %s", exc)
        _emit_error(exc)
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        logger.info("simulating %.0f s over %d areas", scenario.horizon, len(model.areas))
        try:
            trajectory = integrate(scenario)
        except NonFiniteState as exc:
            if exc.trajectory is not None:
                trajectory_to_csv(exc.trajectory, out_dir / "trajectory_partial.csv")
                logger.error("state diverged; partial trajectory written")
            raise
        metrics = extract_metrics(trajectory, thresholds)
        traj_path = out_dir / "trajectory.csv"
        metrics_path = out_dir / "metrics.json"
        trajectory_to_csv(trajectory, traj_path)
        _write_json(metrics_path, metrics_to_flat_dict(metrics))
        _write_manifest(out_dir, "simulate", cfg, started, [traj_path, metrics_path])
    except GridFreqError as exc:
        logger.error("simulation failed: %s", exc)
        _emit_error(exc)
        return EXIT_RUNTIME
    logger.info("wrote %s", out_dir)
    return EXIT_OK


def run_region(config: str, overrides: Sequence[str], output_dir: Optional[str]) -> int:
    started = _utc_now()
    try:
        cfg = apply_overrides(load_config(config), overrides)
        check_sections(cfg)
        request = build_region_request(cfg)
        out_dir = output_directory(cfg, output_dir)
    except (ConfigError, ModelError, SimulationError) as exc:
        logger.error("configuration error: %s", exc)
        _emit_error(exc)
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        logger.info(
            "classifying %d x %d grid", request.spec.x1_count, request.spec.x2_count
        )
        region_map = estimate_region(
            request.model, request.damping, request.spec,
            reference_area=request.reference_area, workers=request.workers,
        )
        csv_path = out_dir / "region.csv"
        summary_path = out_dir / "region_summary.json"
        region_map.to_csv(csv_path)
        _write_json(summary_path, region_map.summary())
        _write_manifest(out_dir, "region", cfg, started, [csv_path, summary_path])
    except GridFreqError as exc:
        logger.error("region estimation failed: %s", exc)
        _emit_error(exc)
        return EXIT_RUNTIME
    logger.info("wrote %s", out_dir)
    return EXIT_OK


def run_inertia(config: str, overrides: Sequence[str], output_dir: Optional[str]) -> int:
    started = _utc_now()
    try:
        cfg = apply_overrides(load_config(config), overrides)
        check_sections(cfg)
        request = build_analytics_request(cfg)
        out_dir = output_directory(cfg, output_dir)
    except (ConfigError, ModelError) as exc:
        logger.error("configuration error: %s", exc)
        _emit_error(exc)
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        logger.info("ingesting %s", request.dispatch_csv)
        records = ingest_dispatch(request.dispatch_csv)
        assumptions = InertiaAssumptions(H_conv=request.h_conv, H_res=request.h_res)
        shares = res_share_series(records)
        inertia = inertia_series(records, assumptions)
        report = {
            "samples": len(records),
            "assumptions": {"H_conv": request.h_conv, "H_res": request.h_res},
            "inertia_histogram": histogram(inertia, request.inertia_bin_edges).to_dict(),
            "share_histogram": histogram(shares, request.share_bin_edges).to_dict(),
            "inertia_below": {},
            "share_at_or_above": {},
        }
        for threshold in request.inertia_below_thresholds:
            hours, pct = duration_below(inertia, threshold, "below")
            report["inertia_below"][f"{threshold:g}"] = {"hours": hours, "percent": pct}
        for threshold in request.share_at_or_above_thresholds:
            hours, pct = duration_below(shares, threshold, "at_or_above")
            report["share_at_or_above"][f"{threshold:g}"] = {"hours": hours, "percent": pct}
        inertia_path = out_dir / "inertia_series.csv"
        share_path = out_dir / "share_series.csv"
        report_path = out_dir / "analytics_report.json"
        series_to_csv(inertia, inertia_path, "h_agg", "s")
        series_to_csv(shares, share_path, "res_share", "%")
        _write_json(report_path, report)
        _write_manifest(
            out_dir, "inertia", cfg, started, [inertia_path, share_path, report_path]
        )
    except FileNotFoundError as exc:
        logger.error("input not found: %s", exc)
        _emit_error(exc)
        return EXIT_RUNTIME
    except GridFreqError as exc:
        logger.error("analytics failed: %s", exc)
        _emit_error(exc)
        return EXIT_RUNTIME
    logger.info("wrote %s", out_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridfreq",
        description="Multi-area grid frequency dynamics: simulation, "
                    "stability regions and dispatch inertia analytics.",
        epilog=CONFIG_KEY_HELP + "\nbundled configs: " + ", ".join(bundled_config_names()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"gridfreq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "run a time-domain scenario; writes trajectory.csv + metrics.json"),
        ("region", "estimate the region of attraction; writes region.csv + summary"),
        ("inertia", "dispatch analytics; writes series CSVs + analytics_report.json"),
    ):
        cmd = sub.add_parser(name, help=text, description=text,
                             epilog=CONFIG_KEY_HELP,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
        cmd.add_argument("config", help="config file path or bundled config name")
        cmd.add_argument("overrides", nargs="*", metavar="key=value",
                         help="config overrides, e.g. scenario.dt=0.005")
        cmd.add_argument("-o", "--output-dir", help="artifact directory (overrides config)")
        cmd.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        cmd.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    if getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr, level=level, format="[%(levelname)s] %(name)s: %(message)s"
    )
    runner = {"simulate": run_simulate, "region": run_region, "inertia": run_inertia}
    return runner[args.command](args.config, args.overrides, args.output_dir)


if __name__ == "__main__":
    raise SystemExit(main())
