"""Dispatch time-series analytics: feed-in shares, aggregated inertia,
threshold durations and histograms.

Input is an hourly-or-any-resolution CSV of generation by category plus load.
Durations are weighted by the timestamp spacing of each sample (the last
sample carries the modal spacing), so gaps are honored without resampling.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

from .dynamics import aggregate_inertia
from .errors import (
    BadEdges,
    EmptySeries,
    MalformedRow,
    NegativePower,
    NonMonotoneTimestamps,
    ZeroGeneration,
    ZeroLoad,
)

REQUIRED_COLUMNS = ("timestamp", "conventional_mw", "wind_mw", "pv_mw", "load_mw")
OPTIONAL_COLUMNS = ("other_res_mw",)

#: (timestamp, value) samples
Series = list[tuple[datetime, float]]


@dataclass(frozen=True)
class DispatchRecord:
    timestamp: datetime
    conventional_mw: float
    wind_mw: float
    pv_mw: float
    load_mw: float
    other_res_mw: Optional[float] = None


@dataclass(frozen=True)
class InertiaAssumptions:
    """Inertia constants per generation class: conventional units spin,
    inverter-connected renewables do not (unless emulating)."""

    H_conv: float = 6.0
    H_res: float = 0.0


@dataclass(frozen=True)
class HistogramReport:
    edges: tuple[float, ...]
    durations_h: tuple[float, ...]
    shares_pct: tuple[float, ...]
    underflow_h: float
    overflow_h: float
    span_h: float

    def to_dict(self) -> dict:
        return {
            "edges": list(self.edges),
            "durations_h": list(self.durations_h),
            "shares_pct": list(self.shares_pct),
            "underflow_h": self.underflow_h,
            "overflow_h": self.overflow_h,
            "span_h": self.span_h,
        }


def ingest_dispatch(source: Union[str, Path, IO[str]]) -> list[DispatchRecord]:
    """Parse and validate a dispatch CSV; errors carry 1-based line numbers."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as stream:
            return _ingest(stream)
    return _ingest(source)


def _ingest(stream: IO[str]) -> list[DispatchRecord]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "missing header row") from None
    header = [h.strip() for h in header]
    for column in REQUIRED_COLUMNS:
        if column not in header:
            raise MalformedRow(1, f"missing required column {column!r}")
    for column in header:
        if column not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS:
            raise MalformedRow(1, f"unknown column {column!r}")
    position = {name: header.index(name) for name in header}

    records: list[DispatchRecord] = []
    previous: Optional[datetime] = None
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
        try:
            stamp = datetime.fromisoformat(row[position["timestamp"]].strip())
        except ValueError as exc:
            raise MalformedRow(line_no, f"bad timestamp: {exc}") from None
        values = {}
        for name in ("conventional_mw", "wind_mw", "pv_mw", "load_mw"):
            raw = row[position[name]].strip()
            try:
                values[name] = float(raw)
            except ValueError:
                raise MalformedRow(line_no, f"bad number {raw!r} in {name}") from None
            if not math.isfinite(values[name]):
                raise MalformedRow(line_no, f"non-finite {name}")
            if values[name] < 0.0:
                raise NegativePower(line_no, f"{name} = {values[name]} is negative")
        other = None
        if "other_res_mw" in position:
            raw = row[position["other_res_mw"]].strip()
            if raw:
                try:
                    other = float(raw)
                except ValueError:
                    raise MalformedRow(line_no, f"bad number {raw!r} in other_res_mw") from None
                if other < 0.0:
                    raise NegativePower(line_no, f"other_res_mw = {other} is negative")
        if previous is not None and stamp <= previous:
            raise NonMonotoneTimestamps(
                line_no, f"timestamp {stamp.isoformat()} does not increase past "
                f"{previous.isoformat()}"
            )
        previous = stamp
        records.append(DispatchRecord(stamp, values["conventional_mw"], values["wind_mw"],
                                      values["pv_mw"], values["load_mw"], other))
    return records


def res_share_series(records: Sequence[DispatchRecord]) -> Series:
    """Inverter-connected feed-in (wind + pv) as percent of load."""
    series: Series = []
    for n, record in enumerate(records):
        if record.load_mw <= 0.0:
            raise ZeroLoad(f"record {n} ({record.timestamp.isoformat()}) has load "
                           f"{record.load_mw}; share is undefined")
        share = (record.wind_mw + record.pv_mw) / record.load_mw * 100.0
        series.append((record.timestamp, share))
    return series


def inertia_series(
    records: Sequence[DispatchRecord],
    assumptions: InertiaAssumptions = InertiaAssumptions(),
) -> Series:
    """Generation-weighted aggregate inertia per sample."""
    series: Series = []
    for n, record in enumerate(records):
        res = record.wind_mw + record.pv_mw
        if record.conventional_mw + res <= 0.0:
            raise ZeroGeneration(
                f"record {n} ({record.timestamp.isoformat()}) has zero generation"
            )
        entries = []
        if record.conventional_mw > 0.0:
            entries.append((assumptions.H_conv, record.conventional_mw))
        if res > 0.0:
            entries.append((assumptions.H_res, res))
        h_agg, _ = aggregate_inertia(entries)
        series.append((record.timestamp, h_agg))
    return series


def _interval_weights_h(series: Sequence[tuple[datetime, float]]) -> list[float]:
    if len(series) < 2:
        raise EmptySeries("need at least two samples to infer interval weights")
    gaps = [
        (series[i + 1][0] - series[i][0]) / timedelta(hours=1)
        for i in range(len(series) - 1)
    ]
    modal = Counter(gaps).most_common()
    best = max(count for _, count in modal)
    last = min(gap for gap, count in modal if count == best)
    return gaps + [last]


def duration_below(
    series: Sequence[tuple[datetime, float]],
    threshold: float,
    mode: str = "below",
) -> tuple[float, float]:
    """Interval-weighted time with value < threshold ('below') or
    >= threshold ('at_or_above'); returns (hours, percent of span)."""
    if not series:
        raise EmptySeries("series is empty")
    if mode not in ("below", "at_or_above"):
        raise ValueError(f"mode must be 'below' or 'at_or_above', got {mode!r}")
    weights = _interval_weights_h(series)
    span = sum(weights)
    if mode == "below":
        hours = sum(w for (_, value), w in zip(series, weights) if value < threshold)
    else:
        hours = sum(w for (_, value), w in zip(series, weights) if value >= threshold)
    return hours, hours / span * 100.0


def histogram(
    series: Sequence[tuple[datetime, float]],
    edges: Sequence[float],
) -> HistogramReport:
    """Interval-weighted histogram over [edges[k], edges[k+1]) bins.

    Samples outside the edge range are reported as underflow/overflow so the
    durations always sum to the series span.
    """
    if not series:
        raise EmptySeries("series is empty")
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadEdges(f"edges must be strictly increasing with >= 2 entries, got {edges}")
    weights = _interval_weights_h(series)
    span = sum(weights)
    durations = [0.0] * (len(edges) - 1)
    underflow = overflow = 0.0
    for (_, value), weight in zip(series, weights):
        if value < edges[0]:
            underflow += weight
            continue
        if value >= edges[-1]:
            overflow += weight
            continue
        for k in range(len(edges) - 1):
            if edges[k] <= value < edges[k + 1]:
                durations[k] += weight
                break
    shares = [d / span * 100.0 for d in durations]
    return HistogramReport(
        edges=tuple(float(e) for e in edges),
        durations_h=tuple(durations),
        shares_pct=tuple(shares),
        underflow_h=underflow,
        overflow_h=overflow,
        span_h=span,
    )


def series_to_csv(series: Series, path, value_name: str, unit: str) -> None:
    with open(path, "w", newline="") as out:
        out.write(f"# units: timestamp ISO 8601, {value_name} {unit}\n")
        out.write(f"timestamp,{value_name}\n")
        for stamp, value in series:
            out.write(f"{stamp.isoformat()},{float(value)!r}\n")


# --- synthetic fixture ---------------------------------------------------------

def synthetic_year_dispatch(year: int = 2012) -> list[DispatchRecord]:
    """Deterministic hourly year with known share/inertia statistics.

    Built to exercise the analytics exactly: with the default assumptions
    (H_conv 6, H_res 0) the series has exactly 293 hours below 4 s of
    aggregate inertia and exactly 495 hours at or above a 30% feed-in share,
    including one exact 50%-share hour (aggregate inertia 3 s).
    """
    hours = 366 * 24 if year % 4 == 0 and (year % 100 != 0 or year % 400 == 0) else 365 * 24
    start = datetime(year, 1, 1)
    low_tail = (0.0, 0.05, 0.10, 0.15)
    records = []
    for h in range(hours):
        stamp = start + timedelta(hours=h)
        day = h / 24.0
        load = (
            60000.0
            + 8000.0 * math.cos(2.0 * math.pi * day / 366.0)
            + 9000.0 * math.sin(2.0 * math.pi * ((h % 24) - 6.0) / 24.0)
        )
        if h == 0:
            conv, wind, pv, load = 30000.0, 20000.0, 10000.0, 60000.0
        elif h < 293:
            share = 0.40
            wind, pv = 0.25 * load, 0.15 * load
            conv = (1.0 - share) * load
        elif h < 495:
            share = 0.32
            wind, pv = 0.20 * load, 0.12 * load
            conv = (1.0 - share) * load
        else:
            share = low_tail[h % len(low_tail)]
            wind = 0.6 * share * load
            pv = 0.4 * share * load
            conv = load - wind - pv
        records.append(DispatchRecord(stamp, conv, wind, pv, load))
    return records


def write_dispatch_csv(records: Iterable[DispatchRecord], path) -> None:
    with open(path, "w", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(list(REQUIRED_COLUMNS))
        for record in records:
            writer.writerow([
                record.timestamp.isoformat(),
                f"{record.conventional_mw:.3f}",
                f"{record.wind_mw:.3f}",
                f"{record.pv_mw:.3f}",
                f"{record.load_mw:.3f}",
            ])
