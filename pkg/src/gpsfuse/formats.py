"""CSV readers and writers for every artifact the pipeline produces.

Derived outputs print floats with 9 significant digits. Track and truth files
use the shortest round-trip representation instead so they reload bit-exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .align import OffsetEstimate
from .errors import EmptyInput, FormatError
from .fuse import FusedTrack
from .geodesy import GeoPoint, Source, from_local_arrays
from .ingest import flight_sort_key, format_float, format_timestamp, parse_timestamp
from .quality import FiveNumber, QualityReport
from .sim import BearingMetrics, TruthTrack
from .solar import FeatureRow

OFFSETS_HEADER = ("flight_id", "min_distance_m", "offset_seconds")
FUSED_HEADER = ("flight_id", "timestamp", "lat", "lon", "contributors")
QUALITY_HEADER = ("flight_id", "total", "removed_land", "removed_gap", "retained")
TRUTH_HEADER = ("flight_id", "timestamp", "lat", "lon", "alt", "bearing", "ecef_dx", "ecef_dy", "ecef_dz")
METRICS_HEADER = ("flight_id", "n", "median_abs_err_deg", "p90_abs_err_deg", "rmse_deg")
REJECT_HEADER = ("group", "source", "n", "min", "q1", "median", "q3", "max")


def fmt(v: float) -> str:
    return format(float(v) + 0.0, ".9g")


def _write(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read(text: str, header: Sequence[str], what: str) -> list[dict[str, str]]:
    if not text.strip():
        raise EmptyInput(f"{what} file is empty")
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff")))
    try:
        head = next(reader)
        if tuple(h.strip() for h in head[: len(header)]) != tuple(header):
            raise FormatError(f"{what}: expected header starting {','.join(header)}")
        out = []
        for rec in reader:
            if not rec:
                continue
            if len(rec) < len(header):
                raise FormatError(f"{what} line {reader.line_num}: expected {len(header)} fields")
            out.append(dict(zip(head, rec)))
    except csv.Error as exc:
        raise FormatError(f"{what} line {reader.line_num}: {exc}") from None
    return out


def sniff_header(text: str) -> tuple[str, ...]:
    first = text.lstrip("\ufeff").split("\n", 1)[0]
    return tuple(h.strip() for h in first.split(","))


# offsets


def write_offsets(estimates: Sequence[OffsetEstimate]) -> str:
    rows = sorted(estimates, key=lambda e: flight_sort_key(e.flight_id))
    return _write(OFFSETS_HEADER, ([e.flight_id, fmt(e.min_distance_m), e.offset_seconds] for e in rows))


def read_offsets(text: str) -> dict[str, OffsetEstimate]:
    out = {}
    for r in _read(text, OFFSETS_HEADER, "offsets"):
        try:
            est = OffsetEstimate(r["flight_id"], int(r["offset_seconds"]), float(r["min_distance_m"]))
        except ValueError as exc:
            raise FormatError(f"offsets: {exc}") from None
        out[est.flight_id] = est
    return out


# fused tracks


@dataclass(frozen=True)
class FusedRow:
    flight_id: str
    timestamp: int
    lat: float
    lon: float
    contributors: int

    def as_geopoint(self) -> GeoPoint:
        return GeoPoint(self.flight_id, Source.SYNTHETIC, self.timestamp, self.lat, self.lon)


def fused_rows(track: FusedTrack) -> list[FusedRow]:
    x, y = track.xy()
    z = np.array([p.z for p in track.points])
    lat, lon, _ = from_local_arrays(track.frame, x, y, z)
    return [
        FusedRow(track.flight_id, p.timestamp, float(a), float(b), p.contributors)
        for p, a, b in zip(track.points, np.atleast_1d(lat), np.atleast_1d(lon))
    ]


def write_fused(rows: Sequence[FusedRow]) -> str:
    rows = sorted(rows, key=lambda r: (flight_sort_key(r.flight_id), r.timestamp))
    return _write(
        FUSED_HEADER,
        ([r.flight_id, format_timestamp(r.timestamp), fmt(r.lat), fmt(r.lon), r.contributors] for r in rows),
    )


def read_fused(text: str) -> list[FusedRow]:
    out = []
    for r in _read(text, FUSED_HEADER, "fused"):
        try:
            out.append(
                FusedRow(r["flight_id"], parse_timestamp(r["timestamp"]), float(r["lat"]), float(r["lon"]), int(r["contributors"]))
            )
        except ValueError as exc:
            raise FormatError(f"fused: {exc}") from None
    return out


# quality and features


def write_quality(reports: Sequence[QualityReport]) -> str:
    rows = sorted(reports, key=lambda q: flight_sort_key(q.flight_id))
    return _write(QUALITY_HEADER, ([q.flight_id, q.total, q.removed_land, q.removed_gap, q.retained] for q in rows))


def features_header(cameras: Sequence[str]) -> tuple[str, ...]:
    return ("flight_id", "timestamp", "bearing", "sun_azimuth", "sun_elevation") + tuple(
        f"{c}_az_abs_diff" for c in cameras
    ) + ("carried",)


def write_features(by_flight: Sequence[tuple[str, Sequence[FeatureRow]]], cameras: Sequence[str]) -> str:
    rows = []
    for fid, feats in sorted(by_flight, key=lambda kv: flight_sort_key(kv[0])):
        for f in feats:
            rows.append(
                [fid, format_timestamp(f.timestamp), fmt(f.bearing), fmt(f.sun_azimuth), fmt(f.sun_elevation)]
                + [fmt(f.az_abs_diff[c]) for c in cameras]
                + ["true" if f.carried else "false"]
            )
    return _write(features_header(cameras), rows)


# simulation truth and metrics


def write_truth(truths: Sequence[TruthTrack]) -> str:
    rows = []
    for tr in sorted(truths, key=lambda t: flight_sort_key(t.flight_id)):
        for k in range(len(tr.times)):
            d = tr.ecef_dir[k]
            rows.append(
                [tr.flight_id, format_timestamp(int(tr.times[k]))]
                + [format_float(v) for v in (tr.lat[k], tr.lon[k], tr.alt[k], tr.bearing[k], d[0], d[1], d[2])]
            )
    return _write(TRUTH_HEADER, rows)


def read_truth(text: str) -> dict[str, TruthTrack]:
    groups: dict[str, list[dict[str, str]]] = {}
    for r in _read(text, TRUTH_HEADER, "truth"):
        groups.setdefault(r["flight_id"], []).append(r)
    out = {}
    try:
        for fid, rs in groups.items():
            rs.sort(key=lambda r: r["timestamp"])
            col = lambda k: np.array([float(r[k]) for r in rs])  # noqa: E731
            out[fid] = TruthTrack(
                fid,
                np.array([parse_timestamp(r["timestamp"]) for r in rs], dtype=np.int64),
                col("lat"),
                col("lon"),
                col("alt"),
                col("bearing"),
                np.stack([col("ecef_dx"), col("ecef_dy"), col("ecef_dz")], axis=1),
            )
    except ValueError as exc:
        raise FormatError(f"truth: {exc}") from None
    return out


def write_metrics(metrics: Sequence[tuple[str, BearingMetrics]]) -> str:
    rows = sorted(metrics, key=lambda kv: flight_sort_key(kv[0]))
    return _write(
        METRICS_HEADER,
        ([fid, m.n, fmt(m.median_abs_err_deg), fmt(m.p90_abs_err_deg), fmt(m.rmse_deg)] for fid, m in rows),
    )


def write_reject_stats(summary: dict[str, dict[str, tuple[int, FiveNumber | None]]]) -> str:
    rows = []
    for group in ("all", "accepted", "rejected"):
        for source in ("ogps", "igps"):
            n, s = summary[group][source]
            stats = ["", "", "", "", ""] if s is None else [fmt(s.min), fmt(s.q1), fmt(s.median), fmt(s.q3), fmt(s.max)]
            rows.append([group, source, n] + stats)
    return _write(REJECT_HEADER, rows)

