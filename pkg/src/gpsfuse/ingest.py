"""Canonical track CSV parsing, validation and per-flight bundling.

Format (UTF-8, comma separated, one header line)::

    flight_id,source,timestamp,lat,lon,alt
    7,ogps,2018-09-15T12:00:00Z,45.1,-61.5,200.0

``alt`` may be blank. Row numbers in diagnostics are file line numbers, so the
header is line 1 and the first data row is line 2.
"""

from __future__ import annotations

import calendar
import csv
import io
import logging
import re
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyInput, FormatError, RowError
from .geodesy import GeoPoint, Source

log = logging.getLogger(__name__)

HEADER = ("flight_id", "source", "timestamp", "lat", "lon", "alt")
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


@dataclass(frozen=True)
class Track:
    flight_id: str
    source: Source
    points: tuple[GeoPoint, ...]

    def __post_init__(self):
        for p in self.points:
            if p.flight_id != self.flight_id or p.source != self.source:
                raise ValueError("track points must share flight_id and source")
        for a, b in zip(self.points, self.points[1:]):
            if b.timestamp <= a.timestamp:
                raise ValueError("track timestamps must be strictly ascending")

    def __len__(self):
        return len(self.points)

    @property
    def times(self) -> list[int]:
        return [p.timestamp for p in self.points]


@dataclass(frozen=True)
class FlightBundle:
    flight_id: str
    o_track: Track
    i_track: Track

    def __post_init__(self):
        if not self.o_track.points or not self.i_track.points:
            raise ValueError("both tracks of a bundle must be non-empty")
        if self.o_track.source != Source.OGPS or self.i_track.source != Source.IGPS:
            raise ValueError("bundle needs one O-GPS and one I-GPS track")
        if not (self.flight_id == self.o_track.flight_id == self.i_track.flight_id):
            raise ValueError("bundle tracks must share flight_id")

    @property
    def points(self) -> list[GeoPoint]:
        return list(self.o_track.points) + list(self.i_track.points)


@dataclass(frozen=True)
class Exclusion:
    flight_id: str
    reason: str


def parse_timestamp(text: str) -> int:
    if not _TS_RE.match(text):
        raise ValueError("expected YYYY-MM-DDThh:mm:ssZ")
    return calendar.timegm(time.strptime(text, "%Y-%m-%dT%H:%M:%SZ"))


def format_timestamp(t: int) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def flight_sort_key(flight_id: str):
    """Numeric ids sort numerically and ahead of non-numeric ones."""
    return (0, int(flight_id), "") if flight_id.isdigit() else (1, 0, flight_id)


def _parse_float(value: str, field: str, row: int) -> float:
    try:
        v = float(value)
    except ValueError:
        raise RowError(row, field, f"not a number: {value!r}") from None
    if v != v or v in (float("inf"), float("-inf")):
        raise RowError(row, field, "not finite")
    return v


def _parse_row(rec: list[str], row: int, declared: Source | None) -> GeoPoint:
    if len(rec) != len(HEADER):
        raise RowError(row, "row", f"expected {len(HEADER)} fields, got {len(rec)}")
    flight_id, source_s, ts_s, lat_s, lon_s, alt_s = (f.strip() for f in rec)
    if not flight_id:
        raise RowError(row, "flight_id", "empty")
    try:
        source = Source.parse(source_s)
    except ValueError:
        raise RowError(row, "source", f"unknown source {source_s!r}") from None
    if source == Source.SYNTHETIC:
        raise RowError(row, "source", "synthetic points are not valid track input")
    if declared is not None and source != declared:
        raise RowError(row, "source", f"row source {source.value} != declared {declared.value}")
    try:
        ts = parse_timestamp(ts_s)
    except ValueError as exc:
        raise RowError(row, "timestamp", str(exc)) from None
    lat = _parse_float(lat_s, "lat", row)
    if not -90.0 <= lat <= 90.0:
        raise RowError(row, "lat", "out of range [-90, 90]")
    lon = _parse_float(lon_s, "lon", row)
    if not -180.0 <= lon <= 180.0:
        raise RowError(row, "lon", "out of range [-180, 180]")
    alt = _parse_float(alt_s, "alt", row) if alt_s else None
    return GeoPoint(flight_id, source, ts, lat, lon, alt)


def canonicalize(points: Iterable[GeoPoint]) -> tuple[list[Track], list[GeoPoint]]:
    """Group points into time-sorted tracks, dropping duplicate timestamps.

    Within one (flight, source) group the first occurrence of a timestamp wins.
    Returns the tracks and the dropped duplicates.
    """
    groups: dict[tuple[str, Source], dict[int, GeoPoint]] = {}
    dropped = []
    for p in points:
        g = groups.setdefault((p.flight_id, p.source), {})
        if p.timestamp in g:
            dropped.append(p)
        else:
            g[p.timestamp] = p
    tracks = [
        Track(fid, src, tuple(g[t] for t in sorted(g)))
        for (fid, src), g in sorted(groups.items(), key=lambda kv: (flight_sort_key(kv[0][0]), kv[0][1].value))
    ]
    return tracks, dropped


def parse_track_file(
    data: bytes | str, declared_source: Source | None = None
) -> tuple[list[Track], list[RowError]]:
    """Parse canonical track CSV into one Track per (flight, source).

    ``declared_source`` pins every row to one source; None accepts a combined
    file. Bad rows are skipped and reported as :class:`RowError` diagnostics.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    if not text.strip():
        raise EmptyInput("track file is empty")
    reader = csv.reader(io.StringIO(text))
    header = None
    try:
        for header in reader:
            if header:
                break
    except csv.Error:
        header = None
    if not header or tuple(h.strip().lower() for h in header) != HEADER:
        raise FormatError(f"missing or malformed header; expected {','.join(HEADER)}")

    points: list[GeoPoint] = []
    rows: dict[int, int] = {}
    errors: list[RowError] = []
    while True:
        try:
            rec = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            errors.append(RowError(reader.line_num, "row", str(exc)))
            continue
        row = reader.line_num
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            p = _parse_row(rec, row, declared_source)
        except RowError as exc:
            errors.append(exc)
            continue
        rows[id(p)] = row
        points.append(p)

    tracks, dropped = canonicalize(points)
    for p in dropped:
        errors.append(RowError(rows[id(p)], "timestamp", "duplicate timestamp for flight/source; kept first"))
    errors.sort(key=lambda e: e.row)
    return tracks, errors


def format_float(v: float) -> str:
    """Shortest repr that round-trips; keeps track files lossless."""
    return repr(float(v) + 0.0)


def write_track_csv(tracks: Sequence[Track]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for tr in sorted(tracks, key=lambda t: (flight_sort_key(t.flight_id), t.source.value)):
        for p in tr.points:
            w.writerow(
                [
                    p.flight_id,
                    p.source.value,
                    format_timestamp(p.timestamp),
                    format_float(p.lat),
                    format_float(p.lon),
                    "" if p.alt is None else format_float(p.alt),
                ]
            )
    return buf.getvalue()


def bundle(tracks: Sequence[Track]) -> tuple[list[FlightBundle], list[Exclusion]]:
    """Pair O-GPS and I-GPS tracks by flight.

    Several tracks for one (flight, source), e.g. from two handheld units, are
    merged. Flights missing a source are excluded and reported.
    """
    by_flight: dict[str, dict[Source, list[GeoPoint]]] = {}
    for tr in tracks:
        by_flight.setdefault(tr.flight_id, {}).setdefault(tr.source, []).extend(tr.points)

    bundles, excluded = [], []
    for fid in sorted(by_flight, key=flight_sort_key):
        sources = by_flight[fid]
        missing = [s.value for s in (Source.OGPS, Source.IGPS) if not sources.get(s)]
        if missing:
            excluded.append(Exclusion(fid, "missing " + "+".join(missing)))
            log.info("flight %s excluded: missing %s", fid, "+".join(missing))
            continue
        merged, _ = canonicalize(sources[Source.OGPS] + sources[Source.IGPS])
        o = next(t for t in merged if t.source == Source.OGPS)
        i = next(t for t in merged if t.source == Source.IGPS)
        bundles.append(FlightBundle(fid, o, i))
    return bundles, excluded
