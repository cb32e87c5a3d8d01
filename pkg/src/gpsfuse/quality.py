"""Pre-processing filters and neighbor-count rejection statistics.

Land-sea mask file layout (all header text ASCII, ``\\n`` line endings)::

    GPSFUSE-LANDSEA-MASK 1
    lat_min=<float>
    lat_max=<float>
    lon_min=<float>
    lon_max=<float>
    cell_deg=<float>
    rows=<int>
    cols=<int>
    <empty line>
    <ceil(rows*cols/8) bytes of packed bits>

Bits are row-major, row 0 is the northernmost row and column 0 the
westernmost, most significant bit first, 1 = land, trailing pad bits 0.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyInput, FormatError, NoGeotags
from .geodesy import GeoPoint

log = logging.getLogger(__name__)

MAGIC = "GPSFUSE-LANDSEA-MASK 1"
GAP_THRESHOLD_S = 43.75
NEIGHBOR_HALF_WINDOW_S = 30.0


@dataclass(frozen=True, eq=False)
class LandSeaMask:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    cell_deg: float
    cells: np.ndarray  # bool, shape (rows, cols), row 0 = north

    def __post_init__(self):
        if not (self.lat_max > self.lat_min and self.lon_max > self.lon_min and self.cell_deg > 0):
            raise FormatError("mask bounds must be increasing and cell_deg positive")
        rows = (self.lat_max - self.lat_min) / self.cell_deg
        cols = (self.lon_max - self.lon_min) / self.cell_deg
        if self.cells.ndim != 2 or (round(rows), round(cols)) != self.cells.shape:
            raise FormatError(f"grid shape {self.cells.shape} inconsistent with bounds and cell size")
        if abs(rows - round(rows)) > 1e-6 or abs(cols - round(cols)) > 1e-6:
            raise FormatError("bounds are not a whole number of cells")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def in_bounds(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max

    def cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        rows, cols = self.shape
        r = min(int(math.floor((self.lat_max - lat) / self.cell_deg)), rows - 1)
        c = min(int(math.floor((lon - self.lon_min) / self.cell_deg)), cols - 1)
        return max(r, 0), max(c, 0)

    def is_land(self, lat: float, lon: float) -> bool:
        """Out-of-bounds coordinates count as sea."""
        if not self.in_bounds(lat, lon):
            return False
        return bool(self.cells[self.cell_of(lat, lon)])

    def to_bytes(self) -> bytes:
        rows, cols = self.shape
        header = "\n".join(
            [
                MAGIC,
                f"lat_min={self.lat_min!r}",
                f"lat_max={self.lat_max!r}",
                f"lon_min={self.lon_min!r}",
                f"lon_max={self.lon_max!r}",
                f"cell_deg={self.cell_deg!r}",
                f"rows={rows}",
                f"cols={cols}",
                "",
                "",
            ]
        )
        return header.encode("ascii") + np.packbits(self.cells.astype(np.uint8).ravel(), bitorder="big").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LandSeaMask":
        sep = data.find(b"\n\n")
        if sep < 0:
            raise FormatError("mask header not terminated by an empty line")
        lines = data[:sep].decode("ascii", errors="replace").split("\n")
        if lines[0] != MAGIC:
            raise FormatError(f"not a land-sea mask (expected {MAGIC!r})")
        fields = {}
        for line in lines[1:]:
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        try:
            rows, cols = int(fields["rows"]), int(fields["cols"])
            bounds = [float(fields[k]) for k in ("lat_min", "lat_max", "lon_min", "lon_max", "cell_deg")]
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad mask header: {exc}") from None
        payload = np.frombuffer(data[sep + 2 :], dtype=np.uint8)
        if len(payload) != (rows * cols + 7) // 8:
            raise FormatError(f"mask payload is {len(payload)} bytes, expected {(rows * cols + 7) // 8}")
        bits = np.unpackbits(payload, bitorder="big")[: rows * cols].astype(bool)
        return cls(*bounds, cells=bits.reshape(rows, cols))


class Partition(NamedTuple):
    retained: list
    removed: list
    out_of_bounds: int = 0


@dataclass(frozen=True)
class QualityReport:
    flight_id: str
    total: int
    removed_land: int
    removed_gap: int
    retained: int


@dataclass(frozen=True)
class NeighborCounts:
    timestamp: float
    n_ogps: int
    n_igps: int


@dataclass(frozen=True)
class FiveNumber:
    min: float
    q1: float
    median: float
    q3: float
    max: float


def land_filter(points: Sequence[GeoPoint], mask: LandSeaMask) -> Partition:
    retained, removed = [], []
    oob = 0
    for p in points:
        if not mask.in_bounds(p.lat, p.lon):
            oob += 1
            retained.append(p)
        elif mask.is_land(p.lat, p.lon):
            removed.append(p)
        else:
            retained.append(p)
    if oob:
        log.warning("%d point(s) outside the land-sea mask treated as sea", oob)
    return Partition(retained, removed, oob)


def bracket_gaps(query_times, geotag_times) -> np.ndarray:
    """Gap between the geotags at-or-before and at-or-after each query; inf if unbracketed."""
    g = np.asarray(geotag_times, dtype=float)
    if g.size == 0:
        raise NoGeotags("gap filter needs at least one geotag")
    q = np.asarray(query_times, dtype=float)
    before = np.searchsorted(g, q, side="right") - 1
    after = np.searchsorted(g, q, side="left")
    ok = (before >= 0) & (after < g.size)
    gaps = np.full(q.shape, np.inf)
    gaps[ok] = g[after[ok]] - g[before[ok]]
    return gaps


def gap_filter(query_times, geotag_times, threshold_s: float = GAP_THRESHOLD_S) -> Partition:
    """Drop query times whose bracketing geotags are more than ``threshold_s`` apart."""
    gaps = bracket_gaps(query_times, geotag_times)
    retained, removed = [], []
    for t, gap in zip(query_times, gaps):
        (removed if gap > threshold_s else retained).append(t)
    return Partition(retained, removed)


def neighbor_counts(query_times, o_times, i_times, half_window_s: float = NEIGHBOR_HALF_WINDOW_S) -> list[NeighborCounts]:
    q = np.asarray(query_times, dtype=float)
    out = []
    per_source = []
    for times in (o_times, i_times):
        t = np.asarray(times, dtype=float)
        lo = np.searchsorted(t, q - half_window_s, side="left")
        hi = np.searchsorted(t, q + half_window_s, side="right")
        per_source.append(hi - lo)
    for k, qt in enumerate(query_times):
        out.append(NeighborCounts(qt, int(per_source[0][k]), int(per_source[1][k])))
    return out


def five_number(values: Sequence[float]) -> FiveNumber:
    """Min, quartiles (inclusive method) and max."""
    v = sorted(values)
    if not v:
        raise EmptyInput("five-number summary of no values")
    if len(v) == 1:
        return FiveNumber(*([float(v[0])] * 5))
    q1, med, q3 = statistics.quantiles(v, n=4, method="inclusive")
    return FiveNumber(float(v[0]), float(q1), float(med), float(q3), float(v[-1]))


def count_summary(counts: Sequence[NeighborCounts]) -> dict[str, FiveNumber]:
    if not counts:
        raise EmptyInput("no neighbor counts to summarise")
    return {
        "ogps": five_number([c.n_ogps for c in counts]),
        "igps": five_number([c.n_igps for c in counts]),
    }


def filter_points(
    flight_id: str,
    points: Sequence[GeoPoint],
    geotag_times: Sequence[int],
    mask: LandSeaMask | None = None,
    threshold_s: float = GAP_THRESHOLD_S,
) -> tuple[list[GeoPoint], QualityReport]:
    """Land filter then gap filter; each removal is charged to the first filter that fails."""
    if mask is not None:
        sea, land, _ = land_filter(points, mask)
    else:
        sea, land = list(points), []
    gaps = bracket_gaps([p.timestamp for p in sea], sorted(geotag_times))
    kept = [p for p, g in zip(sea, gaps) if not g > threshold_s]
    report = QualityReport(flight_id, len(points), len(land), len(sea) - len(kept), len(kept))
    return kept, report


def rejection_summary(
    query_times,
    o_times,
    i_times,
    threshold_s: float = GAP_THRESHOLD_S,
    half_window_s: float = NEIGHBOR_HALF_WINDOW_S,
) -> dict[str, dict[str, tuple[int, FiveNumber | None]]]:
    """Neighbor-count summaries for all, gap-accepted and gap-rejected query times.

    Returns ``{group: {source: (n, summary)}}``; ``summary`` is None for an empty group.
    """
    o = np.sort(np.asarray(o_times, dtype=float))
    i = np.sort(np.asarray(i_times, dtype=float))
    geotags = np.sort(np.concatenate([o, i]))
    kept, dropped, _ = gap_filter(list(query_times), geotags, threshold_s)
    out = {}
    for group, qs in (("all", list(query_times)), ("accepted", kept), ("rejected", dropped)):
        if qs:
            s = count_summary(neighbor_counts(qs, o, i, half_window_s))
            out[group] = {src: (len(qs), s[src]) for src in ("ogps", "igps")}
        else:
            out[group] = {src: (0, None) for src in ("ogps", "igps")}
    return out
