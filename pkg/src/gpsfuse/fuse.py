"""Weighted moving-average fusion of O-GPS, I-GPS and linear seed points.

A linear seed is laid along the O-GPS track every ``seed_spacing_s`` seconds.
Each seed is then replaced by the weighted centroid of every point (O-GPS,
offset-corrected I-GPS and the seeds themselves) within ``window_s`` of it,
each weighted by

    w = w_source / (w_temporal * |dt| + 1)

Fusion is a single pass over the seeds, so fused outputs never feed back in.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .align import OffsetEstimate, apply_offset, track_xy
from .errors import InsufficientData
from .geodesy import LocalFrame, LocalPoint, Source, make_frame, to_local_arrays
from .ingest import FlightBundle


@dataclass(frozen=True)
class WeightParams:
    w_ogps: float = 8.0
    w_igps: float = 5.0
    w_synth: float = 5.0
    w_temporal: float = 0.5  # per second
    window_s: float = 40.0
    seed_spacing_s: int = 5

    def __post_init__(self):
        for name in ("w_ogps", "w_igps", "w_synth", "w_temporal", "window_s", "seed_spacing_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.seed_spacing_s) != self.seed_spacing_s:
            raise ValueError("seed_spacing_s must be a whole number of seconds")

    def source_weight(self, source: Source) -> float:
        return {Source.OGPS: self.w_ogps, Source.IGPS: self.w_igps, Source.SYNTHETIC: self.w_synth}[source]


class Kind(str, enum.Enum):
    SEED = "seed"
    FUSED = "fused"


@dataclass(frozen=True)
class SyntheticPoint:
    timestamp: int
    x: float
    y: float
    z: float = 0.0
    kind: Kind = Kind.SEED
    contributors: int = 0

    def as_local(self) -> LocalPoint:
        return LocalPoint(self.x, self.y, self.z, self.timestamp, Source.SYNTHETIC)


@dataclass(frozen=True)
class FusedTrack:
    flight_id: str
    frame: LocalFrame
    points: tuple[SyntheticPoint, ...]

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([p.x for p in self.points]), np.array([p.y for p in self.points])

    @property
    def times(self) -> list[int]:
        return [p.timestamp for p in self.points]


def neighbor_weight(p_source: Source, t_diff_s: float, params: WeightParams = WeightParams()) -> float:
    return params.source_weight(p_source) / (params.w_temporal * abs(t_diff_s) + 1.0)


def _seed_arrays(t, x, y, z, spacing_s: int):
    if len(t) < 2:
        raise InsufficientData("linear seed needs at least two O-GPS points")
    ts = np.arange(t[0], t[-1] + 1, spacing_s, dtype=np.int64)
    ts = ts[ts <= t[-1]]
    tf = t.astype(float)
    return ts, np.interp(ts, tf, x), np.interp(ts, tf, y), np.interp(ts, tf, z)


def linear_seed(o_points: Sequence[LocalPoint], spacing_s: int = 5) -> list[SyntheticPoint]:
    """Seeds from the first to the last O-GPS time, piecewise-linear in time."""
    pts = sorted(o_points, key=lambda p: p.timestamp)
    t = np.array([p.timestamp for p in pts], dtype=np.int64)
    x = np.array([p.x for p in pts])
    y = np.array([p.y for p in pts])
    z = np.array([p.z for p in pts])
    ts, sx, sy, sz = _seed_arrays(t, x, y, z, int(spacing_s))
    return [SyntheticPoint(int(a), float(b), float(c), float(d)) for a, b, c, d in zip(ts, sx, sy, sz)]


def fuse_point(seed: SyntheticPoint, neighbors: Sequence[LocalPoint], params: WeightParams = WeightParams()) -> SyntheticPoint:
    """Weighted centroid of the in-window neighbors. The seed must be among them."""
    sw = sx = sy = 0.0
    n = 0
    for p in neighbors:
        dt = p.timestamp - seed.timestamp
        if abs(dt) > params.window_s:
            continue
        w = neighbor_weight(p.source, dt, params)
        sw += w
        sx += w * p.x
        sy += w * p.y
        n += 1
    if n == 0:
        raise ValueError("neighbors must include the seed itself")
    return SyntheticPoint(seed.timestamp, sx / sw, sy / sw, seed.z, Kind.FUSED, n)


def _window_sums(seed_t, t, x, y, w_source, params):
    lo = np.searchsorted(t, seed_t - params.window_s, side="left")
    hi = np.searchsorted(t, seed_t + params.window_s, side="right")
    sw = np.zeros(len(seed_t))
    sx = np.zeros(len(seed_t))
    sy = np.zeros(len(seed_t))
    for k in range(len(seed_t)):
        a, b = lo[k], hi[k]
        if a == b:
            continue
        w = w_source / (params.w_temporal * np.abs(t[a:b] - seed_t[k]) + 1.0)
        sw[k] = w.sum()
        sx[k] = w @ x[a:b]
        sy[k] = w @ y[a:b]
    return sw, sx, sy, hi - lo


def fuse_local(
    o_t, o_x, o_y, o_z, i_t, i_x, i_y, params: WeightParams = WeightParams()
) -> list[SyntheticPoint]:
    """Array form of the fusion: time-sorted O-GPS and offset-corrected I-GPS in the local plane."""
    st, sx, sy, sz = _seed_arrays(o_t, o_x, o_y, o_z, int(params.seed_spacing_s))
    total_w = np.zeros(len(st))
    total_x = np.zeros(len(st))
    total_y = np.zeros(len(st))
    count = np.zeros(len(st), dtype=np.int64)
    for t, x, y, ws in (
        (o_t, o_x, o_y, params.w_ogps),
        (i_t, i_x, i_y, params.w_igps),
        (st, sx, sy, params.w_synth),
    ):
        w, wx, wy, n = _window_sums(st, t, x, y, ws, params)
        total_w += w
        total_x += wx
        total_y += wy
        count += n
    fx = total_x / total_w
    fy = total_y / total_w
    return [
        SyntheticPoint(int(t), float(a), float(b), float(c), Kind.FUSED, int(n))
        for t, a, b, c, n in zip(st, fx, fy, sz, count)
    ]


def fuse_track(
    bundle: FlightBundle,
    est: OffsetEstimate,
    params: WeightParams = WeightParams(),
    frame: LocalFrame | None = None,
) -> FusedTrack:
    if frame is None:
        frame = make_frame(bundle.points)
    i_track = apply_offset(bundle.i_track, est)
    o = bundle.o_track
    o_t = np.array(o.times, dtype=np.int64)
    o_x, o_y, o_z = to_local_arrays(
        frame,
        np.array([p.lat for p in o.points]),
        np.array([p.lon for p in o.points]),
        np.array([p.height for p in o.points]),
    )
    i_t, i_x, i_y = track_xy(i_track, frame)
    points = fuse_local(o_t, np.atleast_1d(o_x), np.atleast_1d(o_y), np.atleast_1d(o_z), i_t, i_x, i_y, params)
    return FusedTrack(bundle.flight_id, frame, tuple(points))
