"""Per-flight clock offset between the I-GPS and O-GPS receivers.

For every lag ``d`` in ``[-window, window]`` the O-GPS samples are joined to
the I-GPS samples taken ``d`` seconds earlier; the closest cross-source pair in
the local plane fixes the offset. Timestamps are integer seconds and unique
within a track, so each lag is an exact join and the whole search costs
O(n * window) rather than O(n^2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FlightMismatch, NoOverlap
from .geodesy import LocalFrame, Source, to_local_arrays
from .ingest import FlightBundle, Track

DEFAULT_WINDOW_S = 60


@dataclass(frozen=True)
class OffsetEstimate:
    flight_id: str
    offset_seconds: int
    min_distance_m: float
    pair: tuple[int, int] | None = None
    """(O-GPS timestamp, I-GPS timestamp) of the closest pair; None when read back from CSV."""


def track_xy(track: Track, frame: LocalFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Times and planar coordinates of a track in ``frame``."""
    lat = np.array([p.lat for p in track.points])
    lon = np.array([p.lon for p in track.points])
    alt = np.array([p.height for p in track.points])
    x, y, _ = to_local_arrays(frame, lat, lon, alt)
    return np.array(track.times, dtype=np.int64), np.atleast_1d(x), np.atleast_1d(y)


def _candidates(o, i, window_s):
    """Yield (distance, offset, t_o, t_i) for the closest pair at every lag."""
    o_t, o_x, o_y = o
    i_t, i_x, i_y = i
    for d in range(-window_s, window_s + 1):
        target = o_t - d
        idx = np.searchsorted(i_t, target)
        idx_c = np.minimum(idx, len(i_t) - 1)
        hit = i_t[idx_c] == target
        if not hit.any():
            continue
        oi = np.nonzero(hit)[0]
        ii = idx_c[hit]
        dist = np.hypot(o_x[oi] - i_x[ii], o_y[oi] - i_y[ii])
        yield dist, d, o_t[oi], i_t[ii]


def estimate_offset(
    bundle: FlightBundle,
    frame: LocalFrame,
    window_s: int = DEFAULT_WINDOW_S,
    robust_k: int | None = None,
) -> OffsetEstimate:
    """Find the clock offset ``t_o - t_i`` of the closest in-window pair.

    Ties on distance go to the smaller ``|offset|``, then the earlier O-GPS
    timestamp, then the negative offset. With ``robust_k`` set, the offset is
    the low median over the ``k`` closest pairs instead of the single best.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    o = track_xy(bundle.o_track, frame)
    i = track_xy(bundle.i_track, frame)

    best = None
    pool = []
    for dist, d, t_o, t_i in _candidates(o, i, int(window_s)):
        j = int(np.argmin(dist))  # first minimum = earliest O timestamp at this lag
        key = (float(dist[j]), abs(d), int(t_o[j]), d)
        if best is None or key < best[0]:
            best = (key, int(t_i[j]))
        if robust_k:
            order = np.argsort(dist, kind="stable")[:robust_k]
            pool.extend((float(dist[m]), abs(d), int(t_o[m]), d, int(t_i[m])) for m in order)
    if best is None:
        raise NoOverlap(f"flight {bundle.flight_id}: no cross-source pair within ±{window_s} s")

    (dist, _, t_o, offset), t_i = best
    if robust_k:
        pool.sort()
        top = sorted(p[3] for p in pool[:robust_k])
        offset = top[(len(top) - 1) // 2]
    return OffsetEstimate(bundle.flight_id, int(offset), dist, (t_o, t_i))


def apply_offset(track: Track, est: OffsetEstimate) -> Track:
    if track.flight_id != est.flight_id:
        raise FlightMismatch(f"offset for flight {est.flight_id} applied to flight {track.flight_id}")
    if track.source != Source.IGPS:
        raise ValueError("offsets apply to I-GPS tracks only")
    if est.offset_seconds == 0:
        return track
    shifted = tuple(replace(p, timestamp=p.timestamp + est.offset_seconds) for p in track.points)
    return Track(track.flight_id, track.source, shifted)
