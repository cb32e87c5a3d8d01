"""Ground-truth flights with injected GPS errors, for verifying the pipeline.

The truth path is built in the simulation's own tangent plane from straight
legs joined by constant-rate turns and evaluated analytically, so turn
timing is exact at any resolution. Altitude is constant in that plane; the
ellipsoidal height written to the tracks therefore drifts slightly with
distance from the plane's origin, which keeps every frame change an exact
rigid motion.

Error model:

* O-GPS: fixed-rate samples with small Gaussian planar noise, optional outages.
* I-GPS: irregular integer-second samples (optionally in duty-cycle bursts),
  Student-t planar noise and occasional sustained-bias segments standing in
  for sea-surface multipath, recorded on a clock shifted by ``clock_offset_s``.

Each error component draws from its own RNG stream, so changing one
magnitude leaves every other draw untouched.
"""

from __future__ import annotations

import calendar
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .align import track_xy
from .errors import ConfigError, FrameRangeExceeded, NoOverlap
from .fuse import FusedTrack
from .geodesy import (
    GeoPoint,
    LocalFrame,
    Source,
    angular_abs_diff,
    direction_bearing,
    forward_bearings,
    from_local_arrays,
)
from .ingest import FlightBundle, Track

TURN_RATE_AVERAGE = 45.0 / 43.75
TURN_RATE_FASTEST = 45.0 / 20.75
DEFAULT_START = calendar.timegm((2018, 9, 15, 12, 0, 0))


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    flight_id: str = "1"
    start_time: int = DEFAULT_START
    duration_s: int = 3600
    speed_mps: float = 51.0
    turn_rate_deg_s: float = TURN_RATE_AVERAGE
    heading_deg: float | None = None  # None draws a random initial heading
    leg_s: tuple[float, float] = (240.0, 720.0)
    turn_deg: tuple[float, float] = (30.0, 180.0)
    schedule: tuple[tuple[float, float], ...] | None = None  # explicit (leg_s, signed turn_deg) pairs
    straight: bool = False
    origin_lat: float = 45.0
    origin_lon: float = -61.5
    alt_m: float = 200.0
    ogps_rate_s: int = 10
    ogps_noise_m: float = 0.5
    ogps_dropouts_per_hour: float = 0.0
    ogps_dropout_s: tuple[float, float] = (60.0, 180.0)
    igps_rate_s: float = 3.0
    igps_jitter_s: float = 2.0
    igps_burst_s: float | None = None
    igps_period_s: float | None = None
    igps_noise_m: float = 3.0
    igps_noise_df: float = 3.0
    bias_per_hour: float = 2.0
    bias_m: float = 15.0
    bias_s: tuple[float, float] = (30.0, 120.0)
    clock_offset_s: int = 0

    def __post_init__(self):
        positive = ("duration_s", "speed_mps", "turn_rate_deg_s", "ogps_rate_s", "igps_rate_s", "igps_noise_df")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("ogps_noise_m", "igps_noise_m", "igps_jitter_s", "bias_per_hour", "bias_m", "ogps_dropouts_per_hour"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("leg_s", "turn_deg", "bias_s", "ogps_dropout_s"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ConfigError(f"{name} must be an ordered non-negative range")
        if self.leg_s[1] <= 0:
            raise ConfigError("leg_s upper bound must be positive")
        if int(self.clock_offset_s) != self.clock_offset_s or int(self.ogps_rate_s) != self.ogps_rate_s:
            raise ConfigError("clock_offset_s and ogps_rate_s must be whole seconds")
        if (self.igps_burst_s is None) != (self.igps_period_s is None):
            raise ConfigError("igps_burst_s and igps_period_s go together")
        if self.igps_period_s is not None and not 0 < self.igps_burst_s <= self.igps_period_s:
            raise ConfigError("need 0 < igps_burst_s <= igps_period_s")
        if not (-90 < self.origin_lat < 90 and -180 <= self.origin_lon <= 180):
            raise ConfigError("origin outside valid coordinates")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Segment:
    t0: float
    duration: float
    heading0: float  # degrees
    rate: float  # signed degrees per second, 0 for a straight leg
    x0: float
    y0: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    segments: tuple[Segment, ...]
    speed: float

    def _locate(self, t):
        starts = np.array([s.t0 for s in self.segments])
        return np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.segments) - 1)

    def state(self, t):
        """Planar position and heading (degrees) at times ``t`` (seconds from start)."""
        t = np.asarray(t, dtype=float)
        seg_idx = self._locate(t)
        x = np.empty(t.shape)
        y = np.empty(t.shape)
        h = np.empty(t.shape)
        for k, s in enumerate(self.segments):
            sel = seg_idx == k
            if not sel.any():
                continue
            dt = t[sel] - s.t0
            h0 = math.radians(s.heading0)
            if s.rate == 0.0:
                x[sel] = s.x0 + self.speed * dt * math.sin(h0)
                y[sel] = s.y0 + self.speed * dt * math.cos(h0)
                h[sel] = s.heading0
            else:
                w = math.radians(s.rate)
                hh = h0 + w * dt
                r = self.speed / w
                x[sel] = s.x0 + r * (math.cos(h0) - np.cos(hh))
                y[sel] = s.y0 + r * (np.sin(hh) - math.sin(h0))
                h[sel] = np.degrees(hh)
        return x, y, h % 360.0

    def turns(self) -> list[Segment]:
        return [s for s in self.segments if s.rate != 0.0]


def build_trajectory(cfg: SimConfig, rng: np.random.Generator) -> Trajectory:
    heading = cfg.heading_deg if cfg.heading_deg is not None else float(rng.uniform(0.0, 360.0))
    if cfg.straight:
        plan = [(float(cfg.duration_s), 0.0)]
    elif cfg.schedule is not None:
        plan = [(float(a), float(b)) for a, b in cfg.schedule]
    else:
        plan, total = [], 0.0
        while total <= cfg.duration_s:
            leg = float(rng.uniform(*cfg.leg_s))
            turn = float(rng.uniform(*cfg.turn_deg)) * (1 if rng.random() < 0.5 else -1)
            plan.append((leg, turn))
            total += leg + abs(turn) / cfg.turn_rate_deg_s

    segs = []
    t = x = y = 0.0
    for leg, turn in plan:
        # nanosecond rounding keeps 45 / (45 / 43.75) at exactly 43.75 s
        turn_s = round(abs(turn) / cfg.turn_rate_deg_s, 9)
        for duration, rate, dh in ((leg, 0.0, 0.0), (turn_s, math.copysign(cfg.turn_rate_deg_s, turn), turn)):
            if duration <= 0:
                continue
            seg = Segment(t, duration, heading, rate, x, y)
            segs.append(seg)
            end_x, end_y, _ = Trajectory((seg,), cfg.speed_mps).state(np.array([t + duration]))
            x, y = float(end_x[0]), float(end_y[0])
            heading = heading + dh
            t += duration
    if t < cfg.duration_s:
        segs.append(Segment(t, cfg.duration_s - t, heading, 0.0, x, y))
    return Trajectory(tuple(segs), cfg.speed_mps)


@dataclass(frozen=True, eq=False)
class TruthTrack:
    """Dense 1 s truth. ``bearing`` is the true-north heading at each point and
    ``ecef_dir`` the unit velocity in ECEF, which re-expresses exactly in any frame."""

    flight_id: str
    times: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    alt: np.ndarray
    bearing: np.ndarray
    ecef_dir: np.ndarray
    trajectory: Trajectory | None = field(default=None, repr=False)

    def bearings_in(self, frame: LocalFrame) -> np.ndarray:
        return direction_bearing(self.ecef_dir, frame)


def _segments_mask(times, starts, lengths) -> np.ndarray:
    hit = np.zeros(len(times), dtype=bool)
    for a, n in zip(starts, lengths):
        hit |= (times >= a) & (times <= a + n)
    return hit


def _poisson_segments(rng, per_hour, duration, length_range):
    n = rng.poisson(per_hour * duration / 3600.0)
    starts = rng.uniform(0.0, duration, n)
    lengths = rng.uniform(*length_range, n)
    return starts, lengths


def _geo(cfg, frame, x, y, source, times):
    lat, lon, alt = from_local_arrays(frame, x, y, np.full(len(x), cfg.alt_m))
    return tuple(
        GeoPoint(cfg.flight_id, source, int(t), float(a), float(b), float(c))
        for t, a, b, c in zip(times, lat, lon, alt)
    )


def generate(cfg: SimConfig) -> tuple[TruthTrack, FlightBundle]:
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(6)]
    rng_route, rng_o, rng_itime, rng_inoise, rng_bias, rng_drop = streams
    frame = LocalFrame(cfg.origin_lat, cfg.origin_lon, 0.0)
    traj = build_trajectory(cfg, rng_route)
    dur = int(cfg.duration_s)

    # truth
    tt = np.arange(0, dur + 1)
    tx, ty, th = traj.state(tt)
    try:
        lat, lon, alt = from_local_arrays(frame, tx, ty, np.full(len(tt), cfg.alt_m))
    except FrameRangeExceeded as exc:
        raise ConfigError(f"simulated flight leaves the planar frame: {exc}") from None
    hr = np.radians(th)
    dirs = np.stack([np.sin(hr), np.cos(hr), np.zeros(len(hr))], axis=1) @ frame.rotation
    phi, lam = np.radians(lat), np.radians(lon)
    east = -np.sin(lam) * dirs[:, 0] + np.cos(lam) * dirs[:, 1]
    north = -np.sin(phi) * np.cos(lam) * dirs[:, 0] - np.sin(phi) * np.sin(lam) * dirs[:, 1] + np.cos(phi) * dirs[:, 2]
    true_north = np.degrees(np.arctan2(east, north)) % 360.0
    truth = TruthTrack(cfg.flight_id, tt + cfg.start_time, lat, lon, alt, true_north, dirs, traj)

    # O-GPS
    ot = np.arange(0, dur + 1, int(cfg.ogps_rate_s))
    d_start, d_len = _poisson_segments(rng_drop, cfg.ogps_dropouts_per_hour, dur, cfg.ogps_dropout_s)
    ot = ot[~_segments_mask(ot, d_start, d_len)]
    if len(ot) < 2:
        raise ConfigError("O-GPS outages leave fewer than two samples")
    ox, oy, _ = traj.state(ot)
    o_noise = rng_o.normal(0.0, 1.0, (len(ot), 2)) * cfg.ogps_noise_m
    ox, oy = ox + o_noise[:, 0], oy + o_noise[:, 1]

    # I-GPS
    times = []
    t = int(rng_itime.integers(0, max(1, int(round(cfg.igps_rate_s)))))
    while t <= dur:
        times.append(t)
        step = cfg.igps_rate_s + rng_itime.uniform(-cfg.igps_jitter_s, cfg.igps_jitter_s)
        t += max(1, int(round(step)))
    it = np.array(times, dtype=np.int64)
    if cfg.igps_period_s is not None:
        it = it[(it % cfg.igps_period_s) < cfg.igps_burst_s]
    if len(it) == 0:
        raise ConfigError("I-GPS sampling produced no points")
    ix, iy, _ = traj.state(it)
    i_noise = rng_inoise.standard_t(cfg.igps_noise_df, (len(it), 2)) * cfg.igps_noise_m
    ix, iy = ix + i_noise[:, 0], iy + i_noise[:, 1]
    b_start, b_len = _poisson_segments(rng_bias, cfg.bias_per_hour, dur, cfg.bias_s)
    b_ang = rng_bias.uniform(0.0, 2 * math.pi, len(b_start))
    for a, n, ang in zip(b_start, b_len, b_ang):
        sel = (it >= a) & (it <= a + n)
        ix[sel] += cfg.bias_m * math.sin(ang)
        iy[sel] += cfg.bias_m * math.cos(ang)

    o_track = Track(cfg.flight_id, Source.OGPS, _geo(cfg, frame, ox, oy, Source.OGPS, ot + cfg.start_time))
    i_track = Track(
        cfg.flight_id,
        Source.IGPS,
        _geo(cfg, frame, ix, iy, Source.IGPS, it + cfg.start_time + int(cfg.clock_offset_s)),
    )
    return truth, FlightBundle(cfg.flight_id, o_track, i_track)


@dataclass(frozen=True)
class BearingMetrics:
    n: int
    median_abs_err_deg: float
    p90_abs_err_deg: float
    rmse_deg: float


def bearing_errors(truth: TruthTrack, frame: LocalFrame, times, x, y) -> np.ndarray:
    """Absolute bearing error at every timestamp shared with the truth."""
    times = np.asarray(times, dtype=np.int64)
    est = np.array([b for b, _ in forward_bearings(list(x), list(y))])
    idx = np.searchsorted(truth.times, times)
    idx_c = np.minimum(idx, len(truth.times) - 1)
    hit = truth.times[idx_c] == times
    if not hit.any():
        raise NoOverlap("no fused timestamp falls on the truth track")
    ref = direction_bearing(truth.ecef_dir[idx_c[hit]], frame)
    return np.array([angular_abs_diff(a, b) for a, b in zip(est[hit], ref)])


def summarize_errors(err: np.ndarray) -> BearingMetrics:
    return BearingMetrics(
        int(len(err)),
        float(np.median(err)),
        float(np.percentile(err, 90)),
        float(np.sqrt(np.mean(err**2))),
    )


def evaluate_bearing(truth: TruthTrack, fused: FusedTrack) -> BearingMetrics:
    x, y = fused.xy()
    return summarize_errors(bearing_errors(truth, fused.frame, fused.times, x, y))


def evaluate_track_bearing(truth: TruthTrack, track: Track, frame: LocalFrame) -> BearingMetrics:
    """Same metrics for a raw track, with bearings by forward differencing its samples."""
    t, x, y = track_xy(track, frame)
    return summarize_errors(bearing_errors(truth, frame, t, x, y))
