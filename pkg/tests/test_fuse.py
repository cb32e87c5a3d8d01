import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsfuse.align import OffsetEstimate, estimate_offset, track_xy
from gpsfuse.errors import InsufficientData
from gpsfuse.fuse import Kind, SyntheticPoint, WeightParams, fuse_local, fuse_point, fuse_track, linear_seed, neighbor_weight
from gpsfuse.geodesy import LocalPoint, Source, from_local_arrays, make_frame, to_local_arrays
from gpsfuse.ingest import FlightBundle, Track
from gpsfuse.sim import SimConfig, generate

P = WeightParams()


def lpt(t, x, y, src=Source.OGPS):
    return LocalPoint(x, y, 0.0, t, src)


def naive_fuse(o, i, params=P):
    """Direct evaluation of the weighted centroid; o and i are lists of (t, x, y)."""
    o = sorted(o)
    seeds = []
    t = o[0][0]
    while t <= o[-1][0]:
        for (ta, xa, ya), (tb, xb, yb) in zip(o, o[1:]):
            if ta <= t <= tb:
                u = (t - ta) / (tb - ta)
                seeds.append((t, xa + u * (xb - xa), ya + u * (yb - ya)))
                break
        t += params.seed_spacing_s
    pool = [(p, params.w_ogps) for p in o] + [(p, params.w_igps) for p in i] + [(p, params.w_synth) for p in seeds]
    out = []
    for ts, _, _ in seeds:
        sw = sx = sy = 0.0
        n = 0
        for (tp, xp, yp), ws in pool:
            if abs(tp - ts) <= params.window_s:
                w = ws / (params.w_temporal * abs(tp - ts) + 1)
                sw += w
                sx += w * xp
                sy += w * yp
                n += 1
        out.append((ts, sx / sw, sy / sw, n))
    return out


def arrays(rows):
    t, x, y = zip(*rows)
    return np.array(t, dtype=np.int64), np.array(x, float), np.array(y, float)


def run_local(o, i, params=P):
    o_t, o_x, o_y = arrays(o)
    i_t, i_x, i_y = arrays(i)
    return fuse_local(o_t, o_x, o_y, np.zeros(len(o_t)), i_t, i_x, i_y, params)


# neighbor_weight

def test_weight_ogps_zero():
    assert neighbor_weight(Source.OGPS, 0) == 8.0


def test_weight_igps_ten():
    assert neighbor_weight(Source.IGPS, 10) == pytest.approx(5 / 6, abs=1e-12)


def test_weight_synthetic_window_edge():
    assert neighbor_weight(Source.SYNTHETIC, -40) == pytest.approx(5 / 21, abs=1e-12)


@given(st.floats(0, 1e4), st.floats(1e-6, 1e4), st.sampled_from(list(Source)))
def test_weight_strictly_decreasing(a, delta, src):
    b = a + delta
    if b == a:
        return
    assert neighbor_weight(src, b) < neighbor_weight(src, a)
    assert neighbor_weight(src, -a) == neighbor_weight(src, a)


@given(st.floats(0, 1e4))
def test_weight_ordering(dt):
    o, i, s = (neighbor_weight(src, dt) for src in (Source.OGPS, Source.IGPS, Source.SYNTHETIC))
    assert o > i == s


def test_params_validated():
    for bad in (dict(w_ogps=0), dict(w_temporal=-1), dict(window_s=0), dict(seed_spacing_s=0)):
        with pytest.raises(ValueError):
            WeightParams(**bad)


# linear_seed

def test_seed_midpoint():
    seeds = linear_seed([lpt(0, 0, 0), lpt(10, 100, 0)], 5)
    assert [(s.timestamp, s.x, s.y) for s in seeds] == [(0, 0, 0), (5, 50, 0), (10, 100, 0)]
    assert all(s.kind == Kind.SEED for s in seeds)


def test_seed_at_knot_is_exact():
    pts = [lpt(0, 0.1, 0.2), lpt(7, 3.3, -1.7), lpt(20, 9.9, 4.4)]
    seeds = {s.timestamp: s for s in linear_seed(pts, 1)}
    for p in pts:
        assert (seeds[p.timestamp].x, seeds[p.timestamp].y) == (p.x, p.y)


def test_seed_piecewise():
    seeds = {s.timestamp: s for s in linear_seed([lpt(0, 0, 0), lpt(10, 100, 0), lpt(20, 100, 100)], 5)}
    assert (seeds[15].x, seeds[15].y) == (100, 50)


def test_seed_stops_at_last_o_time():
    seeds = linear_seed([lpt(0, 0, 0), lpt(12, 12, 0)], 5)
    assert [s.timestamp for s in seeds] == [0, 5, 10]


def test_seed_needs_two_points():
    with pytest.raises(InsufficientData):
        linear_seed([lpt(0, 0, 0)], 5)


# fuse_point

def test_fuse_point_seed_only():
    seed = SyntheticPoint(0, 10.0, 20.0)
    out = fuse_point(seed, [seed.as_local()])
    assert (out.x, out.y, out.kind, out.contributors) == (10.0, 20.0, Kind.FUSED, 1)


def test_fuse_point_two_terms():
    seed = SyntheticPoint(0, 0.0, 0.0)
    out = fuse_point(seed, [seed.as_local(), lpt(0, 2.0, 0.0)])
    assert out.x == pytest.approx(16 / 13, abs=1e-12) and out.y == 0.0


def test_fuse_point_coincident():
    seed = SyntheticPoint(100, 3.25, -7.5)
    nb = [seed.as_local(), lpt(70, 3.25, -7.5), lpt(140, 3.25, -7.5, Source.IGPS), lpt(95, 3.25, -7.5, Source.IGPS)]
    out = fuse_point(seed, nb)
    assert abs(out.x - 3.25) <= 1e-12 and abs(out.y + 7.5) <= 1e-12


def test_fuse_point_window_inclusive():
    seed = SyntheticPoint(0, 0.0, 0.0)
    out = fuse_point(seed, [seed.as_local(), lpt(40, 21.0, 0.0, Source.SYNTHETIC), lpt(-41, 99.0, 0.0)])
    assert out.contributors == 2
    assert out.x == pytest.approx((5 / 21 * 21.0) / (5 + 5 / 21), abs=1e-12)


def test_fuse_point_requires_neighbors():
    with pytest.raises(ValueError):
        fuse_point(SyntheticPoint(0, 0, 0), [lpt(100, 0, 0)])


# fuse_local / fuse_track

track_rows = st.lists(
    st.tuples(st.integers(0, 400), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)),
    min_size=2,
    max_size=50,
    unique_by=lambda r: r[0],
)


@settings(max_examples=100, deadline=None)
@given(track_rows, track_rows)
def test_matches_naive_reference(o, i):
    o, i = sorted(o), sorted(i)
    got = run_local(o, i)
    ref = naive_fuse(o, i)
    assert [p.timestamp for p in got] == [r[0] for r in ref]
    for p, (_, x, y, n) in zip(got, ref):
        assert abs(p.x - x) <= 1e-9 and abs(p.y - y) <= 1e-9
        assert p.contributors == n


@settings(max_examples=100, deadline=None)
@given(track_rows, track_rows)
def test_fused_points_in_convex_hull(o, i):
    o, i = sorted(o), sorted(i)
    seeds = {s.timestamp: s for s in linear_seed([lpt(t, x, y) for t, x, y in o])}
    pool = o + i + [(s.timestamp, s.x, s.y) for s in seeds.values()]
    for p in run_local(o, i):
        nb = np.array([(x, y) for t, x, y in pool if abs(t - p.timestamp) <= P.window_s])
        for ang in np.linspace(0, math.pi, 12, endpoint=False):
            d = np.array([math.cos(ang), math.sin(ang)])
            proj = nb @ d
            v = p.x * d[0] + p.y * d[1]
            assert proj.min() - 1e-6 <= v <= proj.max() + 1e-6


@settings(max_examples=100, deadline=None)
@given(track_rows, track_rows, st.floats(-1e5, 1e5), st.floats(-1e5, 1e5))
def test_translation_equivariance(o, i, vx, vy):
    o, i = sorted(o), sorted(i)
    base = run_local(o, i)
    moved = run_local([(t, x + vx, y + vy) for t, x, y in o], [(t, x + vx, y + vy) for t, x, y in i])
    for a, b in zip(base, moved):
        assert b.x - a.x == pytest.approx(vx, abs=1e-6)
        assert b.y - a.y == pytest.approx(vy, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(track_rows, track_rows, st.floats(1e-3, 1e3))
def test_scale_equivariance(o, i, s):
    o, i = sorted(o), sorted(i)
    base = run_local(o, i)
    scaled = run_local([(t, x * s, y * s) for t, x, y in o], [(t, x * s, y * s) for t, x, y in i])
    for a, b in zip(base, scaled):
        assert b.x == pytest.approx(a.x * s, rel=1e-9, abs=1e-9)
        assert b.y == pytest.approx(a.y * s, rel=1e-9, abs=1e-9)


def test_coincident_inputs_reproduced():
    o = [(t, 123.456, -9.75) for t in range(0, 200, 10)]
    i = [(t, 123.456, -9.75) for t in range(1, 200, 3)]
    for p in run_local(o, i):
        assert abs(p.x - 123.456) <= 1e-12 and abs(p.y + 9.75) <= 1e-12


def test_uniform_spacing_and_contributors():
    o = [(t, float(t), 0.0) for t in range(0, 101, 10)]
    pts = run_local(o, [(3, 0.0, 0.0)])
    assert [p.timestamp for p in pts] == list(range(0, 101, 5))
    assert all(p.contributors >= 1 for p in pts)


def test_noise_free_straight_flight_is_collinear():
    cfg = SimConfig(seed=1, duration_s=900, straight=True, heading_deg=37.0, ogps_noise_m=0, igps_noise_m=0, bias_per_hour=0)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    fused = fuse_track(b, estimate_offset(b, frame), P, frame)
    x, y = fused.xy()
    # line through the first and last truth points, expressed in the fused frame
    tx, ty, _ = to_local_arrays(frame, truth.lat[[0, -1]], truth.lon[[0, -1]], truth.alt[[0, -1]])
    d = np.array([tx[1] - tx[0], ty[1] - ty[0]])
    d /= np.hypot(*d)
    off = (x - tx[0]) * d[1] - (y - ty[0]) * d[0]
    assert np.max(np.abs(off)) < 1e-6


def test_outlier_is_diluted():
    cfg = SimConfig(seed=2, duration_s=600, straight=True, ogps_noise_m=0, igps_noise_m=0, bias_per_hour=0,
                    igps_rate_s=1, igps_jitter_s=0)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    it, ix, iy = track_xy(b.i_track, frame)
    k = int(np.searchsorted(it, b.o_track.times[0] + 300))
    ix[k] += 500.0  # one fix thrown 500 m across track
    lat, lon, _ = from_local_arrays(frame, ix, iy, np.full(len(ix), cfg.alt_m))
    pts = tuple(replace(p, lat=float(a), lon=float(c)) for p, a, c in zip(b.i_track.points, lat, lon))
    bad = FlightBundle(b.flight_id, b.o_track, Track(b.flight_id, Source.IGPS, pts))

    fused = {p.timestamp: p for p in fuse_track(bad, OffsetEstimate(b.flight_id, 0, 0.0), P, frame).points}
    p = fused[int(it[k])]
    j = int(np.searchsorted(truth.times, it[k]))
    gx, gy, _ = to_local_arrays(frame, truth.lat[j], truth.lon[j], truth.alt[j])
    err = math.hypot(p.x - gx, p.y - gy)
    assert err < 500.0
    assert err < 50.0
