from dataclasses import replace

import numpy as np
import pytest

from gpsfuse.align import estimate_offset
from gpsfuse.errors import ConfigError, NoOverlap
from gpsfuse.fuse import FusedTrack, Kind, SyntheticPoint, fuse_track
from gpsfuse.geodesy import angular_abs_diff, make_frame, to_local_arrays
from gpsfuse.sim import (
    TURN_RATE_AVERAGE,
    TURN_RATE_FASTEST,
    SimConfig,
    build_trajectory,
    evaluate_bearing,
    evaluate_track_bearing,
    generate,
)

QUIET = dict(ogps_noise_m=0.0, igps_noise_m=0.0, bias_per_hour=0.0)


def test_turn_presets():
    assert 45.0 / TURN_RATE_AVERAGE == pytest.approx(43.75, abs=1e-12)
    assert 45.0 / TURN_RATE_FASTEST == pytest.approx(20.75, abs=1e-12)


def test_45_degree_turn_takes_43_75_s():
    cfg = SimConfig(schedule=((100.0, 45.0), (200.0, 0.0)), heading_deg=0.0, duration_s=400)
    traj = build_trajectory(cfg, np.random.default_rng(0))
    (turn,) = traj.turns()
    assert turn.duration == 43.75 and turn.t0 == 100.0
    assert traj.segments[2].t0 == 143.75
    _, _, h = traj.state(np.array([100.0, 100.0 + 43.75 / 2, 143.75, 300.0]))
    assert h == pytest.approx([0.0, 22.5, 45.0, 45.0], abs=1e-9)


def test_trajectory_continuous_and_constant_speed():
    cfg = SimConfig(seed=4, duration_s=3600)
    traj = build_trajectory(cfg, np.random.default_rng(4))
    t = np.arange(0, 3600, 0.5)
    x, y, _ = traj.state(t)
    step = np.hypot(np.diff(x), np.diff(y))
    # chord of a 0.5 s arc is a hair shorter than the arc itself
    assert np.all(np.abs(step - 0.5 * cfg.speed_mps) < 1e-3)


def test_deterministic():
    cfg = SimConfig(seed=9, duration_s=900, ogps_dropouts_per_hour=3, igps_burst_s=10, igps_period_s=30)
    t1, b1 = generate(cfg)
    t2, b2 = generate(cfg)
    assert b1 == b2
    assert np.array_equal(t1.lat, t2.lat) and np.array_equal(t1.ecef_dir, t2.ecef_dir)


def test_streams_are_independent():
    base = SimConfig(seed=12, duration_s=900)
    _, a = generate(base)
    _, b = generate(replace(base, igps_noise_m=7.0))
    assert a.o_track == b.o_track
    assert a.i_track.times == b.i_track.times


def test_noise_free_tracks_on_truth_line():
    cfg = SimConfig(seed=1, duration_s=600, straight=True, heading_deg=60.0, **QUIET)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    tx, ty, _ = to_local_arrays(frame, truth.lat, truth.lon, truth.alt)
    d = np.array([tx[-1] - tx[0], ty[-1] - ty[0]])
    d /= np.hypot(*d)
    for tr in (b.o_track, b.i_track):
        x, y, _ = to_local_arrays(frame, [p.lat for p in tr.points], [p.lon for p in tr.points], [p.height for p in tr.points])
        assert np.max(np.abs((x - tx[0]) * d[1] - (y - ty[0]) * d[0])) < 1e-6


def test_clock_offset_sign():
    cfg = SimConfig(seed=2, duration_s=1200, clock_offset_s=-5)
    _, b = generate(cfg)
    assert estimate_offset(b, make_frame(b.points)).offset_seconds == 5


def test_outages_and_bursts():
    cfg = SimConfig(seed=3, duration_s=3600, ogps_dropouts_per_hour=4, igps_rate_s=1, igps_jitter_s=0,
                    igps_burst_s=12, igps_period_s=60)
    _, b = generate(cfg)
    gaps = np.diff(b.o_track.times)
    assert gaps.max() > 60
    phase = (np.array(b.i_track.times) - cfg.start_time) % 60
    assert phase.max() < 12


@pytest.mark.parametrize(
    "bad",
    [
        dict(duration_s=0),
        dict(speed_mps=-1),
        dict(ogps_rate_s=0),
        dict(igps_noise_m=-1),
        dict(leg_s=(10, 5)),
        dict(clock_offset_s=1.5),
        dict(igps_burst_s=5),
        dict(igps_burst_s=20, igps_period_s=10),
        dict(origin_lat=95),
    ],
)
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        SimConfig(**bad)


def test_flight_leaving_frame_is_config_error():
    with pytest.raises(ConfigError):
        generate(SimConfig(straight=True, speed_mps=300, duration_s=3600))


# evaluate_bearing

def _subsampled(truth, frame, step=5, rotate=0.0):
    x, y, _ = to_local_arrays(frame, truth.lat, truth.lon, truth.alt)
    idx = np.arange(0, len(truth.times), step)
    pts = tuple(SyntheticPoint(int(truth.times[k]), float(x[k]), float(y[k]), 0.0, Kind.FUSED, 1) for k in idx)
    return FusedTrack(truth.flight_id, frame, pts)


def test_truth_subsampled_scores_zero():
    cfg = SimConfig(seed=0, duration_s=600, straight=True, **QUIET)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    m = evaluate_bearing(truth, _subsampled(truth, frame))
    assert m.median_abs_err_deg < 1e-6 and m.rmse_deg < 1e-6


def test_constant_bearing_offset():
    cfg = SimConfig(seed=0, duration_s=600, straight=True, **QUIET)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    ft = _subsampled(truth, frame)
    x, y = ft.xy()
    c, s = np.cos(np.radians(10)), np.sin(np.radians(10))
    # rotate the whole track 10 deg clockwise about its first point
    rx = x[0] + (x - x[0]) * c + (y - y[0]) * s
    ry = y[0] - (x - x[0]) * s + (y - y[0]) * c
    rot = FusedTrack(ft.flight_id, frame, tuple(replace(p, x=float(a), y=float(b_)) for p, a, b_ in zip(ft.points, rx, ry)))
    m = evaluate_bearing(truth, rot)
    assert m.median_abs_err_deg == pytest.approx(10.0, abs=1e-6)
    assert m.rmse_deg == pytest.approx(10.0, abs=1e-6)


def test_no_overlap():
    cfg = SimConfig(seed=0, duration_s=300, straight=True, **QUIET)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    ft = FusedTrack("1", frame, (SyntheticPoint(10**9, 0, 0), SyntheticPoint(10**9 + 5, 1, 1)))
    with pytest.raises(NoOverlap):
        evaluate_bearing(truth, ft)


def test_truth_bearing_is_frame_independent():
    cfg = SimConfig(seed=6, duration_s=1800)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    diffs = [angular_abs_diff(a, c) for a, c in zip(truth.bearings_in(frame), truth.bearing)]
    # grid north in a tangent frame ~ 50 km away tilts only by the meridian convergence
    assert max(diffs) < 1.0


def test_noise_monotone_over_seeds():
    """Median fused bearing error, averaged over 20 seeds, never drops as I-GPS noise grows."""
    levels = [0.0, 3.0, 10.0, 30.0]
    means = []
    for noise in levels:
        errs = []
        for seed in range(20):
            cfg = SimConfig(seed=seed, duration_s=1200, igps_noise_m=noise)
            truth, b = generate(cfg)
            frame = make_frame(b.points)
            errs.append(evaluate_bearing(truth, fuse_track(b, estimate_offset(b, frame), frame=frame)).median_abs_err_deg)
        means.append(float(np.mean(errs)))
    assert means == sorted(means)


def test_fused_beats_raw_igps_on_one_flight():
    cfg = SimConfig(seed=21, duration_s=1800)
    truth, b = generate(cfg)
    frame = make_frame(b.points)
    fused = fuse_track(b, estimate_offset(b, frame), frame=frame)
    assert evaluate_bearing(truth, fused).median_abs_err_deg < evaluate_track_bearing(truth, b.i_track, frame).median_abs_err_deg
