"""Command line front-end.

Exit status: 0 on success, 1 on data errors (messages on stderr), 2 on usage
errors. Set ``GPSFUSE_LOG_LEVEL`` (e.g. ``INFO``) for progress logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import formats
from .align import DEFAULT_WINDOW_S, OffsetEstimate, apply_offset, estimate_offset
from .errors import GpsFuseError
from .fuse import FusedTrack, Kind, SyntheticPoint, WeightParams, fuse_track
from .geodesy import GeoPoint, LocalFrame, Source, make_frame, to_local_arrays
from .ingest import FlightBundle, Track, bundle, flight_sort_key, parse_timestamp, parse_track_file, write_track_csv
from .quality import GAP_THRESHOLD_S, NEIGHBOR_HALF_WINDOW_S, LandSeaMask, filter_points, rejection_summary
from .sim import TURN_RATE_AVERAGE, TURN_RATE_FASTEST, SimConfig, bearing_errors, generate, summarize_errors
from .solar import CameraRig, feature_rows

log = logging.getLogger("gpsfuse")


# ---------------------------------------------------------------- input helpers


def _read_tracks(args) -> list[Track]:
    sources = [(p, None) for p in getattr(args, "tracks", []) or []]
    sources += [(p, Source.OGPS) for p in getattr(args, "ogps", []) or []]
    sources += [(p, Source.IGPS) for p in getattr(args, "igps", []) or []]
    if not sources:
        raise GpsFuseError("no track files given")
    tracks = []
    for path, declared in sources:
        parsed, rejected = parse_track_file(Path(path).read_bytes(), declared)
        for err in rejected:
            print(err, file=sys.stderr)
        tracks.extend(parsed)
    return tracks


def _bundles(tracks: list[Track]) -> list[FlightBundle]:
    bundles, excluded = bundle(tracks)
    for ex in excluded:
        print(f"flight={ex.flight_id} excluded reason={ex.reason}", file=sys.stderr)
    return bundles


def _weights(args) -> WeightParams:
    return WeightParams(args.w_ogps, args.w_igps, args.w_synth, args.w_temporal, args.fuse_window, args.spacing)


def _offsets(args, bundles: list[FlightBundle]) -> dict[str, tuple[LocalFrame, OffsetEstimate]]:
    given = formats.read_offsets(Path(args.offsets).read_text()) if getattr(args, "offsets", None) else {}
    out = {}
    for b in bundles:
        frame = make_frame(b.points)
        if b.flight_id in given:
            est = given[b.flight_id]
        else:
            est = estimate_offset(b, frame, args.offset_window, args.robust_k)
        log.info("flight %s offset %+d s (%.3f m)", b.flight_id, est.offset_seconds, est.min_distance_m)
        out[b.flight_id] = (frame, est)
    return out


def _geotag_times(b: FlightBundle, est: OffsetEstimate) -> list[int]:
    return sorted(b.o_track.times + apply_offset(b.i_track, est).times)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _manifest(args) -> str:
    # destinations do not affect results; leaving them out keeps manifests comparable
    skip = {"func", "manifest", "out_dir", "output", "report"}
    lines = [f"gpsfuse_version={__version__}"]
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if isinstance(value, list):
            value = ";".join(str(v) for v in value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _fused_track_from_rows(fid: str, rows: list[formats.FusedRow]) -> FusedTrack:
    pts = [r.as_geopoint() for r in rows]
    frame = make_frame(pts)
    x, y, z = to_local_arrays(frame, [p.lat for p in pts], [p.lon for p in pts], [0.0] * len(pts))
    synth = tuple(
        SyntheticPoint(r.timestamp, float(a), float(b), float(c), Kind.FUSED, r.contributors)
        for r, a, b, c in zip(rows, x, y, z)
    )
    return FusedTrack(fid, frame, synth)


def _group(rows, key=lambda r: r.flight_id):
    out: dict[str, list] = {}
    for r in rows:
        out.setdefault(key(r), []).append(r)
    return {k: sorted(v, key=lambda r: r.timestamp) for k, v in sorted(out.items(), key=lambda kv: flight_sort_key(kv[0]))}


def _rig(args) -> CameraRig:
    return CameraRig.parse(Path(args.rig).read_text()) if args.rig else CameraRig({})


def _mask(args) -> LandSeaMask | None:
    return LandSeaMask.from_bytes(Path(args.mask).read_bytes()) if args.mask else None


# ---------------------------------------------------------------- subcommands


def cmd_offsets(args) -> None:
    bundles = _bundles(_read_tracks(args))
    ests = [est for _, est in _offsets(args, bundles).values()]
    _emit(formats.write_offsets(ests), args.output)


def cmd_fuse(args) -> None:
    bundles = _bundles(_read_tracks(args))
    params = _weights(args)
    rows = []
    for b in bundles:
        frame, est = _offsets(args, [b])[b.flight_id]
        rows.extend(formats.fused_rows(fuse_track(b, est, params, frame)))
    _emit(formats.write_fused(rows), args.output)


def cmd_filter(args) -> None:
    text = Path(args.points).read_text()
    header = formats.sniff_header(text)
    if header[: len(formats.FUSED_HEADER)] == formats.FUSED_HEADER:
        rows = formats.read_fused(text)
        points = [r.as_geopoint() for r in rows]
        writer = formats.write_fused
    else:
        tracks, rejected = parse_track_file(text)
        for err in rejected:
            print(err, file=sys.stderr)
        rows = [p for t in tracks for p in t.points]
        points = rows
        writer = lambda kept: write_track_csv(_regroup(kept))  # noqa: E731

    geotags: dict[str, list[int]] = {}
    if args.tracks or args.ogps or args.igps:
        tracks = _read_tracks(args)
        bundles, _ = bundle(tracks)
        for b in bundles:
            geotags[b.flight_id] = _geotag_times(b, _offsets(args, [b])[b.flight_id][1])
        # single-source flights cannot be aligned; their raw times still bracket
        unaligned: dict[str, list[int]] = {}
        for t in tracks:
            if t.flight_id not in geotags:
                unaligned.setdefault(t.flight_id, []).extend(t.times)
        geotags.update((fid, sorted(ts)) for fid, ts in unaligned.items())
    else:
        for p in points:
            geotags.setdefault(p.flight_id, []).append(p.timestamp)

    mask = _mask(args)
    reports = []
    by_flight: dict[str, list[int]] = {}
    for k, pt in enumerate(points):
        by_flight.setdefault(pt.flight_id, []).append(k)
    keep: set[int] = set()
    for fid in sorted(by_flight, key=flight_sort_key):
        idx = sorted(by_flight[fid], key=lambda k: points[k].timestamp)
        # a flight without geotags has nothing to bracket it, so every point goes
        kept, report = filter_points(fid, [points[k] for k in idx], sorted(geotags.get(fid, [])) or [np.inf], mask, args.gap_threshold)
        kept_ids = {id(pt) for pt in kept}
        keep.update(k for k in idx if id(points[k]) in kept_ids)
        reports.append(report)
    kept_rows = [rows[k] for k in sorted(keep)]
    _emit(writer(kept_rows), args.output)
    if args.report:
        Path(args.report).write_text(formats.write_quality(reports))


def _regroup(points: list[GeoPoint]) -> list[Track]:
    groups: dict[tuple[str, Source], list[GeoPoint]] = {}
    for p in points:
        groups.setdefault((p.flight_id, p.source), []).append(p)
    return [Track(f, s, tuple(sorted(v, key=lambda p: p.timestamp))) for (f, s), v in groups.items()]


def cmd_features(args) -> None:
    rig = _rig(args)
    rows = formats.read_fused(Path(args.fused).read_text())
    out = []
    for fid, fr in _group(rows).items():
        out.append((fid, feature_rows(_fused_track_from_rows(fid, fr), rig)))
    _emit(formats.write_features(out, rig.names), args.output)


def cmd_reject_stats(args) -> None:
    bundles = _bundles(_read_tracks(args))
    offsets = _offsets(args, bundles)
    queries_by_flight: dict[str, list[int]] = {}
    if args.queries:
        for fid, fr in _group(formats.read_fused(Path(args.queries).read_text())).items():
            queries_by_flight[fid] = [r.timestamp for r in fr]
    o_all, i_all, q_all = [], [], []
    # flights are laid end to end on a shared time axis so windows never straddle two flights
    shift = 0
    for b in bundles:
        _, est = offsets[b.flight_id]
        o = b.o_track.times
        i = apply_offset(b.i_track, est).times
        q = queries_by_flight.get(b.flight_id)
        if q is None:
            q = list(range(o[0], o[-1] + 1, int(args.spacing)))
        lo = min(o[0], i[0], q[0] if q else o[0])
        hi = max(o[-1], i[-1], q[-1] if q else o[-1])
        pad = 10 * (args.half_window + args.gap_threshold)
        base = shift - lo
        o_all += [t + base for t in o]
        i_all += [t + base for t in i]
        q_all += [t + base for t in q]
        shift = hi + base + pad
    _emit(formats.write_reject_stats(rejection_summary(q_all, o_all, i_all, args.gap_threshold, args.half_window)), args.output)


def _sim_config(args) -> SimConfig:
    values: dict[str, str] = {}
    if args.config:
        for n, line in enumerate(Path(args.config).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"config line {n}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    for name in SIM_CONVERTERS:
        v = getattr(args, "sim_" + name, None)
        if v is not None:
            values[name] = v
    if args.turn_preset:
        values["turn_rate_deg_s"] = repr({"average": TURN_RATE_AVERAGE, "fastest": TURN_RATE_FASTEST}[args.turn_preset])
    unknown = set(values) - set(SIM_CONVERTERS)
    if unknown:
        raise ValueError(f"unknown simulation setting(s): {', '.join(sorted(unknown))}")
    return SimConfig(**{k: SIM_CONVERTERS[k](v) for k, v in values.items()})


def _range(text: str) -> tuple[float, float]:
    lo, hi = text.split(",")
    return float(lo), float(hi)


def _schedule(text: str) -> tuple[tuple[float, float], ...]:
    return tuple(tuple(float(v) for v in item.split(":")) for item in text.split(",") if item.strip())


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> float | None:
    return None if text.lower() in ("", "none") else float(text)


SIM_CONVERTERS = {
    "seed": int,
    "flight_id": str,
    "start_time": parse_timestamp,
    "duration_s": int,
    "speed_mps": float,
    "turn_rate_deg_s": float,
    "heading_deg": _opt_float,
    "leg_s": _range,
    "turn_deg": _range,
    "schedule": _schedule,
    "straight": _bool,
    "origin_lat": float,
    "origin_lon": float,
    "alt_m": float,
    "ogps_rate_s": int,
    "ogps_noise_m": float,
    "ogps_dropouts_per_hour": float,
    "ogps_dropout_s": _range,
    "igps_rate_s": float,
    "igps_jitter_s": float,
    "igps_burst_s": _opt_float,
    "igps_period_s": _opt_float,
    "igps_noise_m": float,
    "igps_noise_df": float,
    "bias_per_hour": float,
    "bias_m": float,
    "bias_s": _range,
    "clock_offset_s": int,
}
assert set(SIM_CONVERTERS) == {f.name for f in fields(SimConfig)}


def cmd_simulate(args) -> None:
    cfg = _sim_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truths, o_tracks, i_tracks = [], [], []
    for k in range(args.flights):
        c = cfg if args.flights == 1 else replace(cfg, seed=cfg.seed + k, flight_id=str(k + 1))
        truth, b = generate(c)
        truths.append(truth)
        o_tracks.append(b.o_track)
        i_tracks.append(b.i_track)
    (out / "ogps.csv").write_text(write_track_csv(o_tracks))
    (out / "igps.csv").write_text(write_track_csv(i_tracks))
    (out / "truth.csv").write_text(formats.write_truth(truths))


def cmd_evaluate(args) -> None:
    truths = formats.read_truth(Path(args.truth).read_text())
    results = []
    for fid, rows in _group(formats.read_fused(Path(args.fused).read_text())).items():
        if fid not in truths:
            print(f"flight={fid} skipped reason=no truth", file=sys.stderr)
            continue
        ft = _fused_track_from_rows(fid, rows)
        x, y = ft.xy()
        results.append((fid, summarize_errors(bearing_errors(truths[fid], ft.frame, ft.times, x, y))))
    _emit(formats.write_metrics(results), args.output)


def cmd_pipeline(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracks = _read_tracks(args)
    bundles, excluded = bundle(tracks)
    for ex in excluded:
        print(f"flight={ex.flight_id} excluded reason={ex.reason}", file=sys.stderr)
    offsets = _offsets(args, bundles)
    params = _weights(args)
    mask = _mask(args)
    rig = _rig(args)

    fused_all, kept_all, reports, feats = [], [], [], []
    for b in bundles:
        frame, est = offsets[b.flight_id]
        ft = fuse_track(b, est, params, frame)
        rows = formats.fused_rows(ft)
        fused_all.extend(rows)
        pts = [r.as_geopoint() for r in rows]
        kept, report = filter_points(b.flight_id, pts, _geotag_times(b, est), mask, args.gap_threshold)
        reports.append(report)
        keep_t = {p.timestamp for p in kept}
        kept_all.extend(r for r in rows if r.timestamp in keep_t)
        if len(ft.points) >= 2:
            feats.append((b.flight_id, [f for f in feature_rows(ft, rig) if f.timestamp in keep_t]))

    (out / "offsets.csv").write_text(formats.write_offsets([e for _, e in offsets.values()]))
    (out / "fused.csv").write_text(formats.write_fused(fused_all))
    (out / "retained.csv").write_text(formats.write_fused(kept_all))
    (out / "quality.csv").write_text(formats.write_quality(reports))
    (out / "features.csv").write_text(formats.write_features(feats, rig.names))
    (out / "excluded.csv").write_text(
        "flight_id,reason\n" + "".join(f"{e.flight_id},{e.reason}\n" for e in excluded)
    )
    (out / "manifest.txt").write_text(_manifest(args))


# ---------------------------------------------------------------- parser


def _add_track_inputs(p, required=True):
    p.add_argument("tracks", nargs="*", help="canonical track CSV(s); sources taken from each row")
    p.add_argument("--ogps", action="append", default=[], metavar="CSV", help="track CSV declared O-GPS")
    p.add_argument("--igps", action="append", default=[], metavar="CSV", help="track CSV declared I-GPS")


def _add_offset_opts(p):
    p.add_argument("--offsets", metavar="CSV", help="use these offsets instead of estimating them")
    p.add_argument("--offset-window", type=int, default=DEFAULT_WINDOW_S, help="offset search half-window, s (60)")
    p.add_argument("--robust-k", type=int, default=None, help="take the median offset of the k closest pairs")


def _add_weight_opts(p):
    d = WeightParams()
    p.add_argument("--w-ogps", type=float, default=d.w_ogps)
    p.add_argument("--w-igps", type=float, default=d.w_igps)
    p.add_argument("--w-synth", type=float, default=d.w_synth)
    p.add_argument("--w-temporal", type=float, default=d.w_temporal)
    p.add_argument("--fuse-window", type=float, default=d.window_s, help="neighbor half-window, s (40)")
    p.add_argument("--spacing", type=int, default=d.seed_spacing_s, help="seed spacing, s (5)")


def _add_common(p):
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.add_argument("--manifest", help="also write a run manifest here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpsfuse", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"gpsfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offsets", help="estimate per-flight I-GPS clock offsets")
    _add_track_inputs(p)
    _add_offset_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_offsets)

    p = sub.add_parser("fuse", help="build fused tracks")
    _add_track_inputs(p)
    _add_offset_opts(p)
    _add_weight_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("filter", help="land and gap filtering of points of interest")
    p.add_argument("points", help="fused CSV or track CSV of points to filter")
    p.add_argument("--geotags", dest="tracks", action="append", default=[], metavar="CSV",
                   help="track CSV(s) supplying geotag times (default: the points themselves)")
    p.add_argument("--ogps", action="append", default=[], metavar="CSV")
    p.add_argument("--igps", action="append", default=[], metavar="CSV")
    p.add_argument("--mask", help="land-sea mask file")
    p.add_argument("--gap-threshold", type=float, default=GAP_THRESHOLD_S)
    p.add_argument("--report", help="write the per-flight quality report CSV here")
    _add_offset_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("features", help="bearing and sun-relative features from a fused CSV")
    p.add_argument("fused")
    p.add_argument("--rig", help="camera rig file of name=offset lines")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("reject-stats", help="neighbor-count summaries of gap-accepted vs rejected times")
    _add_track_inputs(p)
    p.add_argument("--queries", help="fused CSV whose timestamps are the query times (default: seed grid)")
    p.add_argument("--gap-threshold", type=float, default=GAP_THRESHOLD_S)
    p.add_argument("--half-window", type=float, default=NEIGHBOR_HALF_WINDOW_S)
    p.add_argument("--spacing", type=int, default=WeightParams().seed_spacing_s)
    _add_offset_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_reject_stats)

    p = sub.add_parser("simulate", help="generate simulated tracks and truth")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--flights", type=int, default=1)
    p.add_argument("--config", help="file of key=value simulation settings")
    p.add_argument("--turn-preset", choices=("average", "fastest"),
                   help="45 degree turn in 43.75 s (average) or 20.75 s (fastest)")
    for name in SIM_CONVERTERS:
        flag = "--" + name.replace("_", "-")
        if name == "straight":
            p.add_argument(flag, dest="sim_straight", action="store_const", const="true")
        else:
            p.add_argument(flag, dest="sim_" + name, metavar="VALUE")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="bearing error of a fused CSV against simulated truth")
    p.add_argument("truth")
    p.add_argument("fused")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="offsets, fuse, filter and features in one run")
    _add_track_inputs(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mask")
    p.add_argument("--rig")
    p.add_argument("--gap-threshold", type=float, default=GAP_THRESHOLD_S)
    _add_offset_opts(p)
    _add_weight_opts(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("GPSFUSE_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        args.func(args)
        if getattr(args, "manifest", None):
            Path(args.manifest).write_text(_manifest(args))
    except (GpsFuseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
