"""Two-source GPS track alignment, weighted fusion and bearing features."""

from .align import OffsetEstimate, apply_offset, estimate_offset
from .errors import GpsFuseError
from .fuse import FusedTrack, WeightParams, fuse_track
from .geodesy import GeoPoint, LocalFrame, LocalPoint, Source, make_frame
from .ingest import FlightBundle, Track, bundle, parse_track_file

__version__ = "0.1.0"

__all__ = [
    "FlightBundle",
    "FusedTrack",
    "GeoPoint",
    "GpsFuseError",
    "LocalFrame",
    "LocalPoint",
    "OffsetEstimate",
    "Source",
    "Track",
    "WeightParams",
    "apply_offset",
    "bundle",
    "estimate_offset",
    "fuse_track",
    "make_frame",
    "parse_track_file",
]
