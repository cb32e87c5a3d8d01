"""WGS-84 geodetic <-> flight-local East-North-Up conversions and bearing arithmetic.

Every flight gets its own tangent-plane frame anchored at the centroid of its
points. Conversions go through ECEF, so a frame change is an exact rigid
motion: straight lines stay straight and weighted centroids commute with it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateBearing, EmptyTrack, FrameRangeExceeded

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

MAX_FRAME_RANGE_M = 500_000.0
MIN_BEARING_DISTANCE_M = 1e-6


class Source(str, enum.Enum):
    OGPS = "ogps"
    IGPS = "igps"
    SYNTHETIC = "synthetic"

    @classmethod
    def parse(cls, text: str) -> "Source":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown source {text!r}")


@dataclass(frozen=True)
class GeoPoint:
    """One geotag. ``timestamp`` is POSIX seconds (UTC); ``alt`` is None when blank."""

    flight_id: str
    source: Source
    timestamp: int
    lat: float
    lon: float
    alt: float | None = None

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")

    @property
    def height(self) -> float:
        return 0.0 if self.alt is None else self.alt


@dataclass(frozen=True)
class LocalPoint:
    x: float
    y: float
    z: float
    timestamp: int
    source: Source


@dataclass(frozen=True)
class LocalFrame:
    origin_lat: float
    origin_lon: float
    origin_alt: float = 0.0

    @cached_property
    def rotation(self) -> np.ndarray:
        """ECEF -> ENU rotation; rows are the east, north and up unit vectors."""
        return enu_rotation(self.origin_lat, self.origin_lon)

    @cached_property
    def origin_ecef(self) -> np.ndarray:
        return np.array(geodetic_to_ecef(self.origin_lat, self.origin_lon, self.origin_alt))


def enu_rotation(lat: float, lon: float) -> np.ndarray:
    phi, lam = math.radians(lat), math.radians(lon)
    sp, cp = math.sin(phi), math.cos(phi)
    sl, cl = math.sin(lam), math.cos(lam)
    return np.array(
        [
            [-sl, cl, 0.0],
            [-sp * cl, -sp * sl, cp],
            [cp * cl, cp * sl, sp],
        ]
    )


def geodetic_to_ecef(lat, lon, alt):
    phi = np.radians(lat)
    lam = np.radians(lon)
    sp = np.sin(phi)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sp * sp)
    x = (n + alt) * np.cos(phi) * np.cos(lam)
    y = (n + alt) * np.cos(phi) * np.sin(lam)
    z = (n * (1.0 - WGS84_E2) + alt) * sp
    return x, y, z


def ecef_to_geodetic(x, y, z):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    p = np.hypot(x, y)
    lon = np.arctan2(y, x)
    phi = np.arctan2(z, p * (1.0 - WGS84_E2))
    # fixed-point iteration; converges to machine precision for near-surface points
    for _ in range(8):
        sp = np.sin(phi)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sp * sp)
        phi = np.arctan2(z + WGS84_E2 * n * sp, p)
    sp, cp = np.sin(phi), np.cos(phi)
    h = p * cp + z * sp - WGS84_A * np.sqrt(1.0 - WGS84_E2 * sp * sp)
    return np.degrees(phi), np.degrees(lon), h


def to_local_arrays(frame: LocalFrame, lat, lon, alt):
    """Vectorised :func:`to_local`. Returns ``(x, y, z)`` arrays in meters."""
    ecef = np.stack(geodetic_to_ecef(np.asarray(lat, float), np.asarray(lon, float), np.asarray(alt, float)))
    d = ecef - frame.origin_ecef.reshape((3,) + (1,) * (ecef.ndim - 1))
    enu = np.tensordot(frame.rotation, d, axes=1)
    horiz = np.hypot(enu[0], enu[1])
    if np.any(horiz > MAX_FRAME_RANGE_M):
        raise FrameRangeExceeded(
            f"point {float(np.max(horiz)) / 1000:.1f} km from frame origin "
            f"(limit {MAX_FRAME_RANGE_M / 1000:.0f} km)"
        )
    return enu[0], enu[1], enu[2]


def from_local_arrays(frame: LocalFrame, x, y, z):
    """Vectorised :func:`from_local`. Returns ``(lat, lon, alt)`` arrays."""
    enu = np.stack([np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)])
    if np.any(np.abs(enu[0]) > MAX_FRAME_RANGE_M) or np.any(np.abs(enu[1]) > MAX_FRAME_RANGE_M):
        raise FrameRangeExceeded("local coordinate beyond 500 km of frame origin")
    ecef = np.tensordot(frame.rotation.T, enu, axes=1)
    ecef = ecef + frame.origin_ecef.reshape((3,) + (1,) * (ecef.ndim - 1))
    return ecef_to_geodetic(ecef[0], ecef[1], ecef[2])


def make_frame(points: Sequence[GeoPoint]) -> LocalFrame:
    if not points:
        raise EmptyTrack("cannot build a local frame from zero points")
    n = len(points)
    return LocalFrame(
        sum(p.lat for p in points) / n,
        sum(p.lon for p in points) / n,
        sum(p.height for p in points) / n,
    )


def to_local(p: GeoPoint, f: LocalFrame) -> LocalPoint:
    x, y, z = to_local_arrays(f, p.lat, p.lon, p.height)
    return LocalPoint(float(x), float(y), float(z), p.timestamp, p.source)


def from_local(p: LocalPoint, f: LocalFrame, flight_id: str = "") -> GeoPoint:
    lat, lon, alt = from_local_arrays(f, p.x, p.y, p.z)
    return GeoPoint(flight_id, p.source, p.timestamp, float(lat), float(lon), float(alt))


def bearing_xy(dx: float, dy: float) -> float:
    if math.hypot(dx, dy) <= MIN_BEARING_DISTANCE_M:
        raise DegenerateBearing("coincident points have no bearing")
    deg = math.degrees(math.atan2(dx, dy)) % 360.0
    # -tiny % 360 rounds to 360.0
    return 0.0 if deg >= 360.0 else deg


def bearing(a: LocalPoint, b: LocalPoint) -> float:
    """Heading of a->b in degrees clockwise from the frame's north, in [0, 360)."""
    return bearing_xy(b.x - a.x, b.y - a.y)


def angular_abs_diff(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def forward_bearings(xs: Sequence[float], ys: Sequence[float]) -> list[tuple[float, bool]]:
    """Bearing of each point toward its successor, as ``(bearing, carried)`` pairs.

    The last point and any point coincident with its successor take the most
    recent valid bearing and are flagged ``carried``. Leading degenerate points
    borrow the first valid bearing.
    """
    n = len(xs)
    if n < 2:
        raise DegenerateBearing("need at least two points for a bearing")
    raw: list[float | None] = []
    for k in range(n - 1):
        try:
            raw.append(bearing_xy(xs[k + 1] - xs[k], ys[k + 1] - ys[k]))
        except DegenerateBearing:
            raw.append(None)
    raw.append(None)
    first = next((b for b in raw if b is not None), None)
    if first is None:
        raise DegenerateBearing("all points coincide")
    out = []
    last = first
    for b in raw:
        if b is None:
            out.append((last, True))
        else:
            last = b
            out.append((b, False))
    return out


def direction_bearing(ecef_dirs: Iterable, frame: LocalFrame) -> np.ndarray:
    """Bearings in ``frame`` of ECEF direction vectors (shape ``(n, 3)``)."""
    d = np.asarray(ecef_dirs, dtype=float).reshape(-1, 3)
    enu = d @ frame.rotation.T
    deg = np.degrees(np.arctan2(enu[:, 0], enu[:, 1])) % 360.0
    return np.where(deg >= 360.0, 0.0, deg)
