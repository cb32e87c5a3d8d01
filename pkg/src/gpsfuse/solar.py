"""Sun position and camera-relative orientation features.

Sun position follows the NOAA solar calculator (Meeus, *Astronomical
Algorithms*, low-precision solar coordinates): about 0.01 degrees in the
sun's apparent longitude, no atmospheric refraction. Accepted dates are
1950-01-01 through 2100-12-31 UTC.
"""

from __future__ import annotations

import calendar
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InsufficientData, UnknownCamera, UnsupportedDate
from .fuse import FusedTrack
from .geodesy import angular_abs_diff, forward_bearings, from_local_arrays

VALID_FROM = calendar.timegm((1950, 1, 1, 0, 0, 0))
VALID_UNTIL = calendar.timegm((2101, 1, 1, 0, 0, 0))


@dataclass(frozen=True)
class SunPosition:
    azimuth: float  # degrees clockwise from true north, [0, 360)
    elevation: float  # degrees above the horizon


def sun_position(t: float, lat: float, lon: float) -> SunPosition:
    """Topocentric solar azimuth and elevation at POSIX time ``t``."""
    if not VALID_FROM <= t < VALID_UNTIL:
        raise UnsupportedDate(f"timestamp {t} outside 1950-2100")
    jd = t / 86400.0 + 2440587.5
    jc = (jd - 2451545.0) / 36525.0

    mean_long = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0
    mean_anom = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    m = math.radians(mean_anom)
    centre = (
        math.sin(m) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + math.sin(2 * m) * (0.019993 - 0.000101 * jc)
        + math.sin(3 * m) * 0.000289
    )
    omega = math.radians(125.04 - 1934.136 * jc)
    app_long = math.radians(mean_long + centre - 0.00569 - 0.00478 * math.sin(omega))
    mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0
    obliq = math.radians(mean_obliq + 0.00256 * math.cos(omega))
    decl = math.asin(math.sin(obliq) * math.sin(app_long))

    var_y = math.tan(obliq / 2.0) ** 2
    l0 = math.radians(mean_long)
    eq_time = 4.0 * math.degrees(
        var_y * math.sin(2 * l0)
        - 2 * ecc * math.sin(m)
        + 4 * ecc * var_y * math.sin(m) * math.cos(2 * l0)
        - 0.5 * var_y * var_y * math.sin(4 * l0)
        - 1.25 * ecc * ecc * math.sin(2 * m)
    )  # minutes

    minutes_utc = (t % 86400.0) / 60.0
    true_solar = (minutes_utc + eq_time + 4.0 * lon) % 1440.0
    hour_angle = math.radians(true_solar / 4.0 - 180.0)

    phi = math.radians(lat)
    cos_zen = math.sin(phi) * math.sin(decl) + math.cos(phi) * math.cos(decl) * math.cos(hour_angle)
    elevation = 90.0 - math.degrees(math.acos(max(-1.0, min(1.0, cos_zen))))
    az = math.degrees(
        math.atan2(
            math.sin(hour_angle),
            math.cos(hour_angle) * math.sin(phi) - math.tan(decl) * math.cos(phi),
        )
    )
    az = (az + 180.0) % 360.0
    return SunPosition(0.0 if az >= 360.0 else az, elevation)


@dataclass(frozen=True)
class CameraRig:
    """Camera azimuth offsets, degrees clockwise from the aircraft bearing."""

    offsets: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "offsets", {k: float(v) % 360.0 for k, v in self.offsets.items()})

    @property
    def names(self) -> list[str]:
        return list(self.offsets)

    @classmethod
    def parse(cls, text: str) -> "CameraRig":
        """Read ``name=offset`` lines; blank lines and ``#`` comments ignored."""
        offsets = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = line.partition("=")
            name = name.strip()
            if not sep or not name or not name.replace("_", "").replace("-", "").isalnum():
                raise ValueError(f"rig line {n}: expected name=offset")
            try:
                offsets[name] = float(value)
            except ValueError:
                raise ValueError(f"rig line {n}: offset {value.strip()!r} is not a number") from None
        return cls(offsets)


def view_azimuth(bearing: float, rig: CameraRig, camera: str) -> float:
    try:
        offset = rig.offsets[camera]
    except KeyError:
        raise UnknownCamera(f"no camera named {camera!r} in rig") from None
    v = (bearing + offset) % 360.0
    return 0.0 if v >= 360.0 else v


def azimuth_absolute_diff(view_az: float, sun_az: float) -> float:
    return angular_abs_diff(view_az, sun_az)


@dataclass(frozen=True)
class FeatureRow:
    timestamp: int
    bearing: float
    carried: bool
    sun_azimuth: float
    sun_elevation: float
    az_abs_diff: dict[str, float]


def feature_rows(fused: FusedTrack, rig: CameraRig) -> list[FeatureRow]:
    if len(fused.points) < 2:
        raise InsufficientData("feature rows need at least two fused points")
    x, y = fused.xy()
    z = np.array([p.z for p in fused.points])
    lat, lon, _ = from_local_arrays(fused.frame, x, y, z)
    rows = []
    for p, (b, carried), la, lo in zip(fused.points, forward_bearings(x, y), lat, lon):
        sun = sun_position(p.timestamp, float(la), float(lo))
        diffs = {name: azimuth_absolute_diff(view_azimuth(b, rig, name), sun.azimuth) for name in rig.names}
        rows.append(FeatureRow(p.timestamp, b, carried, sun.azimuth, sun.elevation, diffs))
    return rows
