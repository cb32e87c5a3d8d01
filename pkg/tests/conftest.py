import calendar

import pytest

from gpsfuse.geodesy import GeoPoint, Source
from gpsfuse.ingest import FlightBundle, Track

T0 = calendar.timegm((2018, 9, 15, 12, 0, 0))


def track(flight_id, source, rows):
    """rows of (t offset from T0, lat, lon)."""
    return Track(flight_id, source, tuple(GeoPoint(flight_id, source, T0 + t, la, lo) for t, la, lo in rows))


def make_bundle(o_rows, i_rows, flight_id="1"):
    return FlightBundle(flight_id, track(flight_id, Source.OGPS, o_rows), track(flight_id, Source.IGPS, i_rows))


@pytest.fixture
def t0():
    return T0


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
