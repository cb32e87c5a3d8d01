import numpy as np
import pytest

from gpsfuse import formats
from gpsfuse.align import OffsetEstimate
from gpsfuse.errors import EmptyInput, FormatError
from gpsfuse.sim import SimConfig, generate


def test_fmt_nine_significant_digits():
    assert formats.fmt(1 / 3) == "0.333333333"
    assert formats.fmt(-0.0) == "0"
    assert formats.fmt(123456789012.0) == "1.23456789e+11"


def test_offsets_round_trip_sorted():
    text = formats.write_offsets([OffsetEstimate("10", -5, 0.746), OffsetEstimate("2", 17, 12.5)])
    assert text == "flight_id,min_distance_m,offset_seconds\n2,12.5,17\n10,0.746,-5\n"
    back = formats.read_offsets(text)
    assert back["10"] == OffsetEstimate("10", -5, 0.746)


def test_truth_round_trip_is_exact():
    truth, _ = generate(SimConfig(seed=1, duration_s=120))
    back = formats.read_truth(formats.write_truth([truth]))["1"]
    for name in ("times", "lat", "lon", "alt", "bearing", "ecef_dir"):
        assert np.array_equal(getattr(back, name), getattr(truth, name)), name


def test_fused_read_write():
    text = "flight_id,timestamp,lat,lon,contributors\n1,2018-09-15T12:00:00Z,45.0,-61.5,3\n"
    rows = formats.read_fused(text)
    assert rows[0].contributors == 3
    assert formats.write_fused(rows) == "flight_id,timestamp,lat,lon,contributors\n1,2018-09-15T12:00:00Z,45,-61.5,3\n"


@pytest.mark.parametrize(
    "text, exc",
    [
        ("", EmptyInput),
        ("a,b\n", FormatError),
        ("flight_id,timestamp,lat,lon,contributors\n1,2018\n", FormatError),
        ("flight_id,timestamp,lat,lon,contributors\n1,yesterday,45,-61,3\n", FormatError),
        ("flight_id,timestamp,lat,lon,contributors\n1,2018-09-15T12:00:00Z,4\x005,-61,3\n", FormatError),
    ],
)
def test_fused_errors(text, exc):
    with pytest.raises(exc):
        formats.read_fused(text)


def test_features_header():
    assert formats.features_header(["right"]) == (
        "flight_id", "timestamp", "bearing", "sun_azimuth", "sun_elevation", "right_az_abs_diff", "carried"
    )
