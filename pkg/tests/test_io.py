import numpy as np
import pytest

from trhom import io
from trhom.detection import DetectionConfig, FringeCurve, TagStream, correlate_window, generate_timetags
from trhom.errors import IoFailure, TagFormatError


def test_ttag_roundtrip(tmp_path):
    s = generate_timetags(DetectionConfig(duration_s=0.01), np.random.default_rng(0))
    path = io.write_ttag(tmp_path / "a.ttag", s)
    raw = path.read_bytes()
    assert raw[:5] == b"TTAG\x01" and len(raw) == 5 + 9 * len(s)
    back = io.read_ttag(path, duration_s=0.01)
    assert np.array_equal(back.timestamps, s.timestamps) and np.array_equal(back.channels, s.channels)


def test_ttag_duration_defaults_to_last_tag(tmp_path):
    s = TagStream(np.array([0, 10**12]), np.array([0, 1]), 1.0)
    assert io.read_ttag(io.write_ttag(tmp_path / "b.ttag", s)).duration_s == 1.0


def test_empty_ttag(tmp_path):
    s = TagStream(np.zeros(0, np.int64), np.zeros(0, np.uint8), 0.0)
    assert len(io.read_ttag(io.write_ttag(tmp_path / "e.ttag", s))) == 0


@pytest.mark.parametrize("blob", [b"XXXX\x01", b"TTAG\x02", b"TTAG\x01" + b"\x00" * 5])
def test_bad_files(tmp_path, blob):
    p = tmp_path / "bad.ttag"
    p.write_bytes(blob)
    with pytest.raises(TagFormatError):
        io.read_ttag(p)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        io.read_ttag(tmp_path / "nope.ttag")


def test_fringe_csv(tmp_path):
    curve = FringeCurve(np.array([0.0, 0.5]), np.array([0.25, 0.1]), 0.0)
    header, rows = io.read_csv(io.write_fringe_csv(tmp_path / "f.csv", curve))
    assert header == ["theta_rad", "probability"]
    assert [[float(x) for x in r] for r in rows] == [[0.0, 0.25], [0.5, 0.1]]


def test_histogram_csv(tmp_path):
    s = TagStream(np.array([0, 250, 5000, 5050]), np.array([0, 1, 1, 0]), 1e-8)
    header, rows = io.read_csv(io.write_histogram_csv(tmp_path / "h.csv", correlate_window(s, 3.0)))
    assert header == ["delay_ps", "count"]
    assert sum(int(r[1]) for r in rows) == 2


def test_ensure_dir_failure(tmp_path):
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(IoFailure):
        io.ensure_dir(f / "sub")
