import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from referee.errors import DescriptorFileError, DescriptorMismatchError, SessionError
from referee.scan_io import (DescriptorRecord, RadarScan, load_descriptors, load_session,
                             read_descriptor_file, read_poses_csv, read_scan_image,
                             save_descriptors, save_session, write_scan_image)
from referee.se2 import Pose2


def make_scans(n, shape=(8, 12), seed=0):
    rng = np.random.default_rng(seed)
    return [RadarScan(rng.integers(0, 256, shape) / 255.0, 0.5, timestamp=0.1 * k, scan_id=k)
            for k in range(n)]


def poses(n):
    return [Pose2(k, 0.5 * k, 0.1 * k) for k in range(n)]


def test_load_session_roundtrip(tmp_path):
    scans = make_scans(3)
    save_session(tmp_path, scans[::-1], poses(3)[::-1], poses(3)[::-1])
    s = load_session(tmp_path)
    assert s.scan_ids == [0, 1, 2]
    assert s.range_resolution == 0.5
    for a, b in zip(s.scans, scans):
        assert np.array_equal(a.intensities, b.intensities)
    assert s.odom_poses is not None and len(s.odom_poses) == 3


def test_normalisation_is_exact(tmp_path):
    img = np.arange(256, dtype=np.uint8).reshape(16, 16)
    write_scan_image(tmp_path / "scan_0.png", img / 255.0)
    raw = read_scan_image(tmp_path / "scan_0.png")
    assert np.array_equal(raw, img)
    assert np.array_equal(raw / 255.0, np.arange(256).reshape(16, 16) / 255.0)


def test_dimension_mismatch(tmp_path):
    save_session(tmp_path, make_scans(1, (400, 12)), poses(1))
    other = make_scans(2, (402, 12))[1]
    write_scan_image(tmp_path / "scan_1.png", other.intensities)
    (tmp_path / "poses.csv").write_text("scan_id,timestamp,x,y,yaw\n0,0,0,0,0\n1,1,0,0,0\n")
    with pytest.raises(SessionError, match="dimension mismatch"):
        load_session(tmp_path)


def test_missing_pose_names_id(tmp_path):
    save_session(tmp_path, make_scans(3), poses(3))
    (tmp_path / "poses.csv").write_text("scan_id,timestamp,x,y,yaw\n0,0,0,0,0\n1,1,0,0,0\n")
    with pytest.raises(SessionError, match="scan_id 2"):
        load_session(tmp_path)


def test_empty_session(tmp_path):
    (tmp_path / "poses.csv").write_text("scan_id,timestamp,x,y,yaw\n")
    with pytest.raises(SessionError, match="empty"):
        load_session(tmp_path, range_resolution=1.0)


def test_non_monotone_timestamps(tmp_path):
    save_session(tmp_path, make_scans(2), poses(2))
    (tmp_path / "poses.csv").write_text("scan_id,timestamp,x,y,yaw\n0,5,0,0,0\n1,1,0,0,0\n")
    with pytest.raises(SessionError, match="monotone"):
        load_session(tmp_path)


def test_missing_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_session(tmp_path / "nope")


def test_resolution_needed_without_sidecar(tmp_path):
    save_session(tmp_path, make_scans(1), poses(1))
    (tmp_path / "session.json").unlink()
    with pytest.raises(SessionError):
        load_session(tmp_path)
    assert load_session(tmp_path, range_resolution=2.0).range_resolution == 2.0


def test_partial_odometry_columns(tmp_path):
    p = tmp_path / "poses.csv"
    p.write_text("scan_id,timestamp,x,y,yaw,odom_x\n0,0,0,0,0,1\n")
    with pytest.raises(SessionError):
        read_poses_csv(p)


def test_colour_image_rejected(tmp_path):
    from PIL import Image
    Image.new("RGB", (8, 8)).save(tmp_path / "scan_0.png")
    with pytest.raises(SessionError):
        read_scan_image(tmp_path / "scan_0.png")


@pytest.mark.parametrize("img", [np.zeros((3, 8)), np.full((4, 4), 1.5), np.zeros(16)])
def test_radar_scan_validation(img):
    with pytest.raises(SessionError):
        RadarScan(img, 1.0)


def records(n, n_w=5, n_h=7, h=99, seed=0):
    rng = np.random.default_rng(seed)
    return [DescriptorRecord(k, rng.random(n_w), rng.random(n_h), h) for k in range(n)]


def test_descriptor_roundtrip(tmp_path):
    db = records(2)
    save_descriptors(db, tmp_path / "d.rfr")
    assert load_descriptors(tmp_path / "d.rfr") == db


def test_empty_descriptor_file(tmp_path):
    save_descriptors([], tmp_path / "d.rfr", n_w=42, n_h=400, config_hash=7)
    f = read_descriptor_file(tmp_path / "d.rfr")
    assert (f.n_w, f.n_h, f.config_hash, f.records) == (42, 400, 7, [])
    with pytest.raises(ValueError):
        save_descriptors([], tmp_path / "e.rfr")


def test_truncated_file(tmp_path):
    save_descriptors(records(3), tmp_path / "d.rfr")
    data = (tmp_path / "d.rfr").read_bytes()
    (tmp_path / "t.rfr").write_bytes(data[:-10])
    with pytest.raises(DescriptorFileError, match="corrupt"):
        load_descriptors(tmp_path / "t.rfr")
    (tmp_path / "h.rfr").write_bytes(data[:5])
    with pytest.raises(DescriptorFileError):
        load_descriptors(tmp_path / "h.rfr")


def test_bad_magic(tmp_path):
    save_descriptors(records(1), tmp_path / "d.rfr")
    data = bytearray((tmp_path / "d.rfr").read_bytes())
    data[:4] = b"XXXX"
    (tmp_path / "d.rfr").write_bytes(bytes(data))
    with pytest.raises(DescriptorFileError, match="magic"):
        load_descriptors(tmp_path / "d.rfr")


def test_payload_layout(tmp_path):
    rec = DescriptorRecord(3, np.arange(4, dtype=float), np.arange(2, dtype=float), 5)
    save_descriptors([rec], tmp_path / "d.rfr")
    data = (tmp_path / "d.rfr").read_bytes()
    header = struct.Struct("<4sHIIQQ")
    assert header.unpack_from(data) == (b"RFRE", 1, 4, 2, 5, 1)
    body = data[header.size:]
    assert struct.unpack("<Q4f2f", body) == (3, 0.0, 1.0, 2.0, 3.0, 0.0, 1.0)


def test_mixed_hash_refused(tmp_path):
    db = records(2)
    db[1] = DescriptorRecord(1, db[1].r_referee, db[1].a_referee, 1234)
    with pytest.raises(DescriptorMismatchError):
        save_descriptors(db, tmp_path / "d.rfr")


@given(st.lists(st.tuples(st.integers(0, 2 ** 63),
                          arrays(np.float32, 6, elements=st.floats(width=32, allow_nan=False)),
                          arrays(np.float32, 3, elements=st.floats(width=32, allow_nan=False))),
                max_size=8),
       st.integers(0, 2 ** 64 - 1))
def test_descriptor_roundtrip_property(tmp_path_factory, rows, h):
    path = tmp_path_factory.mktemp("rt") / "d.rfr"
    db = [DescriptorRecord(sid, r, a, h) for sid, r, a in rows]
    save_descriptors(db, path, n_w=6, n_h=3, config_hash=h)
    assert load_descriptors(path) == db
