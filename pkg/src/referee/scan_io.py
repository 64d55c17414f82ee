"""Session and descriptor file I/O.

A session directory holds one 8-bit grayscale image per scan
(``scan_<id>.png`` or ``scan_<id>.pgm``; rows are azimuths, columns are range
bins) and a ``poses.csv`` with header
``scan_id,timestamp,x,y,yaw[,odom_x,odom_y,odom_yaw]``. An optional
``session.json`` carries ``{"range_resolution": <m per bin>}``.

Descriptor files are little-endian: a 30-byte header
(magic ``RFRE``, u16 version, u32 N_w, u32 N_h, u64 config hash, u64 count)
followed by ``count`` records of (u64 scan id, N_w f32, N_h f32).
"""
import csv
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

from .errors import DescriptorFileError, DescriptorMismatchError, SessionError
from .se2 import Pose2

SCAN_RE = re.compile(r"^scan_(\d+)\.(png|pgm)$", re.IGNORECASE)
POSE_COLUMNS = ["scan_id", "timestamp", "x", "y", "yaw"]
ODOM_COLUMNS = ["odom_x", "odom_y", "odom_yaw"]

MAGIC = b"RFRE"
VERSION = 1
HEADER = struct.Struct("<4sHIIQQ")


@dataclass(frozen=True, eq=False)
class RadarScan:
    """Polar intensity image normalised to [0, 1]; rows are azimuths."""

    intensities: np.ndarray
    range_resolution: float
    timestamp: float = 0.0
    scan_id: int = 0

    def __post_init__(self):
        img = np.ascontiguousarray(self.intensities, dtype=np.float64)
        if img.ndim != 2:
            raise SessionError(f"scan {self.scan_id}: intensities must be 2-D, got {img.shape}")
        if img.shape[0] < 4 or img.shape[1] < 4:
            raise SessionError(f"scan {self.scan_id}: need at least 4x4 bins, got {img.shape}")
        if not np.all((img >= 0.0) & (img <= 1.0)):
            raise SessionError(f"scan {self.scan_id}: intensities outside [0, 1]")
        if not self.range_resolution > 0:
            raise SessionError(f"range_resolution must be positive, got {self.range_resolution}")
        object.__setattr__(self, "intensities", img)

    @property
    def azimuth_count(self) -> int:
        return self.intensities.shape[0]

    @property
    def range_bins(self) -> int:
        return self.intensities.shape[1]

    @property
    def shape(self):
        return self.intensities.shape


@dataclass
class Session:
    scans: List[RadarScan]
    gt_poses: List[Pose2]
    odom_poses: Optional[List[Pose2]] = None
    path: Optional[Path] = None

    @property
    def scan_ids(self) -> List[int]:
        return [s.scan_id for s in self.scans]

    @property
    def shape(self):
        return self.scans[0].shape

    @property
    def range_resolution(self) -> float:
        return self.scans[0].range_resolution

    def __len__(self):
        return len(self.scans)


def read_scan_image(path) -> np.ndarray:
    """Read an 8-bit grayscale image and return ``uint8`` values."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise SessionError(f"{path}: expected 8-bit grayscale image, got mode {im.mode!r}")
        return np.asarray(im, dtype=np.uint8).copy()


def write_scan_image(path, intensities: np.ndarray) -> None:
    img = np.clip(np.rint(np.asarray(intensities) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def quantize(intensities: np.ndarray) -> np.ndarray:
    """Round-trip intensities through the 8-bit container."""
    return np.clip(np.rint(np.asarray(intensities) * 255.0), 0, 255) / 255.0


def read_poses_csv(path):
    """Return ``{scan_id: (timestamp, gt Pose2, odom Pose2 or None)}``."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in POSE_COLUMNS if c not in header]
        if missing:
            raise SessionError(f"{path}: missing columns {missing}")
        has_odom = [c in header for c in ODOM_COLUMNS]
        if any(has_odom) and not all(has_odom):
            raise SessionError(f"{path}: odometry needs all of {ODOM_COLUMNS}")
        for line_no, row in enumerate(reader, start=2):
            try:
                sid = int(row["scan_id"])
                ts = float(row["timestamp"])
                gt = Pose2(float(row["x"]), float(row["y"]), float(row["yaw"]))
                odom = None
                if all(has_odom):
                    odom = Pose2(float(row["odom_x"]), float(row["odom_y"]), float(row["odom_yaw"]))
            except (TypeError, ValueError) as exc:
                raise SessionError(f"{path}:{line_no}: {exc}") from None
            if sid in rows:
                raise SessionError(f"{path}: duplicate scan_id {sid}")
            rows[sid] = (ts, gt, odom)
    return rows


def write_poses_csv(path, scan_ids, timestamps, gt_poses, odom_poses=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POSE_COLUMNS + (ODOM_COLUMNS if odom_poses is not None else []))
        for k, sid in enumerate(scan_ids):
            g = gt_poses[k]
            row = [sid, repr(float(timestamps[k])), repr(g.x), repr(g.y), repr(g.yaw)]
            if odom_poses is not None:
                o = odom_poses[k]
                row += [repr(o.x), repr(o.y), repr(o.yaw)]
            w.writerow(row)


def write_trajectory_csv(path, scan_ids, poses) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scan_id", "x", "y", "yaw"])
        for sid, p in zip(scan_ids, poses):
            w.writerow([sid, repr(p.x), repr(p.y), repr(p.yaw)])


def read_trajectory_csv(path):
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[int(row["scan_id"])] = Pose2(float(row["x"]), float(row["y"]), float(row["yaw"]))
    return out


def load_session(dir_path, range_resolution: Optional[float] = None) -> Session:
    """Load every scan of a session directory, sorted by scan id.

    ``range_resolution`` is used when the directory has no ``session.json``.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise FileNotFoundError(f"session directory not found: {root}")
    meta_path = root / "session.json"
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as fh:
            range_resolution = float(json.load(fh)["range_resolution"])
    if range_resolution is None:
        raise SessionError(f"{root}: no session.json and no range_resolution given")

    found = {}
    for p in root.iterdir():
        m = SCAN_RE.match(p.name)
        if m:
            sid = int(m.group(1))
            if sid in found:
                raise SessionError(f"{root}: scan {sid} present in more than one format")
            found[sid] = p
    if not found:
        raise SessionError(f"{root}: empty session (no scan_<id>.png/.pgm files)")

    pose_path = root / "poses.csv"
    if not pose_path.exists():
        raise SessionError(f"{root}: poses.csv is missing")
    poses = read_poses_csv(pose_path)

    scans, gt, odom = [], [], []
    shape = None
    last_ts = -np.inf
    for sid in sorted(found):
        if sid not in poses:
            raise SessionError(f"{root}: missing pose for scan_id {sid}")
        raw = read_scan_image(found[sid])
        if shape is None:
            shape = raw.shape
        elif raw.shape != shape:
            raise SessionError(
                f"{root}: scan_id {sid} has shape {raw.shape}, expected {shape} (dimension mismatch)")
        ts, g, o = poses[sid]
        if ts < last_ts:
            raise SessionError(f"{root}: timestamps not monotone at scan_id {sid}")
        last_ts = ts
        scans.append(RadarScan(raw / 255.0, range_resolution, ts, sid))
        gt.append(g)
        odom.append(o)
    has_odom = all(o is not None for o in odom)
    return Session(scans, gt, odom if has_odom else None, root)


def save_session(dir_path, scans, gt_poses, odom_poses=None) -> Path:
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    for s in scans:
        write_scan_image(root / f"scan_{s.scan_id}.png", s.intensities)
    write_poses_csv(root / "poses.csv", [s.scan_id for s in scans],
                    [s.timestamp for s in scans], gt_poses, odom_poses)
    with open(root / "session.json", "w", encoding="utf-8") as fh:
        json.dump({"range_resolution": scans[0].range_resolution}, fh)
        fh.write("\n")
    return root


@dataclass(eq=False)
class DescriptorRecord:
    scan_id: int
    r_referee: np.ndarray
    a_referee: np.ndarray
    config_hash: int

    def __post_init__(self):
        self.r_referee = np.ascontiguousarray(self.r_referee, dtype="<f4")
        self.a_referee = np.ascontiguousarray(self.a_referee, dtype="<f4")

    def __eq__(self, other):
        if not isinstance(other, DescriptorRecord):
            return NotImplemented
        return (self.scan_id == other.scan_id and self.config_hash == other.config_hash
                and self.r_referee.tobytes() == other.r_referee.tobytes()
                and self.a_referee.tobytes() == other.a_referee.tobytes())


@dataclass
class DescriptorFile:
    n_w: int
    n_h: int
    config_hash: int
    records: List[DescriptorRecord] = field(default_factory=list)


def _record_dtype(n_w, n_h):
    return np.dtype([("scan_id", "<u8"), ("r", "<f4", (n_w,)), ("a", "<f4", (n_h,))])


def save_descriptors(db, path, n_w=None, n_h=None, config_hash=None) -> None:
    """Write records to ``path``. Dimensions/hash come from the records when present."""
    db = list(db)
    if db:
        n_w, n_h, config_hash = len(db[0].r_referee), len(db[0].a_referee), db[0].config_hash
        for rec in db:
            if rec.config_hash != config_hash:
                raise DescriptorMismatchError(
                    f"config_hash mismatch: scan {rec.scan_id} has {rec.config_hash:#x}, expected {config_hash:#x}")
            if len(rec.r_referee) != n_w or len(rec.a_referee) != n_h:
                raise DescriptorMismatchError(f"scan {rec.scan_id}: descriptor length mismatch")
    if n_w is None or n_h is None or config_hash is None:
        raise ValueError("empty descriptor database needs n_w, n_h and config_hash")
    arr = np.zeros(len(db), dtype=_record_dtype(n_w, n_h))
    for k, rec in enumerate(db):
        arr[k] = (rec.scan_id, rec.r_referee, rec.a_referee)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, n_w, n_h, config_hash, len(db)))
        fh.write(arr.tobytes())


def read_descriptor_file(path) -> DescriptorFile:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise DescriptorFileError(f"{path}: truncated header")
    magic, version, n_w, n_h, config_hash, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DescriptorFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DescriptorFileError(f"{path}: unsupported version {version}")
    dtype = _record_dtype(n_w, n_h)
    expected = HEADER.size + count * dtype.itemsize
    if len(data) != expected:
        raise DescriptorFileError(
            f"{path}: corrupt file, {len(data)} bytes for {count} records (expected {expected})")
    arr = np.frombuffer(data, dtype=dtype, offset=HEADER.size, count=count)
    records = [DescriptorRecord(int(row["scan_id"]), row["r"].copy(), row["a"].copy(), config_hash)
               for row in arr]
    return DescriptorFile(n_w, n_h, config_hash, records)


def load_descriptors(path) -> List[DescriptorRecord]:
    return read_descriptor_file(path).records
