"""Synthetic radar worlds, trajectories and polar scans with ground truth.

Worlds are random wall segments (sampled as dense point reflectors) plus
isolated poles. A scan deposits a Gaussian bump per visible reflector, adds
multipath ghosts at twice the range and exponential speckle, then quantises
to 8 bits so in-memory scans equal their PNG round trip.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .features import FeatureImage
from .scan_io import RadarScan, Session, quantize
from .se2 import Pose2, relative_pose

TRAJECTORY_KINDS = ("loop", "reverse_loop", "figure_eight")


@dataclass(frozen=True)
class SynthConfig:
    azimuths: int = 400
    range_bins: int = 336
    range_resolution: float = 0.25
    beam_sigma_bins: float = 1.0
    beam_sigma_rows: float = 0.7
    speckle_scale: float = 0.05
    multipath_prob: float = 0.1
    multipath_gain: float = 0.4
    # world
    world_seed: int = 7
    extent_m: float = 320.0
    n_walls: int = 120
    n_poles: int = 300
    wall_spacing_m: float = 0.5
    clearance_m: float = 4.0
    # trajectory
    trajectory: str = "loop"
    n_scans: int = 60
    step_m: float = 5.0
    scan_period_s: float = 0.25
    odom_sigma_xy: float = 0.05
    odom_sigma_yaw_deg: float = 0.3
    odom_yaw_bias_deg: float = 0.0

    def __post_init__(self):
        if self.azimuths < 4 or self.range_bins < 4:
            raise ConfigError("synth scans need at least 4 azimuths and 4 range bins")
        if not self.range_resolution > 0:
            raise ConfigError("synth.range_resolution must be positive")
        for name in ("multipath_prob",):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"synth.{name} must lie in [0, 1]")
        if self.speckle_scale < 0 or self.beam_sigma_bins <= 0 or self.beam_sigma_rows <= 0:
            raise ConfigError("synth noise scales must be non-negative and beam widths positive")
        if self.trajectory not in TRAJECTORY_KINDS:
            raise ConfigError(f"synth.trajectory must be one of {TRAJECTORY_KINDS}")
        if self.n_scans < 8:
            raise ConfigError("synth.n_scans must be >= 8")

    @property
    def max_range(self) -> float:
        return self.range_bins * self.range_resolution


@dataclass
class World:
    landmarks: np.ndarray  # (n, 3): x, y, reflectivity
    extent: float
    rng_seed: int

    def __post_init__(self):
        self.landmarks = np.asarray(self.landmarks, dtype=float).reshape(-1, 3)


def make_world(cfg: SynthConfig = SynthConfig(), seed: Optional[int] = None,
               keep_clear: Optional[List[Pose2]] = None) -> World:
    """Random walls and poles; reflectors closer than ``clearance_m`` to any
    pose in ``keep_clear`` are dropped so the sensor never sits inside a wall."""
    seed = cfg.world_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    half = cfg.extent_m / 2.0
    pts = []
    for _ in range(cfg.n_walls):
        c = rng.uniform(-half, half, 2)
        ang = rng.uniform(0, math.pi)
        length = rng.uniform(6.0, 30.0)
        refl = rng.uniform(0.4, 1.0)
        s = np.arange(-length / 2, length / 2, cfg.wall_spacing_m)
        d = np.array([math.cos(ang), math.sin(ang)])
        xy = c + s[:, None] * d
        pts.append(np.column_stack([xy, np.full(len(s), refl)]))
    poles = rng.uniform(-half, half, (cfg.n_poles, 2))
    pts.append(np.column_stack([poles, rng.uniform(0.3, 1.0, cfg.n_poles)]))
    lm = np.concatenate(pts)
    if keep_clear:
        path = np.array([[p.x, p.y] for p in keep_clear])
        # densify so gaps between poses are cleared as well
        if len(path) > 1:
            seg = np.linspace(0, 1, 6)[:-1]
            dense = (path[:-1, None, :] + seg[None, :, None] * (path[1:] - path[:-1])[:, None, :]).reshape(-1, 2)
            path = np.vstack([dense, path[-1:]])
        d2 = ((lm[:, None, :2] - path[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        lm = lm[d2 > cfg.clearance_m ** 2]
    return World(lm, cfg.extent_m, seed)


def _visible(world: World, pose: Pose2, cfg: SynthConfig):
    """Sensor-frame polar coordinates of reflectors within range."""
    d = world.landmarks[:, :2] - (pose.x, pose.y)
    r = np.hypot(d[:, 0], d[:, 1])
    ok = (r < cfg.max_range) & (r > cfg.range_resolution)
    theta = np.mod(np.arctan2(d[ok, 1], d[ok, 0]) - pose.yaw, 2 * math.pi)
    return r[ok], theta, world.landmarks[ok, 2]


def _deposit(img, rows_c, bins_c, amp, cfg):
    """Max-combine separable Gaussian bumps centred at fractional (row, bin)."""
    H, W = img.shape
    if len(amp) == 0:
        return
    nr = int(math.ceil(3 * cfg.beam_sigma_rows))
    nb = int(math.ceil(3 * cfg.beam_sigma_bins))
    dr = np.arange(-nr, nr + 1)
    db = np.arange(-nb, nb + 1)
    r0 = np.rint(rows_c).astype(np.int64)
    b0 = np.rint(bins_c).astype(np.int64)
    ri = r0[:, None] + dr[None, :]
    bi = b0[:, None] + db[None, :]
    wr = np.exp(-0.5 * ((ri - rows_c[:, None]) / cfg.beam_sigma_rows) ** 2)
    wb = np.exp(-0.5 * ((bi - bins_c[:, None]) / cfg.beam_sigma_bins) ** 2)
    val = amp[:, None, None] * wr[:, :, None] * wb[:, None, :]
    R = np.broadcast_to((ri % H)[:, :, None], val.shape)
    B = np.broadcast_to(bi[:, None, :], val.shape)
    ok = (B >= 0) & (B < W)
    np.maximum.at(img, (R[ok], B[ok]), val[ok])


def _gt_mask(mask, rows_c, bins_c, cfg):
    H, W = mask.shape
    nr = max(1, int(math.ceil(cfg.beam_sigma_rows)))
    nb = max(1, int(math.ceil(cfg.beam_sigma_bins)))
    r0 = np.rint(rows_c).astype(np.int64)
    b0 = np.rint(bins_c).astype(np.int64)
    for dr in range(-nr, nr + 1):
        ri = r0 + dr
        row_ok = (np.abs(ri - rows_c) <= cfg.beam_sigma_rows) | (dr == 0)
        for dbin in range(-nb, nb + 1):
            bi = b0 + dbin
            ok = row_ok & ((np.abs(bi - bins_c) <= cfg.beam_sigma_bins) | (dbin == 0)) & (bi >= 0) & (bi < W)
            mask[ri[ok] % H, bi[ok]] = True


def render_scan(world: World, pose: Pose2, cfg: SynthConfig = SynthConfig(), seed: int = 0,
                scan_id: int = 0, timestamp: float = 0.0,
                row_shift: int = 0) -> Tuple[RadarScan, FeatureImage]:
    """Render one polar scan and its ground-truth feature mask.

    ``row_shift`` turns the sensor a further ``row_shift`` whole azimuth
    rows counter-clockwise; it is applied as an exact cyclic shift of the
    noiseless image before noise is added.
    """
    H, W = cfg.azimuths, cfg.range_bins
    rng = np.random.default_rng(seed)
    r, theta, refl = _visible(world, pose, cfg)
    rows_c = theta / (2 * math.pi / H) - 0.5
    bins_c = r / cfg.range_resolution - 0.5
    img = np.zeros((H, W))
    _deposit(img, rows_c, bins_c, refl, cfg)
    ghost = rng.random(len(r)) < cfg.multipath_prob
    ghost &= 2 * r < cfg.max_range
    _deposit(img, rows_c[ghost], 2 * r[ghost] / cfg.range_resolution - 0.5,
             cfg.multipath_gain * refl[ghost], cfg)
    mask = np.zeros((H, W), dtype=bool)
    _gt_mask(mask, rows_c, bins_c, cfg)
    if row_shift:
        img = np.roll(img, -int(row_shift), axis=0)
        mask = np.roll(mask, -int(row_shift), axis=0)
    if cfg.speckle_scale > 0:
        img += rng.exponential(cfg.speckle_scale, size=img.shape)
    img = quantize(np.clip(img, 0.0, 1.0))
    return RadarScan(img, cfg.range_resolution, timestamp, scan_id), FeatureImage(mask, scan_id)


def render_rotated_pair(world: World, pose: Pose2, rotation_deg: float,
                        cfg: SynthConfig = SynthConfig(), seed: int = 0):
    """Scan the same spot twice, the second time turned ``rotation_deg`` CCW.

    The rotation is snapped to the azimuth grid; the second scan gets an
    independent noise seed unless the snapped rotation is zero.
    Returns ``(scan_a, scan_b, gt_rotation_deg, mask_a, mask_b)``.
    """
    step = 360.0 / cfg.azimuths
    k = int(round(rotation_deg / step)) % cfg.azimuths
    scan_a, mask_a = render_scan(world, pose, cfg, seed, scan_id=0)
    seed_b = seed if k == 0 else _child_seed(seed, 1)
    scan_b, mask_b = render_scan(world, pose, cfg, seed_b, scan_id=1, row_shift=k)
    return scan_a, scan_b, k * step, mask_a, mask_b


def _child_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1)[0])


def _closed_path(n, curve):
    """Drive a closed ``curve(phase, lateral)`` once in ``n - n // 10`` scans, then
    revisit the first ``n // 10`` places 1 m to the left and half a step later, so
    every revisit is ``n - n // 10`` ids away from the scan it repeats."""
    overlap = max(2, n // 10)
    lap = n - overlap
    poses = []
    for t in range(n):
        revisit = t >= lap
        phi = 2 * math.pi * ((t % lap) + (0.5 if revisit else 0.0)) / lap
        poses.append(curve(phi, 1.0 if revisit else 0.0))
    return poses


def _offset_pose(x, y, dx, dy, lateral):
    heading = math.atan2(dy, dx)
    return Pose2(x - lateral * math.sin(heading), y + lateral * math.cos(heading), heading)


def _loop_path(n, step):
    lap = n - max(2, n // 10)
    r = lap * step / (2 * math.pi)

    def curve(phi, lateral):
        return _offset_pose(1.15 * r * math.cos(phi), 0.85 * r * math.sin(phi),
                            -1.15 * math.sin(phi), 0.85 * math.cos(phi), -lateral)
    return _closed_path(n, curve)


def _reverse_path(n, step):
    out_n = (n + 1) // 2
    s = np.arange(out_n) * step
    amp, wl = 12.0, 90.0

    def at(sv, lateral):
        x, y = sv, amp * np.sin(2 * math.pi * sv / wl)
        dy = amp * 2 * math.pi / wl * np.cos(2 * math.pi * sv / wl)
        heading = np.arctan2(dy, 1.0)
        nx, ny = -np.sin(heading), np.cos(heading)
        return x + lateral * nx, y + lateral * ny, heading

    poses = [Pose2(*at(v, 0.0)) for v in s]
    back_s = s[-1] - (np.arange(n - out_n) + 0.5) * step
    for v in back_s:
        x, y, h = at(v, -1.5)
        poses.append(Pose2(x, y, h + math.pi))
    return poses


def _figure_eight_path(n, step):
    lap = n - max(2, n // 10)
    a = lap * step / 6.0

    def curve(phi, lateral):
        return _offset_pose(a * math.sin(phi), a * math.sin(phi) * math.cos(phi),
                            math.cos(phi), math.cos(2 * phi), lateral)
    return _closed_path(n, curve)


def make_trajectory(kind: str, n_scans: int, cfg: SynthConfig = SynthConfig(), seed: int = 0):
    """Ground-truth poses plus drifting odometry.

    Odometry composes each ground-truth step with Gaussian noise
    (``odom_sigma_xy``, ``odom_sigma_yaw_deg``) and a constant yaw bias.
    """
    if n_scans < 8:
        raise ValueError("n_scans must be >= 8")
    builders = {"loop": _loop_path, "reverse_loop": _reverse_path, "figure_eight": _figure_eight_path}
    if kind not in builders:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    gt = builders[kind](n_scans, cfg.step_m)
    rng = np.random.default_rng(_child_seed(seed, 0xD0D0))
    odom = [gt[0]]
    for t in range(n_scans - 1):
        rel = relative_pose(gt[t], gt[t + 1])
        noise = rng.normal(0.0, 1.0, 3)
        step = Pose2(rel.x + cfg.odom_sigma_xy * noise[0],
                     rel.y + cfg.odom_sigma_xy * noise[1],
                     rel.yaw + math.radians(cfg.odom_sigma_yaw_deg * noise[2] + cfg.odom_yaw_bias_deg))
        odom.append(odom[-1].compose(step))
    return gt, odom


@dataclass
class SynthSession:
    world: World
    scans: List[RadarScan]
    gt_masks: List[FeatureImage]
    gt_poses: List[Pose2]
    odom_poses: List[Pose2]
    config: SynthConfig = field(default_factory=SynthConfig)

    def to_session(self) -> Session:
        return Session(list(self.scans), list(self.gt_poses), list(self.odom_poses))


def make_session(cfg: SynthConfig = SynthConfig(), seed: int = 0,
                 world: Optional[World] = None) -> SynthSession:
    """Render a full session. ``seed`` drives speckle, multipath and odometry noise;
    the world comes from ``cfg.world_seed`` so sessions with different seeds
    share the same map."""
    gt, odom = make_trajectory(cfg.trajectory, cfg.n_scans, cfg, seed)
    if world is None:
        world = make_world(cfg, keep_clear=gt)
    scans, masks = [], []
    for k, p in enumerate(gt):
        s, m = render_scan(world, p, cfg, _child_seed(seed, k + 1), scan_id=k,
                           timestamp=k * cfg.scan_period_s)
        scans.append(s)
        masks.append(m)
    return SynthSession(world, scans, masks, gt, odom, cfg)
