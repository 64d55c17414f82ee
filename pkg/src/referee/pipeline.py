"""End-to-end drivers used by the CLI: describe, retrieve, evaluate, SLAM."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import PipelineConfig
from .descriptor import a_referee, r_referee
from .errors import DescriptorMismatchError
from .features import FeatureImage, extract_features
from .metrics import ape, build_outcomes, pr_curve, recall_at_1, rotation_error
from .posegraph import LoopClosure, OptimizeReport, build_graph, optimize
from .registration import register_loop
from .retrieval import LoopCandidate, RetrievalConfig, build_database, nearest_candidate
from .scan_io import DescriptorRecord, RadarScan, Session
from .se2 import Pose2

log = logging.getLogger(__name__)


def describe_scans(scans: Sequence[RadarScan], cfg: PipelineConfig):
    """Feature images and descriptor records for every scan."""
    if scans:
        cfg.descriptor.resolve(scans[0].shape)
    h = cfg.config_hash
    fis, records = [], []
    for s in scans:
        fi = extract_features(s, cfg.feature)
        fis.append(fi)
        records.append(DescriptorRecord(s.scan_id, r_referee(fi, cfg.descriptor),
                                        a_referee(fi, cfg.descriptor), h))
    return fis, records


def retrieve_all(queries: Sequence[DescriptorRecord], database: Sequence[DescriptorRecord],
                 cfg: PipelineConfig, single_session: bool = True) -> List[Optional[LoopCandidate]]:
    """Top-1 candidate per query (``None`` when nothing is admissible).

    The exclusion window only applies within a single session.
    """
    if queries and database and queries[0].config_hash != database[0].config_hash:
        raise DescriptorMismatchError(
            f"config_hash mismatch: queries {queries[0].config_hash:#x}, database {database[0].config_hash:#x}")
    window = cfg.retrieval.exclusion_window if single_session else 0
    rcfg = RetrievalConfig(cfg.retrieval.tau, window, cfg.retrieval.use_kdtree)
    db = build_database(list(database), cfg.retrieval.use_kdtree)
    ids, dist = db.nearest(np.stack([q.r_referee for q in queries]).astype(np.float64),
                           [q.scan_id for q in queries], window)
    out = []
    for q, cid, d in zip(queries, ids, dist):
        out.append(None if cid < 0 else LoopCandidate(q.scan_id, int(cid), float(d), float(d) < rcfg.tau))
    return out


@dataclass
class EvalSummary:
    auc: float
    f1_max: float
    recall_at_1: float
    mean_re_deg: float = math.nan
    ape_rmse_m: float = math.nan
    ape_literal_m: float = math.nan
    curve: object = None


def evaluate_matches(matches: Dict[int, tuple], query_poses: Dict[int, Pose2],
                     db_poses: Dict[int, Pose2], cfg: PipelineConfig,
                     single_session: bool = True) -> EvalSummary:
    """``matches`` maps query id to ``(cand_id or None, distance)``."""
    q_ids = sorted(query_poses)
    d_ids = sorted(db_poses)
    window = cfg.retrieval.exclusion_window if single_session else 0
    outcomes = build_outcomes(q_ids, [[query_poses[i].x, query_poses[i].y] for i in q_ids], matches,
                              d_ids, [[db_poses[i].x, db_poses[i].y] for i in d_ids],
                              cfg.metrics.revisit_radius_m, window)
    curve = pr_curve(outcomes, cfg.metrics.revisit_radius_m)
    r1 = recall_at_1(outcomes, cfg.metrics.revisit_radius_m)
    return EvalSummary(curve.auc, curve.f1_max, r1, curve=curve)


def gt_heading_deg(query: Pose2, cand: Pose2) -> float:
    """Ground-truth heading in the estimator's convention (candidate yaw minus query yaw)."""
    return math.degrees(cand.yaw - query.yaw) % 360.0


@dataclass
class LoopRow:
    query_id: int
    cand_id: int
    desc_dist: float
    heading_deg: float
    fitness: float
    accepted: bool
    measurement: Optional[Pose2] = None


@dataclass
class SlamResult:
    scan_ids: List[int]
    odometry: List[Pose2]
    optimized: List[Pose2]
    loops: List[LoopRow] = field(default_factory=list)
    report: Optional[OptimizeReport] = None

    @property
    def accepted_loops(self) -> List[LoopRow]:
        return [r for r in self.loops if r.accepted]


def run_slam(session: Session, cfg: PipelineConfig,
             feature_images: Optional[List[FeatureImage]] = None,
             records: Optional[List[DescriptorRecord]] = None) -> SlamResult:
    """Causal loop detection, registration and pose-graph optimisation.

    Scan ``q`` may only close a loop with scans whose id is smaller than
    ``q - exclusion_window`` (strictly earlier when the window is 0).
    """
    if session.odom_poses is None:
        raise ValueError("session has no odometry columns; cannot run SLAM")
    if feature_images is None or records is None:
        feature_images, records = describe_scans(session.scans, cfg)
    ids = session.scan_ids
    window = cfg.retrieval.exclusion_window
    res = session.range_resolution
    rows, closures = [], []
    rcfg = RetrievalConfig(cfg.retrieval.tau, 0, cfg.retrieval.use_kdtree)
    for qi, qid in enumerate(ids):
        n_past = sum(1 for c in ids[:qi] if c < qid - window)
        if n_past == 0:
            continue
        db = build_database(records[:n_past], cfg.retrieval.use_kdtree)
        cand = nearest_candidate(db, records[qi].r_referee, qid, rcfg)
        if cand is None or not cand.accepted:
            continue
        ci = ids.index(cand.cand_id)
        reg = register_loop(feature_images[qi], feature_images[ci],
                            records[qi].a_referee, records[ci].a_referee, res, cfg.icp)
        fitness = reg.icp.fitness if reg.icp is not None else math.inf
        meas = reg.transform.to_pose() if reg.accepted else None
        rows.append(LoopRow(qid, cand.cand_id, cand.distance, reg.heading.angle_deg,
                            fitness, reg.accepted, meas))
        if reg.accepted:
            closures.append(LoopClosure(qi, ci, meas, cand.distance, reg.heading.angle_deg, fitness))
    odom = list(session.odom_poses)
    if not closures:
        log.warning("no accepted loop closures; trajectory equals odometry")
        return SlamResult(ids, odom, list(odom), rows, None)
    graph = build_graph(odom, closures, cfg.posegraph)
    optimized, report = optimize(graph, odom, cfg.posegraph)
    return SlamResult(ids, odom, optimized, rows, report)


def slam_errors(result: SlamResult, gt: Sequence[Pose2]):
    """APE of odometry and optimised trajectories plus mean heading error over accepted loops."""
    index = {sid: k for k, sid in enumerate(result.scan_ids)}
    re = [rotation_error(r.heading_deg, gt_heading_deg(gt[index[r.query_id]], gt[index[r.cand_id]]))
          for r in result.accepted_loops]
    return {
        "ape_rmse_odom": ape(result.odometry, gt, "rmse"),
        "ape_rmse_opt": ape(result.optimized, gt, "rmse"),
        "ape_literal_odom": ape(result.odometry, gt, "literal"),
        "ape_literal_opt": ape(result.optimized, gt, "literal"),
        "mean_re_deg": float(np.mean(re)) if re else math.nan,
    }
