"""Place-recognition and trajectory metrics."""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError

DEFAULT_REVISIT_RADIUS = 20.0


@dataclass(frozen=True)
class MetricsConfig:
    revisit_radius_m: float = DEFAULT_REVISIT_RADIUS

    def __post_init__(self):
        if not self.revisit_radius_m > 0:
            raise ConfigError("metrics.revisit_radius_m must be positive")


@dataclass(frozen=True)
class MatchOutcome:
    query_id: int
    retrieved_id: Optional[int]
    descriptor_distance: float
    metric_distance_m: Optional[float]
    has_true_revisit: bool

    def __post_init__(self):
        if (self.retrieved_id is None) != (self.metric_distance_m is None):
            raise ValueError("metric_distance_m must be given exactly when retrieved_id is")


@dataclass
class PrCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    auc: float
    f1_max: float

    def rows(self):
        return zip(self.thresholds, self.precision, self.recall, self.f1)


def precision_recall(tp: int, fp: int, fn: int):
    """Precision is 1 when nothing was accepted; recall is 0 with no positives."""
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def classify(outcomes: Sequence[MatchOutcome], tau: float,
             revisit_radius: float = DEFAULT_REVISIT_RADIUS):
    """Return ``(tp, fp, fn)`` for acceptance rule ``distance < tau``."""
    tp = fp = fn = 0
    for o in outcomes:
        accepted = o.retrieved_id is not None and o.descriptor_distance < tau
        if accepted:
            if o.metric_distance_m <= revisit_radius:
                tp += 1
            else:
                fp += 1
        elif o.has_true_revisit:
            fn += 1
    return tp, fp, fn


def _arrays(outcomes, revisit_radius):
    retrieved = np.array([o.retrieved_id is not None for o in outcomes], dtype=bool)
    dist = np.array([o.descriptor_distance if o.retrieved_id is not None else np.inf
                     for o in outcomes], dtype=float)
    close = np.array([o.metric_distance_m is not None and o.metric_distance_m <= revisit_radius
                      for o in outcomes], dtype=bool)
    positive = np.array([o.has_true_revisit for o in outcomes], dtype=bool)
    return retrieved, dist, close, positive


def pr_curve(outcomes: Sequence[MatchOutcome],
             revisit_radius: float = DEFAULT_REVISIT_RADIUS) -> PrCurve:
    """Sweep tau over every observed distance plus +inf.

    Because acceptance is strict (``distance < tau``) the first threshold
    accepts nothing; the curve starts at (recall 0, precision 1).
    """
    retrieved, dist, close, positive = _arrays(outcomes, revisit_radius)
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise ValueError("pr_curve needs at least one query with a true revisit")
    taus = np.append(np.unique(dist[retrieved]), np.inf)
    order = np.argsort(dist, kind="stable")
    d_sorted = dist[order]
    # number of queries with distance < tau, then cumulative counts of each class
    k = np.searchsorted(d_sorted, taus, side="left")
    tp_c = np.concatenate([[0], np.cumsum((close & retrieved)[order])])
    acc_c = np.concatenate([[0], np.cumsum(retrieved[order])])
    pos_acc_c = np.concatenate([[0], np.cumsum((positive & retrieved)[order])])
    tp = tp_c[k]
    fp = acc_c[k] - tp
    fn = n_pos - pos_acc_c[k]
    precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 1.0)
    recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
    s = precision + recall
    f1 = np.where(s > 0, 2 * precision * recall / np.where(s > 0, s, 1), 0.0)
    auc = float(np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0))
    return PrCurve(taus, precision, recall, f1, auc, float(f1.max()))


def recall_at_1(outcomes: Sequence[MatchOutcome],
                revisit_radius: float = DEFAULT_REVISIT_RADIUS) -> float:
    """Fraction of revisit queries whose top-1 lies within the radius; tau is not applied."""
    gt = sum(o.has_true_revisit for o in outcomes)
    if gt == 0:
        raise ZeroDivisionError("recall_at_1: no query has a true revisit")
    hits = sum(o.retrieved_id is not None and o.metric_distance_m <= revisit_radius
               for o in outcomes)
    return hits / gt


def rotation_error(est_deg: float, gt_deg: float) -> float:
    d = math.fmod(abs(est_deg - gt_deg), 360.0)
    return min(d, 360.0 - d)


def _positions(traj) -> np.ndarray:
    arr = np.array([[p.x, p.y] if hasattr(p, "x") else p[:2] for p in traj], dtype=float)
    return arr.reshape(-1, 2)


def ape(est, gt, mode: str = "rmse") -> float:
    """Absolute position error between matched trajectories.

    ``rmse`` is the root of the mean squared error. ``literal`` takes the root
    of the mean of unsquared errors.
    """
    e, g = _positions(est), _positions(gt)
    if e.shape != g.shape:
        raise ValueError(f"trajectory length mismatch: {len(e)} vs {len(g)}")
    err = np.linalg.norm(e - g, axis=1)
    if mode == "rmse":
        return float(np.sqrt(np.mean(err ** 2)))
    if mode == "literal":
        return float(np.sqrt(np.mean(err)))
    raise ValueError(f"unknown APE mode {mode!r}")


def build_outcomes(query_ids, query_xy, matches, db_ids, db_xy,
                   revisit_radius: float = DEFAULT_REVISIT_RADIUS,
                   exclusion_window: int = 0) -> List[MatchOutcome]:
    """Attach ground truth to retrieval results.

    ``matches`` maps query id to ``(cand_id or None, descriptor distance)``.
    A query has a true revisit when any database entry outside the exclusion
    window lies within ``revisit_radius`` of it.
    """
    query_xy = np.asarray(query_xy, dtype=float)
    db_xy = np.asarray(db_xy, dtype=float)
    db_ids = np.asarray(db_ids, dtype=np.int64)
    db_index = {int(i): k for k, i in enumerate(db_ids)}
    out = []
    for qi, qid in enumerate(query_ids):
        admissible = np.ones(len(db_ids), dtype=bool) if exclusion_window <= 0 \
            else np.abs(db_ids - qid) > exclusion_window
        d_all = np.linalg.norm(db_xy[admissible] - query_xy[qi], axis=1)
        positive = bool(np.any(d_all <= revisit_radius))
        cand, ddist = matches.get(int(qid), (None, math.inf))
        if cand is None:
            out.append(MatchOutcome(int(qid), None, math.inf, None, positive))
            continue
        metric = float(np.linalg.norm(db_xy[db_index[int(cand)]] - query_xy[qi]))
        out.append(MatchOutcome(int(qid), int(cand), float(ddist), metric, positive))
    return out
