"""Place retrieval over range descriptors."""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ConfigError, DescriptorMismatchError
from .kdtree import KDTree, linear_scan
from .scan_io import DescriptorRecord


@dataclass(frozen=True)
class RetrievalConfig:
    tau: float = 2000.0
    exclusion_window: int = 50
    use_kdtree: bool = True

    def __post_init__(self):
        if not self.tau >= 0:
            raise ConfigError(f"tau must be non-negative, got {self.tau}")
        if self.exclusion_window < 0:
            raise ConfigError(f"exclusion_window must be non-negative, got {self.exclusion_window}")


@dataclass(frozen=True)
class LoopCandidate:
    query_id: int
    cand_id: int
    distance: float
    accepted: bool


def l2_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"descriptor length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


class DescriptorDatabase:
    """Range descriptors in insertion order plus an exact KD-tree over them."""

    def __init__(self, records: List[DescriptorRecord], use_kdtree=True):
        if not records:
            raise ValueError("cannot build a descriptor database from zero records")
        dims = {len(r.r_referee) for r in records}
        if len(dims) != 1:
            raise ValueError(f"mixed descriptor dimensions: {sorted(dims)}")
        hashes = {r.config_hash for r in records}
        if len(hashes) != 1:
            raise DescriptorMismatchError("records were built with different descriptor configs")
        self.records = list(records)
        self.config_hash = records[0].config_hash
        self.ids = np.array([r.scan_id for r in records], dtype=np.int64)
        self.points = np.stack([r.r_referee for r in records]).astype(np.float64)
        self.use_kdtree = use_kdtree
        self.tree = KDTree(self.points, self.ids) if use_kdtree else None

    def __len__(self):
        return len(self.records)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def nearest(self, queries, query_ids=None, exclusion_window=0):
        """Return ``(scan_ids, distances)``; id -1 where nothing was admissible."""
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if queries.shape[1] != self.dimension:
            raise ValueError(f"query dimension {queries.shape[1]} != database dimension {self.dimension}")
        if self.tree is not None:
            idx, dist = self.tree.query(queries, query_ids, exclusion_window)
        else:
            idx, dist = linear_scan(self.points, self.ids, queries, query_ids, exclusion_window)
        ids = np.where(idx >= 0, self.ids[np.maximum(idx, 0)], -1)
        return ids, dist


def build_database(records: List[DescriptorRecord], use_kdtree=True) -> DescriptorDatabase:
    return DescriptorDatabase(records, use_kdtree)


def query(db: DescriptorDatabase, q, query_id: int,
          cfg: RetrievalConfig = RetrievalConfig()) -> Optional[LoopCandidate]:
    """Best admissible candidate for ``q`` if its distance is strictly below tau."""
    cand = nearest_candidate(db, q, query_id, cfg)
    if cand is None or not cand.accepted:
        return None
    return cand


def nearest_candidate(db: DescriptorDatabase, q, query_id: int,
                      cfg: RetrievalConfig = RetrievalConfig()) -> Optional[LoopCandidate]:
    """Like :func:`query` but also returns the top-1 when it fails the threshold."""
    ids, dist = db.nearest(q, [query_id], cfg.exclusion_window)
    if ids[0] < 0:
        return None
    d = float(dist[0])
    return LoopCandidate(int(query_id), int(ids[0]), d, d < cfg.tau)
