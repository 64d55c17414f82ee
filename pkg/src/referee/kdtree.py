"""Exact nearest-neighbour KD-tree stored as flat arrays.

The tree is built in numpy; queries run through ``kernels.kd_nearest``. Ties
on distance resolve to the smallest id, the same rule ``kernels.linear_nearest``
uses, so the two searches return identical answers.
"""
import numpy as np

from . import kernels


class KDTree:
    def __init__(self, points, ids=None, leaf_size=8):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError(f"need a non-empty (n, d) point array, got shape {points.shape}")
        n = points.shape[0]
        self.data = points
        self.ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        if self.ids.shape != (n,):
            raise ValueError("ids must have one entry per point")
        self.leaf_size = max(1, int(leaf_size))

        self._perm = np.empty(n, dtype=np.int64)
        self._nodes = []
        self._fill = 0
        self._build(np.arange(n, dtype=np.int64))
        nodes = np.array(self._nodes, dtype=np.float64).reshape(-1, 6)
        self.split_dim = nodes[:, 0].astype(np.int64)
        self.split_val = nodes[:, 1].copy()
        self.left = nodes[:, 2].astype(np.int64)
        self.right = nodes[:, 3].astype(np.int64)
        self.start = nodes[:, 4].astype(np.int64)
        self.end = nodes[:, 5].astype(np.int64)
        self.perm = self._perm
        del self._nodes, self._perm

    def __len__(self):
        return self.data.shape[0]

    def _build(self, idx):
        node = len(self._nodes)
        self._nodes.append(None)
        pts = self.data[idx]
        spread = pts.max(axis=0) - pts.min(axis=0) if len(idx) else np.zeros(1)
        dim = int(np.argmax(spread))
        if len(idx) <= self.leaf_size or spread[dim] == 0.0:
            s = self._fill
            self._perm[s:s + len(idx)] = idx
            self._fill += len(idx)
            self._nodes[node] = (-1, 0.0, -1, -1, s, self._fill)
            return node
        order = np.argsort(pts[:, dim], kind="stable")
        idx = idx[order]
        mid = len(idx) // 2
        split = float(self.data[idx[mid], dim])
        left = self._build(idx[:mid])
        right = self._build(idx[mid:])
        self._nodes[node] = (dim, split, left, right, 0, 0)
        return node

    def query(self, queries, query_ids=None, exclusion_window=0):
        """Nearest neighbour per query row.

        Returns ``(index, distance)`` arrays; ``index`` is -1 where every
        point was excluded. Points with ``|id - query_id| <= exclusion_window``
        are skipped when the window is positive.
        """
        q = np.ascontiguousarray(np.atleast_2d(queries), dtype=np.float64)
        if q.shape[1] != self.data.shape[1]:
            raise ValueError(f"query dimension {q.shape[1]} != tree dimension {self.data.shape[1]}")
        qids = np.zeros(q.shape[0], dtype=np.int64) if query_ids is None else \
            np.ascontiguousarray(np.atleast_1d(query_ids), dtype=np.int64)
        idx, d2 = kernels.kd_nearest(self.data, self.ids, self.perm, self.split_dim, self.split_val,
                                     self.left, self.right, self.start, self.end,
                                     q, qids, int(exclusion_window))
        return idx, np.sqrt(d2)


def linear_scan(points, ids, queries, query_ids=None, exclusion_window=0):
    """Exhaustive search with the same tie rule as :class:`KDTree`."""
    data = np.ascontiguousarray(points, dtype=np.float64)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    q = np.ascontiguousarray(np.atleast_2d(queries), dtype=np.float64)
    qids = np.zeros(q.shape[0], dtype=np.int64) if query_ids is None else \
        np.ascontiguousarray(np.atleast_1d(query_ids), dtype=np.int64)
    idx, d2 = kernels.linear_nearest(data, ids, q, qids, int(exclusion_window))
    return idx, np.sqrt(d2)
