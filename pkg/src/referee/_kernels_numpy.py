"""Vectorised numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels_numba``.
"""
import numpy as np


def feature_mask(img, window, z_score, min_intensity, sigma_floor):
    H, W = img.shape
    half = window // 2
    csum = np.zeros((H, W + 1))
    np.cumsum(img, axis=1, out=csum[:, 1:])
    j = np.arange(W)
    lo = np.maximum(0, j - half)
    hi = np.minimum(W, j + half + 1)
    low = (csum[:, hi] - csum[:, lo]) / (hi - lo)
    high = img - low
    neg = np.minimum(high, 0.0)
    sigma = np.sqrt((neg * neg).sum(axis=1) / W)
    sigma = np.maximum(sigma, sigma_floor)
    return (high > z_score * sigma[:, None]) & (img > min_intensity)


def free_per_column(mask):
    return mask.shape[0] - mask.sum(axis=0, dtype=np.int64)


def r_referee(mask, beta):
    free = free_per_column(mask)
    return free.reshape(-1, beta).sum(axis=1)


def farthest_feature(mask):
    """1-based column of the last feature in each row, 0 for featureless rows."""
    W = mask.shape[1]
    any_feat = mask.any(axis=1)
    last = W - np.argmax(mask[:, ::-1], axis=1)
    return np.where(any_feat, last, 0).astype(np.int64)


def a_referee(mask, alpha):
    r = farthest_feature(mask)
    # every feature of a row sits at or before its farthest feature
    per_row = r - mask.sum(axis=1, dtype=np.int64)
    return per_row.reshape(-1, alpha).sum(axis=1)


def shift_cosine_distances(a_q, a_c):
    """Cosine distance between ``a_q`` and ``np.roll(a_c, n)`` for every n."""
    n = a_q.shape[0]
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    rolled = a_c[idx]
    dots = rolled @ a_q
    denom = np.sqrt(a_q @ a_q) * np.sqrt(a_c @ a_c)
    if denom == 0.0:
        return np.ones(n)
    return 1.0 - dots / denom


def _sqdist(points, q):
    diff = points - q
    return (diff * diff).sum(axis=1)


def _admissible(ids, qid, window):
    if window <= 0:
        return np.ones(ids.shape[0], dtype=bool)
    return np.abs(ids - qid) > window


def _pick(d2, cand_ids, best_d, best_id, best_i, local_idx):
    if d2.size == 0:
        return best_d, best_id, best_i
    m = d2.min()
    if m > best_d:
        return best_d, best_id, best_i
    ties = np.flatnonzero(d2 == m)
    k = ties[np.argmin(cand_ids[ties])]
    if m < best_d or cand_ids[k] < best_id:
        return m, cand_ids[k], local_idx[k]
    return best_d, best_id, best_i


def linear_nearest(data, ids, queries, qids, window):
    m = queries.shape[0]
    out_i = np.full(m, -1, dtype=np.int64)
    out_d = np.full(m, np.inf)
    all_idx = np.arange(data.shape[0])
    for k in range(m):
        ok = _admissible(ids, qids[k], window)
        d2 = _sqdist(data[ok], queries[k])
        best_d, _, best_i = _pick(d2, ids[ok], np.inf, np.iinfo(np.int64).max, -1, all_idx[ok])
        out_i[k] = best_i
        out_d[k] = best_d
    return out_i, out_d


def kd_nearest(data, ids, perm, split_dim, split_val, left, right, start, end,
               queries, qids, window):
    m = queries.shape[0]
    out_i = np.full(m, -1, dtype=np.int64)
    out_d = np.full(m, np.inf)
    for k in range(m):
        q = queries[k]
        best_d, best_id, best_i = np.inf, np.iinfo(np.int64).max, -1
        stack = [(0, 0.0)]
        while stack:
            node, bound = stack.pop()
            if bound > best_d:
                continue
            dim = split_dim[node]
            if dim < 0:
                rows = perm[start[node]:end[node]]
                rows = rows[_admissible(ids[rows], qids[k], window)]
                best_d, best_id, best_i = _pick(
                    _sqdist(data[rows], q), ids[rows], best_d, best_id, best_i, rows)
                continue
            diff = q[dim] - split_val[node]
            near, far = (left[node], right[node]) if diff < 0 else (right[node], left[node])
            stack.append((far, diff * diff))
            stack.append((near, bound))
        out_i[k] = best_i
        out_d[k] = best_d
    return out_i, out_d
