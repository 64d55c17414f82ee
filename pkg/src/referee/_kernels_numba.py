"""numba twins of ``_kernels_numpy``. Loop order is kept simple and sequential."""
import numpy as np
from numba import njit


@njit(cache=True)
def feature_mask(img, window, z_score, min_intensity, sigma_floor):
    H, W = img.shape
    half = window // 2
    out = np.zeros((H, W), dtype=np.bool_)
    csum = np.empty(W + 1)
    high = np.empty(W)
    for i in range(H):
        csum[0] = 0.0
        for j in range(W):
            csum[j + 1] = csum[j] + img[i, j]
        acc = 0.0
        for j in range(W):
            lo = max(0, j - half)
            hi = min(W, j + half + 1)
            h = img[i, j] - (csum[hi] - csum[lo]) / (hi - lo)
            high[j] = h
            if h < 0.0:
                acc += h * h
        sigma = np.sqrt(acc / W)
        if sigma < sigma_floor:
            sigma = sigma_floor
        thr = z_score * sigma
        for j in range(W):
            out[i, j] = high[j] > thr and img[i, j] > min_intensity
    return out


@njit(cache=True)
def free_per_column(mask):
    H, W = mask.shape
    free = np.full(W, H, dtype=np.int64)
    for i in range(H):
        for j in range(W):
            if mask[i, j]:
                free[j] -= 1
    return free


@njit(cache=True)
def r_referee(mask, beta):
    free = free_per_column(mask)
    n = free.shape[0] // beta
    out = np.zeros(n, dtype=np.int64)
    for j in range(free.shape[0]):
        out[j // beta] += free[j]
    return out


@njit(cache=True)
def farthest_feature(mask):
    H, W = mask.shape
    r = np.zeros(H, dtype=np.int64)
    for i in range(H):
        for j in range(W - 1, -1, -1):
            if mask[i, j]:
                r[i] = j + 1
                break
    return r


@njit(cache=True)
def a_referee(mask, alpha):
    H, W = mask.shape
    out = np.zeros(H // alpha, dtype=np.int64)
    for i in range(H):
        last = 0
        for j in range(W - 1, -1, -1):
            if mask[i, j]:
                last = j + 1
                break
        free = 0
        for j in range(last):
            if not mask[i, j]:
                free += 1
        out[i // alpha] += free
    return out


@njit(cache=True)
def shift_cosine_distances(a_q, a_c):
    n = a_q.shape[0]
    nq = 0.0
    nc = 0.0
    for k in range(n):
        nq += a_q[k] * a_q[k]
        nc += a_c[k] * a_c[k]
    out = np.ones(n)
    denom = np.sqrt(nq) * np.sqrt(nc)
    if denom == 0.0:
        return out
    for s in range(n):
        dot = 0.0
        for k in range(n):
            dot += a_q[k] * a_c[(k - s) % n]
        out[s] = 1.0 - dot / denom
    return out


@njit(cache=True)
def _sqdist(data, row, q):
    acc = 0.0
    for d in range(q.shape[0]):
        diff = data[row, d] - q[d]
        acc += diff * diff
    return acc


@njit(cache=True)
def linear_nearest(data, ids, queries, qids, window):
    m = queries.shape[0]
    out_i = np.full(m, -1, dtype=np.int64)
    out_d = np.full(m, np.inf)
    for k in range(m):
        best_d = np.inf
        best_i = -1
        for r in range(data.shape[0]):
            if window > 0 and abs(ids[r] - qids[k]) <= window:
                continue
            d2 = _sqdist(data, r, queries[k])
            if d2 < best_d or (d2 == best_d and best_i >= 0 and ids[r] < ids[best_i]):
                best_d = d2
                best_i = r
        out_i[k] = best_i
        out_d[k] = best_d
    return out_i, out_d


@njit(cache=True)
def kd_nearest(data, ids, perm, split_dim, split_val, left, right, start, end,
               queries, qids, window):
    m = queries.shape[0]
    n_nodes = split_dim.shape[0]
    out_i = np.full(m, -1, dtype=np.int64)
    out_d = np.full(m, np.inf)
    stack_node = np.empty(n_nodes + 1, dtype=np.int64)
    stack_bound = np.empty(n_nodes + 1)
    for k in range(m):
        q = queries[k]
        best_d = np.inf
        best_i = -1
        top = 0
        stack_node[0] = 0
        stack_bound[0] = 0.0
        top = 1
        while top > 0:
            top -= 1
            node = stack_node[top]
            if stack_bound[top] > best_d:
                continue
            dim = split_dim[node]
            if dim < 0:
                for p in range(start[node], end[node]):
                    r = perm[p]
                    if window > 0 and abs(ids[r] - qids[k]) <= window:
                        continue
                    d2 = _sqdist(data, r, q)
                    if d2 < best_d or (d2 == best_d and best_i >= 0 and ids[r] < ids[best_i]):
                        best_d = d2
                        best_i = r
                continue
            diff = q[dim] - split_val[node]
            bound = stack_bound[top]
            if diff < 0:
                near = left[node]
                far = right[node]
            else:
                near = right[node]
                far = left[node]
            stack_node[top] = far
            stack_bound[top] = diff * diff
            stack_node[top + 1] = near
            stack_bound[top + 1] = bound
            top += 2
        out_i[k] = best_i
        out_d[k] = best_d
    return out_i, out_d
