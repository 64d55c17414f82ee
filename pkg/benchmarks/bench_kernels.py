"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

The numba side is warmed up once before timing so JIT compilation is excluded.
"""
import argparse
import timeit

import numpy as np

from referee import kernels
from referee.kdtree import KDTree


def cases(rng):
    img = rng.random((400, 3360))
    mask = img > 0.9
    a_q, a_c = rng.random(400), rng.random(400)
    pts = rng.random((5000, 42))
    q = rng.random((500, 42))
    ids = np.arange(5000, dtype=np.int64)
    qids = rng.integers(0, 5000, 500).astype(np.int64)
    t = KDTree(pts, ids)
    kd = (t.data, t.ids, t.perm, t.split_dim, t.split_val, t.left, t.right, t.start, t.end, q, qids, 50)
    return {
        "feature_mask 400x3360": ("feature_mask", (img, 17, 3.0, 0.08, 1e-9)),
        "r_referee 400x3360": ("r_referee", (mask, 80)),
        "a_referee 400x3360": ("a_referee", (mask, 1)),
        "shift_cosine N_h=400": ("shift_cosine_distances", (a_q, a_c)),
        "linear_nearest 5000x42, 500 q": ("linear_nearest", (pts, ids, q, qids, 50)),
        "kd_nearest 5000x42, 500 q": ("kd_nearest", kd),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"numpy": kernels.numpy_impl}
    if kernels.numba_impl is not None:
        impls["numba"] = kernels.numba_impl
    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for label, (fn, args_) in cases(rng).items():
        times = {}
        for name, mod in impls.items():
            f = getattr(mod, fn)
            f(*args_)
            times[name] = min(timeit.repeat(lambda: f(*args_), number=1, repeat=args.repeat))
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{label:<32}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in impls) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
