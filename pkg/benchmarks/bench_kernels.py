"""Compare the compiled kernels with their pure-Python fallbacks.

Each kernel runs on the same input in both backends; outputs are checked
for agreement and wall-clock times are reported with the speedup.

    python3 benchmarks/bench_kernels.py [--scale 1.0] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cspace import _pykernels as pure
from cspace import fixtures as fx
from cspace.distance import BVH, RAY_TOL

try:
    from cspace import _ckernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(scale):
    rng = np.random.default_rng(0)
    n_pts = max(50, int(400 * scale))
    pts = rng.uniform(-1, 1, (n_pts, 3))
    order = np.arange(n_pts, dtype=np.int64)
    ranks = rng.permutation(n_pts).astype(np.int64)
    yield (f"delaunay_build ({n_pts} points)", "delaunay_build", (pts, order, ranks),
           lambda a, b: np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]))

    mesh = fx.icosphere(3)
    bvh = BVH(mesh.corners())
    args = (bvh.tris, bvh.lo, bvh.hi, bvh.left, bvh.right, bvh.start, bvh.count, bvh.order)
    q = rng.uniform(-1.5, 1.5, (max(100, int(2000 * scale)), 3))
    yield (f"bvh_closest ({len(q)} queries, {mesh.n_triangles} triangles)", "bvh_closest",
           (q,) + args, lambda a, b: np.allclose(a[0], b[0], rtol=0, atol=1e-12))
    yield (f"ray_crossings ({len(q)} rays)", "ray_crossings",
           (q, np.array([0.36, 0.48, 0.8]), *args, RAY_TOL),
           lambda a, b: np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]))

    n = max(12, int(40 * scale ** (1 / 3)))
    g = np.stack(np.meshgrid(*[np.arange(n)] * 3, indexing="ij"), -1) - n / 2
    exact = np.abs(np.linalg.norm(g, axis=-1) - n / 4)
    known = exact < 1.0
    yield (f"fast_march ({n}^3 grid)", "fast_march", (np.where(known, exact, 0.0), known, 1.0),
           lambda a, b: np.allclose(a, b, atol=1e-9))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="input size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':<52}{'compiled s':>12}{'python s':>12}{'speedup':>10}  agree")
    ok = True
    for label, name, inp, same in cases(args.scale):
        tc, oc = best_of(lambda: getattr(compiled, name)(*inp), args.repeat)
        tp, op = best_of(lambda: getattr(pure, name)(*inp), 1)
        agree = bool(same(oc, op))
        ok &= agree
        print(f"{label:<52}{tc:>12.4f}{tp:>12.4f}{tp / max(tc, 1e-9):>9.1f}x  {agree}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
