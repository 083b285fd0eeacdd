"""Pure-Python implementations of the hot kernels.

These mirror ``_ckernels.pyx`` line for line in behaviour and are used when
the compiled extension is unavailable (or forced via ``CSPACE_PURE=1``).
"""
from __future__ import annotations

import heapq

import numpy as np

from .predicates import INF, Predicates


# ---------------------------------------------------------------------------
# Delaunay: incremental Bowyer-Watson with ghost tetrahedra
# ---------------------------------------------------------------------------

def _link_all(tv, tn, ids):
    faces = {}
    for t in ids:
        for i in range(4):
            key = frozenset(tv[t][:i] + tv[t][i + 1:])
            if key in faces:
                u, j = faces.pop(key)
                tn[t][i] = u
                tn[u][j] = t
            else:
                faces[key] = (t, i)


def initial_simplex(pred: Predicates, order) -> list[int]:
    """First four affinely independent points in insertion order."""
    q = pred.ints
    i0 = order[0]
    i1 = order[1]
    i2 = i3 = None
    for k in order[2:]:
        a, b, c = q[i0], q[i1], q[k]
        u = [b[j] - a[j] for j in range(3)]
        v = [c[j] - a[j] for j in range(3)]
        cr = (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
              u[0] * v[1] - u[1] * v[0])
        if any(cr):
            i2 = k
            break
    if i2 is None:
        raise ValueError("all points collinear")
    for k in order[2:]:
        if k == i2:
            continue
        if pred.orient(i0, i1, i2, k) != 0:
            i3 = k
            break
    if i3 is None:
        raise ValueError("all points coplanar")
    if pred.orient(i0, i1, i2, i3) < 0:
        i0, i1 = i1, i0
    return [i0, i1, i2, i3]


def _start_triangulation(pred, order):
    first = initial_simplex(pred, order)
    tv = [list(first)]
    for i in range(4):
        g = list(first)
        g[i] = INF
        a, b = [j for j in range(4) if j != i][:2]
        g[a], g[b] = g[b], g[a]
        tv.append(g)
    tn = [[-1] * 4 for _ in tv]
    _link_all(tv, tn, range(5))
    return first, tv, tn


def delaunay_build(points: np.ndarray, order: np.ndarray, ranks: np.ndarray):
    """Return ``(tv, tn, exact_calls)`` for the Delaunay triangulation.

    ``tv`` holds vertex ids per tetrahedron (``-1`` marks the vertex at
    infinity), ``tn[t, i]`` the tetrahedron across the face opposite
    ``tv[t, i]``.
    """
    pred = Predicates(points, ranks)
    order = [int(i) for i in order]
    first, tv, tn = _start_triangulation(pred, order)
    alive = [True] * len(tv)
    free: list[int] = []
    used = set(first)
    last = 0
    seed = 12345

    def conflict(t, p):
        v = tv[t]
        if INF in v:
            return pred.ghost_conflict(v, p)
        return pred.insphere_sos(v[0], v[1], v[2], v[3], p) > 0

    for p in order:
        if p in used:
            continue
        # visibility walk
        t = last
        if INF in tv[t]:
            t = tn[t][tv[t].index(INF)]
        steps = 0
        while INF not in tv[t]:
            seed = (seed * 1103515245 + 12345) & 0x7FFFFFFF
            r = seed >> 16
            moved = False
            for j in range(4):
                i = (j + r) & 3
                sub = list(tv[t])
                sub[i] = p
                if pred.orient(*sub) < 0:
                    t = tn[t][i]
                    moved = True
                    break
            if not moved:
                break
            steps += 1
            if steps > 4 * len(tv) + 100:
                t = next(u for u in range(len(tv)) if alive[u] and conflict(u, p))
                break
        # cavity
        state = {t: 1}
        stack = [t]
        cavity = [t]
        boundary = []
        while stack:
            c = stack.pop()
            for i in range(4):
                nb = tn[c][i]
                s = state.get(nb)
                if s == 1:
                    continue
                if s is None:
                    if conflict(nb, p):
                        state[nb] = 1
                        stack.append(nb)
                        cavity.append(nb)
                        continue
                    state[nb] = 0
                boundary.append((c, i))
        # retriangulate
        pending = {}
        new = []
        for c, i in boundary:
            verts = list(tv[c])
            verts[i] = p
            nb = tn[c][i]
            if free:
                nt = free.pop()
                tv[nt] = verts
                tn[nt] = [-1, -1, -1, -1]
                alive[nt] = True
            else:
                nt = len(tv)
                tv.append(verts)
                tn.append([-1, -1, -1, -1])
                alive.append(True)
            tn[nt][i] = nb
            tn[nb][tn[nb].index(c)] = nt
            for k in range(4):
                if k == i:
                    continue
                u, w = (verts[m] for m in range(4) if m != i and m != k)
                key = (u, w) if u < w else (w, u)
                hit = pending.pop(key, None)
                if hit is None:
                    pending[key] = (nt, k)
                else:
                    tn[nt][k] = hit[0]
                    tn[hit[0]][hit[1]] = nt
            new.append(nt)
        assert not pending, "cavity boundary not closed"
        for c in cavity:
            alive[c] = False
            free.append(c)
        last = next((u for u in new if INF not in tv[u]), new[0])
        used.add(p)

    keep = [t for t in range(len(tv)) if alive[t]]
    remap = {t: k for k, t in enumerate(keep)}
    tv_out = np.array([tv[t] for t in keep], dtype=np.int64)
    tn_out = np.array([[remap[u] for u in tn[t]] for t in keep], dtype=np.int64)
    return tv_out, tn_out, pred.exact_calls


# ---------------------------------------------------------------------------
# Point-triangle distance and BVH traversal
# ---------------------------------------------------------------------------

def closest_point_triangle(p, a, b, c):
    """Closest point on triangle ``abc`` to ``p`` (Ericson's region test)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ab @ ap
    d2 = ac @ ap
    if d1 <= 0.0 and d2 <= 0.0:
        return a
    bp = p - b
    d3 = ab @ bp
    d4 = ac @ bp
    if d3 >= 0.0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        return a + (d1 / (d1 - d3)) * ab
    cp = p - c
    d5 = ab @ cp
    d6 = ac @ cp
    if d6 >= 0.0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        return a + (d2 / (d2 - d6)) * ac
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b)
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def _box_dist2(p, lo, hi):
    d = np.maximum(np.maximum(lo - p, 0.0), p - hi)
    return float(d @ d)


def bvh_closest(queries, tris, lo, hi, left, right, start, count, order):
    """Squared distance and triangle id of the closest triangle per query."""
    m = len(queries)
    out_d = np.empty(m)
    out_t = np.empty(m, dtype=np.int64)
    for q in range(m):
        p = queries[q]
        best = np.inf
        best_t = -1
        stack = [(0, _box_dist2(p, lo[0], hi[0]))]
        while stack:
            node, bd = stack.pop()
            if bd > best:
                continue
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    t = order[k]
                    a, b, c = tris[t]
                    x = closest_point_triangle(p, a, b, c)
                    d = float((p - x) @ (p - x))
                    if d < best or (d == best and t < best_t):
                        best = d
                        best_t = t
            else:
                l, r = left[node], right[node]
                dl = _box_dist2(p, lo[l], hi[l])
                dr = _box_dist2(p, lo[r], hi[r])
                if dl < dr:
                    stack.append((r, dr))
                    stack.append((l, dl))
                else:
                    stack.append((l, dl))
                    stack.append((r, dr))
        out_d[q] = best
        out_t[q] = best_t
    return out_d, out_t


def _ray_box(o, inv, lo, hi):
    t1 = (lo - o) * inv
    t2 = (hi - o) * inv
    tmin = np.max(np.minimum(t1, t2))
    tmax = np.min(np.maximum(t1, t2))
    return tmax >= max(tmin, 0.0)


def ray_crossings(queries, direction, tris, lo, hi, left, right, start, count,
                  order, tol):
    """Count ray-triangle crossings; flag rays grazing an edge or vertex."""
    d = np.asarray(direction, dtype=np.float64)
    with np.errstate(divide="ignore"):
        inv = 1.0 / d
    m = len(queries)
    hits = np.zeros(m, dtype=np.int64)
    bad = np.zeros(m, dtype=bool)
    for q in range(m):
        o = queries[q]
        stack = [0]
        while stack:
            node = stack.pop()
            if not _ray_box(o, inv, lo[node], hi[node]):
                continue
            if left[node] >= 0:
                stack.append(left[node])
                stack.append(right[node])
                continue
            for k in range(start[node], start[node] + count[node]):
                a, b, c = tris[order[k]]
                e1 = b - a
                e2 = c - a
                pv = np.cross(d, e2)
                det = e1 @ pv
                if abs(det) < 1e-300:
                    continue
                inv_det = 1.0 / det
                tv = o - a
                u = (tv @ pv) * inv_det
                qv = np.cross(tv, e1)
                v = (d @ qv) * inv_det
                t = (e2 @ qv) * inv_det
                if u < -tol or v < -tol or u + v > 1.0 + tol or t < -tol:
                    continue
                if u < tol or v < tol or u + v > 1.0 - tol or t < tol:
                    bad[q] = True
                    continue
                hits[q] += 1
    return hits, bad


# ---------------------------------------------------------------------------
# Fast marching (first-order upwind, 6-neighbourhood)
# ---------------------------------------------------------------------------

def _solve_eikonal(vals, h):
    vals = sorted(v for v in vals if v < np.inf)
    u = vals[0] + h
    for k in range(1, len(vals)):
        if u <= vals[k]:
            break
        s = sum(vals[: k + 1])
        s2 = sum(v * v for v in vals[: k + 1])
        n = k + 1
        disc = s * s - n * (s2 - h * h)
        if disc < 0:
            break
        u = (s + np.sqrt(disc)) / n
    return u


def fast_march(dist: np.ndarray, known: np.ndarray, h: float,
               limit: float = np.inf) -> np.ndarray:
    """March unsigned distances outward from the ``known`` nodes.

    Nodes farther than ``limit`` stay at ``inf``.
    """
    d = np.array(dist, dtype=np.float64, copy=True)
    nx, ny, nz = d.shape
    state = np.where(known, 2, 0).astype(np.int8)
    d[~known] = np.inf
    heap: list = []
    nbrs = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))

    def update(i, j, k):
        best = []
        for ax in range(3):
            m = np.inf
            for s in (-1, 1):
                ii, jj, kk = i, j, k
                if ax == 0:
                    ii += s
                elif ax == 1:
                    jj += s
                else:
                    kk += s
                if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and state[ii, jj, kk] == 2:
                    m = min(m, d[ii, jj, kk])
            best.append(m)
        return _solve_eikonal(best, h)

    for i, j, k in zip(*np.nonzero(known)):
        for di, dj, dk in nbrs:
            ii, jj, kk = i + di, j + dj, k + dk
            if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and state[ii, jj, kk] == 0:
                state[ii, jj, kk] = 1
                u = update(ii, jj, kk)
                d[ii, jj, kk] = u
                heapq.heappush(heap, (u, ii, jj, kk))
    while heap:
        u, i, j, k = heapq.heappop(heap)
        if state[i, j, k] == 2 or u > d[i, j, k]:
            continue
        if u > limit:
            break
        state[i, j, k] = 2
        for di, dj, dk in nbrs:
            ii, jj, kk = i + di, j + dj, k + dk
            if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and state[ii, jj, kk] != 2:
                state[ii, jj, kk] = 1
                v = update(ii, jj, kk)
                if v < d[ii, jj, kk]:
                    d[ii, jj, kk] = v
                    heapq.heappush(heap, (v, ii, jj, kk))
    d[state != 2] = np.inf
    return d
