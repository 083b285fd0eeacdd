"""Unsigned and signed distance to a triangle mesh.

Closest-triangle queries run through a bounding-volume hierarchy; the sign
comes from ray-crossing parity, retrying along a new direction whenever a ray
grazes an edge or vertex. Inside is negative.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .mesh import TriangleMesh

LEAF_SIZE = 8
RAY_TOL = 1e-10

# Fixed, deliberately "generic" ray directions tried in order.
_DIRECTIONS = np.array([
    [0.5773, 0.5774, 0.5773], [0.2673, -0.5345, 0.8018], [-0.6228, 0.3114, 0.7171],
    [0.8165, 0.4082, -0.4082], [-0.1231, -0.9847, 0.1231], [0.3015, 0.9045, -0.3015],
    [-0.7071, 0.1414, -0.6928], [0.1104, 0.2208, 0.9690],
])
_DIRECTIONS = _DIRECTIONS / np.linalg.norm(_DIRECTIONS, axis=1, keepdims=True)


class OpenMeshError(ValueError):
    """Sign of the distance is undefined for a mesh that is not closed."""


class BVH:
    """Axis-aligned bounding-box tree over the triangles of a mesh.

    Nodes are stored in flat arrays; node 0 is the root, ``left < 0`` marks a
    leaf owning ``order[start:start + count]``.
    """

    def __init__(self, corners: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.tris = np.ascontiguousarray(corners, dtype=np.float64).reshape(-1, 3, 3)
        F = len(self.tris)
        tlo = self.tris.min(axis=1)
        thi = self.tris.max(axis=1)
        cen = 0.5 * (tlo + thi)
        order = np.arange(F, dtype=np.int64)
        lo, hi, left, right, start, count = [], [], [], [], [], []

        def new_node(s, e):
            idx = order[s:e]
            lo.append(tlo[idx].min(0) if e > s else np.zeros(3))
            hi.append(thi[idx].max(0) if e > s else np.zeros(3))
            left.append(-1)
            right.append(-1)
            start.append(s)
            count.append(e - s)
            return len(lo) - 1

        stack = [(new_node(0, F), 0, F)]
        while stack:
            node, s, e = stack.pop()
            if e - s <= leaf_size:
                continue
            idx = order[s:e]
            c = cen[idx]
            axis = int(np.argmax(c.max(0) - c.min(0)))
            mid = (e - s) // 2
            part = np.argpartition(c[:, axis], mid, kind="introselect")
            order[s:e] = idx[part]
            l = new_node(s, s + mid)
            r = new_node(s + mid, e)
            left[node], right[node] = l, r
            count[node] = 0
            stack.append((r, s + mid, e))
            stack.append((l, s, s + mid))

        self.lo = np.array(lo, dtype=np.float64).reshape(-1, 3)
        self.hi = np.array(hi, dtype=np.float64).reshape(-1, 3)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.count = np.array(count, dtype=np.int64)
        self.order = order

    def _args(self):
        return (self.tris, self.lo, self.hi, self.left, self.right, self.start,
                self.count, self.order)

    def closest(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(distance, triangle_id)`` for each query point."""
        q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
        d2, tid = kernels.bvh_closest(q, *self._args())
        return np.sqrt(d2), tid

    def crossings(self, queries: np.ndarray, direction) -> tuple[np.ndarray, np.ndarray]:
        q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
        return kernels.ray_crossings(q, np.asarray(direction, dtype=np.float64),
                                     *self._args(), RAY_TOL)


class DistanceField:
    """Distance queries against a fixed mesh (immutable, thread-safe reads)."""

    def __init__(self, mesh: TriangleMesh):
        self.mesh = mesh
        self.bvh = BVH(mesh.corners())

    def unsigned(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        d, _ = self.bvh.closest(x.reshape(-1, 3))
        return d.reshape(x.shape[:-1])

    def inside(self, x) -> np.ndarray:
        """Ray-parity inside test; requires a closed mesh."""
        if not self.mesh.closed:
            raise OpenMeshError("mesh is not closed; inside/outside is undefined")
        x = np.asarray(x, dtype=np.float64)
        pts = x.reshape(-1, 3)
        result = np.zeros(len(pts), dtype=bool)
        todo = np.arange(len(pts))
        for d in _DIRECTIONS:
            if not len(todo):
                break
            hits, bad = self.bvh.crossings(pts[todo], d)
            ok = ~bad
            result[todo[ok]] = (hits[ok] % 2) == 1
            todo = todo[bad]
        if len(todo):
            # every direction grazed: fall back to a majority over random rays
            rng = np.random.default_rng(0)
            for i in todo:
                votes = 0
                for d in rng.normal(size=(7, 3)):
                    h, _ = self.bvh.crossings(pts[i:i + 1], d / np.linalg.norm(d))
                    votes += int(h[0] % 2)
                result[i] = votes > 3
        return result.reshape(x.shape[:-1])

    def signed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        d = self.unsigned(x)
        s = np.where(self.inside(x), -d, d)
        return np.where(d == 0.0, 0.0, s)


def signed_distance(mesh: TriangleMesh, x) -> np.ndarray | float:
    """Signed distance from ``x`` (one point or ``(..., 3)``) to ``mesh``."""
    x = np.asarray(x, dtype=np.float64)
    out = DistanceField(mesh).signed(x)
    return float(out) if x.ndim == 1 else out


def unsigned_distance(mesh: TriangleMesh, x) -> np.ndarray | float:
    """Distance magnitude only; valid for open meshes."""
    x = np.asarray(x, dtype=np.float64)
    out = DistanceField(mesh).unsigned(x)
    return float(out) if x.ndim == 1 else out


def brute_force_distance(mesh: TriangleMesh, x) -> np.ndarray:
    """Reference O(F) distance used as a test oracle."""
    from ._pykernels import closest_point_triangle

    pts = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    c = mesh.corners()
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        out[i] = min(np.linalg.norm(p - closest_point_triangle(p, *tri)) for tri in c)
    return out
