"""Critical points of the distance function to a point sample and its flow.

The distance function ``h_P(x) = min_p |x - p|`` is critical exactly where a
Voronoi object meets its dual Delaunay simplex:

* index 0 -- every sample point;
* index 1 -- a Delaunay edge whose midpoint lies in its Voronoi facet
  (a Gabriel edge: every link vertex sees the edge at an acute angle);
* index 2 -- a Delaunay triangle whose circumcenter lies inside it and on its
  Voronoi edge (acute triangle with both apexes outside its diametral ball);
* index 3 -- a Delaunay tetrahedron containing its own circumcenter.

The flow is the combinatorial steepest ascent between Voronoi vertices: a
tetrahedron whose circumcenter lies beyond one of its faces flows across
that face -- the one nearest the circumcenter, which holds the driver (the
closest point of the tetrahedron) -- to the neighbouring tetrahedron or to
infinity. Circumradii strictly increase along the flow, so it is acyclic.

Every sign is decided in floating point when the value is clearly away from
zero and re-evaluated with exact rational arithmetic otherwise. Exact zeros
are ties: edges and triangles on a tie are non-critical, and a circumcenter
exactly on a shared face is passed to the higher-numbered tetrahedron.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .delaunay import (TET_EDGE_OPPOSITE, TET_EDGES, TET_FACES, DelaunayComplex,
                       VoronoiDiagram, triangle_circumcenters)

INFINITY = -1
BOUNDARY_TOL = 1e-7
_REL = 1e-9

MAXIMUM, SADDLE2, SADDLE1, MINIMUM = 3, 2, 1, 0


class UnsupportedIndexError(ValueError):
    """A manifold was requested for a critical point of the wrong index."""


# ---------------------------------------------------------------------------
# exact helpers
# ---------------------------------------------------------------------------

def _fr(p):
    return [Fraction(float(x)) for x in p]


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _sub(u, v):
    return [u[0] - v[0], u[1] - v[1], u[2] - v[2]]


def _cross(u, v):
    return [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def exact_tet_circumcenter(P):
    a, b, c, d = (_fr(p) for p in P)
    u, v, w = _sub(b, a), _sub(c, a), _sub(d, a)
    vw, wu, uv = _cross(v, w), _cross(w, u), _cross(u, v)
    den = 2 * _dot(u, vw)
    uu, vv, ww = _dot(u, u), _dot(v, v), _dot(w, w)
    return [a[k] + (uu * vw[k] + vv * wu[k] + ww * uv[k]) / den for k in range(3)]


def exact_triangle_circumcenter(P):
    a, b, c = (_fr(p) for p in P)
    u, v = _sub(b, a), _sub(c, a)
    n = _cross(u, v)
    nn = _dot(n, n)
    x, y = _cross(n, u), _cross(v, n)
    vv, uu = _dot(v, v), _dot(u, u)
    return [a[k] + (x[k] * vv + y[k] * uu) / (2 * nn) for k in range(3)]


# ---------------------------------------------------------------------------
# vectorised geometry
# ---------------------------------------------------------------------------

def closest_points_on_triangles(p, a, b, c):
    """Row-wise closest point on triangle ``(a, b, c)`` to ``p``.

    Rows with a non-finite ``p`` yield non-finite results without warnings.
    """
    with np.errstate(invalid="ignore"):
        return _closest_points(p, a, b, c)


def _closest_points(p, a, b, c):
    n = np.cross(b - a, c - a)
    nn = np.einsum("ij,ij->i", n, n)
    proj = p - (np.einsum("ij,ij->i", p - a, n) / nn)[:, None] * n
    inside = np.ones(len(p), dtype=bool)
    for x, y in ((a, b), (b, c), (c, a)):
        inside &= np.einsum("ij,ij->i", np.cross(y - x, proj - x), n) >= 0
    best = proj.copy()
    bestd = np.full(len(p), np.inf)
    for x, y in ((a, b), (b, c), (c, a)):
        e = y - x
        t = np.clip(np.einsum("ij,ij->i", p - x, e) / np.einsum("ij,ij->i", e, e), 0, 1)
        q = x + t[:, None] * e
        d = np.einsum("ij,ij->i", p - q, p - q)
        upd = ~inside & (d < bestd)
        best[upd] = q[upd]
        bestd[upd] = d[upd]
    return best


def _face_sides(dt: DelaunayComplex) -> np.ndarray:
    """Sign of each tet's circumcenter relative to each face.

    ``+1`` on the tetrahedron's side, ``-1`` beyond the face, ``0`` on it.
    """
    P = dt.points[dt.tets]
    cc = dt.circumcenters
    T = dt.n_tets
    side = np.zeros((T, 4), dtype=np.int8)
    border = []
    for i in range(4):
        f = P[:, TET_FACES[i]]
        n = np.cross(f[:, 1] - f[:, 0], f[:, 2] - f[:, 0])
        apex = np.einsum("ij,ij->i", n, P[:, i] - f[:, 0])
        s = np.einsum("ij,ij->i", n, cc - f[:, 0])
        scale = np.linalg.norm(n, axis=1) * dt.circumradii
        ok = np.isfinite(s) & (np.abs(s) > _REL * scale)
        side[ok, i] = np.sign(s[ok] * apex[ok]).astype(np.int8)
        border += [(t, i) for t in np.flatnonzero(~ok).tolist()]
    for t, i in border:
        Q = dt.points[dt.tets[t]]
        ex = exact_tet_circumcenter(Q)
        F = [_fr(Q[j]) for j in TET_FACES[i]]
        n = _cross(_sub(F[1], F[0]), _sub(F[2], F[0]))
        side[t, i] = _sgn(_dot(n, _sub(ex, F[0]))) * _sgn(_dot(n, _sub(_fr(Q[i]), F[0])))
    return side


def _gabriel_edges(dt: DelaunayComplex) -> np.ndarray:
    """Edges whose every link vertex sees them at a strictly acute angle."""
    P = dt.points
    T = dt.tets
    ok = np.ones(len(dt.edges), dtype=bool)
    border = []
    for k in range(6):
        a = P[T[:, TET_EDGES[k, 0]]]
        b = P[T[:, TET_EDGES[k, 1]]]
        eid = dt.tet_edges[:, k]
        for j in range(2):
            cidx = T[:, TET_EDGE_OPPOSITE[k, j]]
            c = P[cidx]
            dot = np.einsum("ij,ij->i", a - c, b - c)
            scale = np.linalg.norm(a - c, axis=1) * np.linalg.norm(b - c, axis=1)
            sure = np.abs(dot) > _REL * scale
            ok[eid[sure & (dot < 0)]] = False
            for t in np.flatnonzero(~sure).tolist():
                border.append((int(eid[t]), int(cidx[t])))
    for e, c in border:
        if not ok[e]:
            continue
        A, B = _fr(P[dt.edges[e, 0]]), _fr(P[dt.edges[e, 1]])
        C = _fr(P[c])
        if _dot(_sub(A, C), _sub(B, C)) <= 0:
            ok[e] = False
    return ok


def _triangle_obtuse(P3: np.ndarray) -> np.ndarray:
    """Per triangle, sign of the circumcenter against each edge.

    Column ``j`` refers to the edge opposite local vertex ``j``: ``+1`` when
    the circumcenter is on the triangle's side of that edge, ``-1`` beyond it
    (the angle at vertex ``j`` is obtuse), ``0`` on it (right angle).
    """
    K = len(P3)
    out = np.zeros((K, 3), dtype=np.int8)
    border = []
    for j in range(3):
        x = P3[:, j]
        y = P3[:, (j + 1) % 3]
        z = P3[:, (j + 2) % 3]
        dot = np.einsum("ij,ij->i", y - x, z - x)
        scale = np.linalg.norm(y - x, axis=1) * np.linalg.norm(z - x, axis=1)
        sure = np.abs(dot) > _REL * scale
        out[sure, j] = np.sign(dot[sure]).astype(np.int8)
        border += [(k, j) for k in np.flatnonzero(~sure).tolist()]
    for k, j in border:
        X, Y, Z = (_fr(P3[k, (j + m) % 3]) for m in range(3))
        out[k, j] = _sgn(_dot(_sub(Y, X), _sub(Z, X)))
    return out


def _apex_outside(dt: DelaunayComplex, tcc: np.ndarray, tR: np.ndarray) -> np.ndarray:
    """Whether every apex of each triangle lies strictly outside its diametral ball."""
    ok = np.ones(len(dt.triangles), dtype=bool)
    border = []
    for side in range(2):
        t = dt.triangle_tets[:, side]
        has = t >= 0
        idx = np.flatnonzero(has)
        tets = dt.tets[t[idx]]
        tri = dt.triangles[idx]
        mask = ~(tets[:, :, None] == tri[:, None, :]).any(axis=2)
        apex = tets[mask]
        d = dt.points[apex] - tcc[idx]
        pw = np.einsum("ij,ij->i", d, d) - tR[idx] ** 2
        sure = np.abs(pw) > _REL * tR[idx] ** 2
        ok[idx[sure & (pw < 0)]] = False
        border += list(zip(idx[~sure].tolist(), apex[~sure].tolist()))
    for k, a in border:
        if not ok[k]:
            continue
        Q = dt.points[dt.triangles[k]]
        c = exact_triangle_circumcenter(Q)
        r2 = _dot(_sub(_fr(Q[0]), c), _sub(_fr(Q[0]), c))
        d = _sub(_fr(dt.points[a]), c)
        if _dot(d, d) <= r2:
            ok[k] = False
    return ok


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    """Critical point of ``h_P``.

    ``simplex`` indexes the dual pair: a point, edge, triangle or tetrahedron
    id of the Delaunay complex (the Voronoi object shares the id).
    """

    index: int
    location: tuple
    h_value: float
    simplex: int
    side: str | None = None
    near_boundary: bool = False

    @property
    def dual_pair(self):
        kind = ("point", "edge", "triangle", "tet")[self.index]
        vkind = ("cell", "facet", "edge", "vertex")[self.index]
        return (kind, self.simplex), (vkind, self.simplex)


@dataclass
class Manifold:
    """Stable or unstable manifold as a collection of whole cells.

    ``tets`` are Delaunay tetrahedra (3-cells of a stable manifold, or the
    Voronoi vertices met by an unstable one); ``facets`` are Voronoi facets
    (Delaunay edge ids) of a 2-dimensional unstable manifold; ``polyline``
    holds the vertices of a 1-dimensional one. ``ends`` lists the maxima
    reached (tet ids, ``-1`` for infinity).
    """

    kind: str
    source: CriticalPoint
    dim: int
    tets: np.ndarray
    facets: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    polyline: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    ends: tuple = ()


class FlowComplex:
    """Critical points and discrete flow over a Delaunay/Voronoi pair."""

    def __init__(self, dt: DelaunayComplex, vd: VoronoiDiagram | None = None):
        self.dt = dt
        self.vd = vd
        self.face_side = _face_sides(dt)
        self._flow()
        P3 = dt.points[dt.triangles]
        self.tri_cc, self.tri_R = triangle_circumcenters(P3)
        self.tri_side = _triangle_obtuse(P3)
        self.gabriel = _gabriel_edges(dt)
        self.critical_triangle = (self.tri_side > 0).all(1) & _apex_outside(
            dt, self.tri_cc, self.tri_R)
        self.is_max = self.next == np.arange(dt.n_tets)

    # -- flow ---------------------------------------------------------

    def _flow(self):
        dt = self.dt
        T = dt.n_tets
        side = self.face_side
        nb = dt.neighbors
        own = np.arange(T)[:, None]
        beyond = (side < 0) | ((side == 0) & ((nb > own) | (nb < 0)))
        nxt = np.arange(T, dtype=np.int64)
        many = beyond.sum(1)
        one = many == 1
        loc = np.argmax(beyond, axis=1)
        nxt[one] = nb[one, loc[one]]
        multi = np.flatnonzero(many > 1)
        if len(multi):
            P = dt.points[dt.tets[multi]]
            cc = dt.circumcenters[multi]
            dist = np.full((len(multi), 4), np.inf)
            for i in range(4):
                f = P[:, TET_FACES[i]]
                q = closest_points_on_triangles(cc, f[:, 0], f[:, 1], f[:, 2])
                dist[:, i] = np.linalg.norm(cc - q, axis=1)
            dist[~beyond[multi]] = np.inf
            best = np.argmin(dist, axis=1)
            # ties go to the lowest triangle id
            tri = dt.tet_triangles[multi]
            tied = np.flatnonzero((dist == dist.min(1, keepdims=True)).sum(1) > 1)
            for r in tied.tolist():
                cand = np.flatnonzero(dist[r] == dist[r].min())
                best[r] = cand[np.argmin(tri[r, cand])]
            nxt[multi] = nb[multi, best]
        self.next = nxt  # tet id, itself for a maximum, INFINITY for unbounded
        # sink of every tet by pointer jumping; infinity maps to T
        tgt = np.where(nxt < 0, T, nxt)
        tgt = np.append(tgt, T)
        while True:
            nt = tgt[tgt]
            if np.array_equal(nt, tgt):
                break
            tgt = nt
        sink = tgt[:T]
        self.sink = np.where(sink == T, INFINITY, sink)

    def flow_path(self, t: int) -> list[int]:
        """Tetrahedra visited from ``t`` until a maximum (or ``-1`` at infinity)."""
        path = [int(t)]
        while True:
            n = int(self.next[path[-1]])
            if n == path[-1]:
                return path
            path.append(n)
            if n < 0:
                return path

    # -- critical points ---------------------------------------------

    def counts(self) -> tuple[int, int, int, int]:
        return (self.dt.n_points, int(self.gabriel.sum()),
                int(self.critical_triangle.sum()), int(self.is_max.sum()))

    def critical_points(self, indices=(0, 1, 2, 3)) -> list[CriticalPoint]:
        dt = self.dt
        out = []
        if 0 in indices:
            out += [CriticalPoint(0, tuple(p), 0.0, i) for i, p in enumerate(dt.points.tolist())]
        if 1 in indices:
            for e in np.flatnonzero(self.gabriel).tolist():
                a, b = dt.points[dt.edges[e]]
                out.append(CriticalPoint(1, tuple(((a + b) / 2).tolist()),
                                         float(np.linalg.norm(b - a) / 2), e))
        if 2 in indices:
            for k in np.flatnonzero(self.critical_triangle).tolist():
                out.append(CriticalPoint(2, tuple(self.tri_cc[k].tolist()),
                                         float(self.tri_R[k]), k))
        if 3 in indices:
            for t in np.flatnonzero(self.is_max).tolist():
                out.append(CriticalPoint(3, tuple(dt.circumcenters[t].tolist()),
                                         float(dt.circumradii[t]), t))
        out.sort(key=lambda c: (c.index, c.h_value, c.simplex))
        return out

    # -- manifolds ----------------------------------------------------

    def stable_manifold(self, cp: CriticalPoint) -> Manifold:
        if cp.index != 3:
            raise UnsupportedIndexError(f"stable manifolds need an index-3 point, got {cp.index}")
        tets = np.flatnonzero(self.sink == cp.simplex)
        return Manifold("stable", cp, 3, tets, ends=(cp.simplex,))

    def triangle_flow(self, k: int) -> tuple[list[int], list[int]]:
        """Flow paths leaving the Voronoi edge of triangle ``k`` in both directions."""
        sides = []
        for t in self.dt.triangle_tets[k].tolist():
            sides.append(self.flow_path(t) if t >= 0 else [INFINITY])
        return sides[0], sides[1]

    def unstable_manifold(self, cp: CriticalPoint, within=None) -> Manifold:
        """Unstable manifold of an index-1 or index-2 saddle.

        For index 2 this is the polyline from the triangle's circumcenter
        through the Voronoi vertices of both adjacent tetrahedra, following
        the flow to maxima or infinity. For index 1 it is the set of Voronoi
        facets reached from the saddle's facet: flow leaving a facet through
        the Voronoi edge of triangle ``s`` enters the facet of the edge of
        ``s`` beyond which the circumcenter of ``s`` lies. ``within`` (a
        boolean mask over edges) optionally confines the growth.
        """
        if cp.index == 2:
            left, right = self.triangle_flow(cp.simplex)
            pts = [self._vpos(t) for t in left[::-1]] + [self.tri_cc[cp.simplex]] + \
                  [self._vpos(t) for t in right]
            tets = np.array(sorted({t for t in left + right if t >= 0}), dtype=np.int64)
            return Manifold("unstable", cp, 1, tets, polyline=np.array(pts),
                            ends=(left[-1], right[-1]))
        if cp.index != 1:
            raise UnsupportedIndexError(
                f"unstable manifolds are defined for index 1 and 2, got {cp.index}")
        facets = self.grow_facets(cp.simplex, within)
        tets = set()
        ends = set()
        for e in facets:
            for t in self.dt.edge_tets(e).tolist():
                tets.add(t)
                ends.add(int(self.sink[t]))
        return Manifold("unstable", cp, 2, np.array(sorted(tets), dtype=np.int64),
                        facets=np.array(sorted(facets), dtype=np.int64),
                        ends=tuple(sorted(ends)))

    def _vpos(self, t):
        return self.dt.circumcenters[t] if t >= 0 else np.full(3, np.nan)

    def grow_facets(self, e0: int, within=None) -> list[int]:
        dt = self.dt
        seen = {int(e0)}
        queue = [int(e0)]
        edge_index = self._edge_lookup()
        while queue:
            e = queue.pop()
            a, b = dt.edges[e].tolist()
            for k in self._edge_triangles(e):
                tri = dt.triangles[k].tolist()
                for j in range(3):
                    if self.tri_side[k, j] >= 0:
                        continue
                    g = tuple(sorted(tri[m] for m in range(3) if m != j))
                    if g == (a, b):
                        continue
                    gid = edge_index[g]
                    if gid in seen or (within is not None and not within[gid]):
                        continue
                    seen.add(gid)
                    queue.append(gid)
        return sorted(seen)

    def _edge_lookup(self):
        if not hasattr(self, "_edge_idx"):
            self._edge_idx = {tuple(e): i for i, e in enumerate(self.dt.edges.tolist())}
        return self._edge_idx

    def _edge_triangles(self, e: int) -> list[int]:
        dt = self.dt
        a, b = dt.edges[e]
        out = set()
        for t in dt.edge_tets(e).tolist():
            tv = dt.tets[t]
            for i in range(4):
                if tv[i] != a and tv[i] != b:
                    out.add(int(dt.tet_triangles[t, i]))
        return sorted(out)


def extract_critical_points(dt: DelaunayComplex, vd: VoronoiDiagram | None = None):
    """Sorted critical points of ``h_P`` (by index, then value)."""
    return FlowComplex(dt, vd).critical_points()


def classify_side(points, mesh, field_=None):
    """Set ``side`` on each critical point from the mesh's signed distance."""
    from .distance import DistanceField

    df = field_ or DistanceField(mesh)
    if not points:
        return []
    loc = np.array([c.location for c in points], dtype=np.float64)
    d = df.signed(loc)
    return [replace(c, side="interior" if s < 0 else "exterior",
                    near_boundary=bool(abs(s) < BOUNDARY_TOL))
            for c, s in zip(points, d.tolist())]


def write_critical_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y", "z", "h_value", "side"])
        for c in points:
            w.writerow([c.index, *(f"{x:.6g}" for x in c.location), f"{c.h_value:.6g}",
                        c.side or ""])
