"""Delaunay tetrahedralisation of a point sample and its Voronoi dual."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mesh import PointSample

# tetrahedron edges as local vertex pairs, and the two local vertices off each edge
TET_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
TET_EDGE_OPPOSITE = np.array([[2, 3], [1, 3], [1, 2], [0, 3], [0, 2], [0, 1]])
TET_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
# the same faces wound outwards for a positively oriented tet
TET_FACES_OUT = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])

FLAT_TOL = 1e-12


class DegenerateError(ValueError):
    """Input or simplex too degenerate for the requested construction."""


def circumsphere(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and radii of tetrahedra given as ``(T, 4, 3)`` corners."""
    a = P[:, 0]
    u, v, w = P[:, 1] - a, P[:, 2] - a, P[:, 3] - a
    vw, wu, uv = np.cross(v, w), np.cross(w, u), np.cross(u, v)
    den = 2.0 * np.einsum("ij,ij->i", u, vw)
    num = ((u * u).sum(1)[:, None] * vw + (v * v).sum(1)[:, None] * wu
           + (w * w).sum(1)[:, None] * uv)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = num / den[:, None]
    return a + off, np.linalg.norm(off, axis=1)


def _flatness(P: np.ndarray) -> np.ndarray:
    """Volume relative to the cube of the longest edge (0 for flat tets)."""
    a = P[:, 0]
    u, v, w = P[:, 1] - a, P[:, 2] - a, P[:, 3] - a
    vol = np.abs(np.einsum("ij,ij->i", u, np.cross(v, w))) / 6.0
    L = np.max([np.linalg.norm(P[:, i] - P[:, j], axis=1) for i, j in TET_EDGES], axis=0)
    return vol / L ** 3


def circumradius(tet_points) -> float:
    """Circumradius of one tetrahedron given its four corners."""
    P = np.asarray(tet_points, dtype=np.float64).reshape(1, 4, 3)
    if not _flatness(P)[0] > FLAT_TOL:
        raise DegenerateError("flat tetrahedron has no finite circumsphere")
    return float(circumsphere(P)[1][0])


def triangle_circumcenters(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and radii of triangles given as ``(K, 3, 3)`` corners."""
    a = P[:, 0]
    u, v = P[:, 1] - a, P[:, 2] - a
    n = np.cross(u, v)
    nn = (n * n).sum(1)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (np.cross(n, u) * (v * v).sum(1)[:, None]
               + np.cross(v, n) * (u * u).sum(1)[:, None]) / (2 * nn[:, None])
    return a + off, np.linalg.norm(off, axis=1)


def _unique_rows(rows: np.ndarray, n: int):
    """``np.unique(rows, axis=0, return_inverse=True)`` for small index rows."""
    key = np.zeros(len(rows), dtype=np.int64)
    for j in range(rows.shape[1]):
        key = key * n + rows[:, j]
    ukey, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return rows[first], inv.ravel()


@dataclass(eq=False)
class DelaunayComplex:
    """Finite part of a Delaunay tetrahedralisation.

    ``tets[t]`` has positive signed volume; ``neighbors[t, i]`` is the
    tetrahedron across the face opposite vertex ``i`` or ``-1`` on the hull.
    ``triangles``/``edges`` are sorted index tuples with incidence maps
    ``tet_triangles[t, i]`` (face opposite vertex ``i``), ``triangle_tets``
    (two entries, ``-1`` for the unbounded side) and ``tet_edges``.
    """

    points: np.ndarray
    tets: np.ndarray
    neighbors: np.ndarray
    seed: int = 0
    exact_calls: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        T = len(self.tets)
        P = self.points[self.tets]
        self.circumcenters, self.circumradii = circumsphere(P)
        self.flat = _flatness(P) <= FLAT_TOL
        self.circumradii[self.flat] = np.inf

        faces = np.sort(self.tets[:, TET_FACES].reshape(-1, 3), axis=1)
        self.triangles, inv = _unique_rows(faces, len(self.points))
        self.tet_triangles = inv.reshape(T, 4)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        owner = order // 4
        k = inv[order]
        first = np.r_[True, k[1:] != k[:-1]]
        tt = np.full((len(self.triangles), 2), -1, dtype=np.int64)
        tt[k[first], 0] = owner[first]
        tt[k[~first], 1] = owner[~first]
        self.triangle_tets = tt

        ed = np.sort(self.tets[:, TET_EDGES].reshape(-1, 2), axis=1)
        self.edges, einv = _unique_rows(ed, len(self.points))
        self.tet_edges = einv.reshape(T, 6)

    # -- sizes -----------------------------------------------------------

    @property
    def n_points(self):
        return len(self.points)

    @property
    def n_tets(self):
        return len(self.tets)

    def hull_triangles(self) -> np.ndarray:
        return np.flatnonzero(self.triangle_tets[:, 1] < 0)

    def tet_volumes(self) -> np.ndarray:
        P = self.points[self.tets]
        a = P[:, 0]
        return np.einsum("ij,ij->i", P[:, 1] - a, np.cross(P[:, 2] - a, P[:, 3] - a)) / 6.0

    # -- incidences (lazy) -------------------------------------------

    def edge_tets(self, e: int) -> np.ndarray:
        if "edge_ptr" not in self._cache:
            flat = self.tet_edges.ravel()
            order = np.argsort(flat, kind="stable")
            ptr = np.searchsorted(flat[order], np.arange(len(self.edges) + 1))
            self._cache["edge_ptr"] = ptr
            self._cache["edge_tet"] = order // 6
        ptr = self._cache["edge_ptr"]
        return self._cache["edge_tet"][ptr[e]:ptr[e + 1]]

    def edge_ring(self, e: int) -> tuple[list[int], bool]:
        """Tetrahedra around edge ``e`` in cyclic order; flag open rings.

        An open ring (edge on the hull) is returned from one hull tet to the
        other.
        """
        a, b = self.edges[e]
        start = int(self.edge_tets(e)[0])

        tv = self.tets[start].tolist()
        i0, i1 = [i for i in range(4) if tv[i] != a and tv[i] != b]
        fwd, open_ = self._walk_from(start, i0, a, b)
        if not open_:
            return fwd, False
        bwd, _ = self._walk_from(start, i1, a, b)
        return bwd[::-1][:-1] + fwd, True

    def _walk_from(self, start, first_local, a, b):
        seq = [start]
        t, cross = start, first_local
        while True:
            u = int(self.neighbors[t, cross])
            if u < 0:
                return seq, True
            if u == start:
                return seq, False
            seq.append(u)
            # in u, leave across the face opposite the vertex shared with t's crossing face
            shared = self.tets[t, [i for i in range(4) if i != cross]]
            tv = self.tets[u].tolist()
            nxt = [i for i in range(4) if tv[i] not in (a, b) and tv[i] in shared]
            t, cross = u, nxt[0]

    def simplices_dump(self) -> str:
        """Sorted ASCII list of all simplices, one per line, for golden tests."""
        lines = [f"0 {i}" for i in range(self.n_points)]
        lines += ["1 " + " ".join(map(str, e)) for e in self.edges.tolist()]
        lines += ["2 " + " ".join(map(str, t)) for t in self.triangles.tolist()]
        lines += ["3 " + " ".join(map(str, sorted(t))) for t in sorted(
            sorted(t) for t in self.tets.tolist())]
        return "\n".join(lines) + "\n"


def build_delaunay(sample, seed: int = 0, order=None) -> DelaunayComplex:
    """Delaunay tetrahedralisation with exact, seeded-perturbation predicates.

    Points are inserted in input order (or ``order``); the seed fixes the
    perturbation ranks used to break cospherical ties.
    """
    if not isinstance(sample, PointSample):
        sample = PointSample(sample)
    pts = sample.points
    n = len(pts)
    ranks = np.random.default_rng(seed).permutation(n).astype(np.int64)
    order = np.arange(n, dtype=np.int64) if order is None else np.asarray(order, np.int64)
    try:
        tv, tn, calls = kernels.delaunay_build(pts, order, ranks)
    except ValueError as exc:
        raise DegenerateError(str(exc)) from None
    finite = (tv >= 0).all(axis=1)
    idx = np.flatnonzero(finite)
    remap = np.full(len(tv), -1, dtype=np.int64)
    remap[idx] = np.arange(len(idx))
    # the kernel stores tets positive in orient3d's sense (negative signed
    # volume); swap two corners so every stored tet has positive volume
    tets = tv[idx][:, [1, 0, 2, 3]]
    nb = remap[tn[idx]][:, [1, 0, 2, 3]]
    return DelaunayComplex(pts, tets, nb, seed=seed, exact_calls=int(calls))


# ---------------------------------------------------------------------------


@dataclass(eq=False)
class VoronoiDiagram:
    """Voronoi diagram dual to a :class:`DelaunayComplex`.

    Voronoi vertex ``k`` is dual to tetrahedron ``k``, Voronoi edge ``k`` to
    triangle ``k``, facet ``k`` to edge ``k`` and cell ``k`` to point ``k``,
    so every dual map is the identity on indices.
    """

    delaunay: DelaunayComplex
    vertices: np.ndarray
    edge_vertices: np.ndarray
    edge_unbounded: np.ndarray
    edge_direction: np.ndarray
    facet_unbounded: np.ndarray
    cell_unbounded: np.ndarray

    def dual_of_vertex(self, k):
        return ("tet", k)

    def dual_of_edge(self, k):
        return ("triangle", k)

    def dual_of_facet(self, k):
        return ("edge", k)

    def dual_of_cell(self, k):
        return ("point", k)

    def facet(self, e: int) -> tuple[list[int], bool]:
        """Voronoi vertices (tet ids) bounding facet ``e`` in cyclic order."""
        return self.delaunay.edge_ring(e)


def voronoi_dual(dt: DelaunayComplex) -> VoronoiDiagram:
    hull = dt.triangle_tets[:, 1] < 0
    direction = np.zeros((len(dt.triangles), 3))
    if hull.any():
        # outward normal of each hull face, pointing away from its tet
        tri = dt.points[dt.triangles[hull]]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        t = dt.triangle_tets[hull, 0]
        cen = dt.points[dt.tets[t]].mean(1)
        flip = np.einsum("ij,ij->i", n, cen - tri[:, 0]) > 0
        n[flip] *= -1
        direction[hull] = n / np.linalg.norm(n, axis=1, keepdims=True)
    hull_tris = dt.triangles[hull]
    hull_pts = np.zeros(dt.n_points, dtype=bool)
    hull_pts[hull_tris.ravel()] = True
    he = np.sort(np.concatenate([hull_tris[:, [0, 1]], hull_tris[:, [1, 2]],
                                 hull_tris[:, [0, 2]]]), axis=1)
    facet_unb = np.zeros(len(dt.edges), dtype=bool)
    if len(he):
        key = dt.edges[:, 0] * dt.n_points + dt.edges[:, 1]
        facet_unb = np.isin(key, he[:, 0] * dt.n_points + he[:, 1])
    return VoronoiDiagram(dt, dt.circumcenters, dt.triangle_tets.copy(), hull,
                          direction, facet_unb, hull_pts)

