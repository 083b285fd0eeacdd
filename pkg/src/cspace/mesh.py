"""Triangle meshes, point samples, bounding domains and ball sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

DUPLICATE_TOL = 1e-9


class MeshError(ValueError):
    """Malformed or topologically invalid mesh input."""


class Label(IntEnum):
    SURFACE = 0
    MOUTH = 1
    INTERIOR_WALL = 2
    THIN = 3
    CONTACT = 4
    POCKET_INTERIOR = 5
    TUNNEL_INTERIOR = 6


@dataclass(frozen=True)
class MeshStats:
    components: int
    euler_char: int
    genus: int | None
    closed: bool
    oriented: bool

    def as_tuple(self):
        return (self.components, self.euler_char, self.genus, self.closed,
                self.oriented)


@dataclass(eq=False)
class TriangleMesh:
    """Triangulated surface with consistent winding.

    ``vertices`` is ``(n, 3)`` float64 in angstroms, ``triangles`` is
    ``(m, 3)`` int64. ``labels`` optionally tags each triangle with a
    :class:`Label`.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    labels: np.ndarray | None = None
    permissive: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        n = len(self.vertices)
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= n):
            bad = int(np.argmax((self.triangles < 0).any(1) | (self.triangles >= n).any(1)))
            raise MeshError(
                f"triangle {bad} references vertex {self.triangles[bad].tolist()} "
                f"out of range for {n} vertices")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.triangles),):
                raise MeshError("labels must have one entry per triangle")
        if not self.permissive and len(self.triangles):
            area = self.triangle_areas()
            if (area <= 0).any():
                raise MeshError(f"degenerate (zero-area) triangle {int(np.argmin(area))}")

    # -- basic geometry ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """``(m, 3, 3)`` array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(0), self.vertices.max(0)

    # -- combinatorics -------------------------------------------------

    def directed_edges(self) -> np.ndarray:
        t = self.triangles
        return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted per row."""
        if "edges" not in self._cache:
            e = np.sort(self.directed_edges(), axis=1)
            self._cache["edges"] = np.unique(e, axis=0)
        return self._cache["edges"]

    def edge_report(self):
        """Return ``(edges, counts, oriented_ok)`` for each undirected edge."""
        d = self.directed_edges()
        key = np.sort(d, axis=1)
        uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        forward = (d[:, 0] < d[:, 1]).astype(np.int64)
        fwd = np.bincount(inv, weights=forward, minlength=len(uniq))
        oriented = (counts == 2) & (fwd == 1)
        return uniq, counts, oriented

    def check_manifold(self) -> None:
        """Raise :class:`MeshError` naming the first non-manifold edge."""
        uniq, counts, _ = self.edge_report()
        bad = np.flatnonzero(counts != 2)
        if len(bad):
            e = uniq[bad[0]]
            raise MeshError(
                f"non-manifold edge {int(bad[0])} ({int(e[0])}, {int(e[1])}) "
                f"has {int(counts[bad[0]])} incident triangles")

    @property
    def closed(self) -> bool:
        if "closed" not in self._cache:
            _, counts, _ = self.edge_report()
            self._cache["closed"] = bool(len(counts)) and bool((counts == 2).all())
        return self._cache["closed"]

    @property
    def balanced(self) -> bool:
        """Every edge is used equally often in both directions.

        This is the condition for a closed oriented surface in the sense of
        the divergence theorem; it also admits surfaces pinched along edges.
        """
        if "balanced" not in self._cache:
            _, counts, _ = self.edge_report()
            d = self.directed_edges()
            key = np.sort(d, axis=1)
            _, inv = np.unique(key, axis=0, return_inverse=True)
            fwd = np.bincount(inv.ravel(), weights=(d[:, 0] < d[:, 1]), minlength=len(counts))
            self._cache["balanced"] = bool(len(counts)) and bool((2 * fwd == counts).all())
        return self._cache["balanced"]

    @property
    def oriented(self) -> bool:
        if "oriented" not in self._cache:
            _, counts, ok = self.edge_report()
            self._cache["oriented"] = bool(ok[counts == 2].all()) if len(counts) else True
        return self._cache["oriented"]

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return int(len(used) - len(self.edges()) + len(self.triangles))

    def component_labels(self) -> tuple[int, np.ndarray]:
        """Connected components over referenced vertices; labels per triangle."""
        n = self.n_vertices
        e = self.edges()
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        _, lab = connected_components(g, directed=False)
        used = np.unique(self.triangles)
        remap = {v: i for i, v in enumerate(np.unique(lab[used]))}
        tri_lab = np.array([remap[x] for x in lab[self.triangles[:, 0]]], dtype=np.int64)
        return len(remap), tri_lab

    def stats(self) -> MeshStats:
        comps, _ = self.component_labels() if len(self.triangles) else (0, None)
        chi = self.euler_characteristic()
        closed, oriented = self.closed, self.oriented
        genus = None
        if closed and oriented:
            genus = (2 * comps - chi) // 2
        return MeshStats(comps, chi, genus, closed, oriented)

    # -- derived meshes ------------------------------------------------

    def flipped(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.triangles[:, ::-1], self.labels,
                            permissive=True)

    def compacted(self) -> "TriangleMesh":
        """Drop unreferenced vertices."""
        used, inv = np.unique(self.triangles, return_inverse=True)
        return TriangleMesh(self.vertices[used], inv.reshape(-1, 3), self.labels,
                            permissive=self.permissive)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, float), self.triangles,
                            self.labels, permissive=self.permissive)

    def with_labels(self, labels) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.triangles, labels, permissive=True)


def mesh_stats(mesh: TriangleMesh) -> MeshStats:
    return mesh.stats()


def merge_meshes(meshes) -> TriangleMesh:
    verts, tris, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += m.n_vertices
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris), permissive=True)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSample:
    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if len(pts) < 4:
            raise ValueError(f"point sample needs at least 4 points, got {len(pts)}")
        pairs = cKDTree(pts).query_pairs(DUPLICATE_TOL, output_type="ndarray")
        if len(pairs):
            i, j = pairs[0]
            raise ValueError(f"duplicate points {int(i)} and {int(j)} within {DUPLICATE_TOL} A")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class BoundingDomain:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def around(cls, points: np.ndarray, margin: float = 0.1) -> "BoundingDomain":
        lo, hi = points.min(0), points.max(0)
        pad = margin * float(np.linalg.norm(hi - lo)) or 1.0
        return cls(lo - pad, hi + pad)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.all((x > self.lo) & (x < self.hi), axis=-1)


# Van der Waals radii in angstroms keyed by element symbol.
ELEMENT_RADII = {"C": 1.7, "N": 1.55, "O": 1.52, "S": 1.8, "H": 1.2, "P": 1.8}
DEFAULT_RADIUS = 1.5


@dataclass(frozen=True)
class BallSet:
    centers: np.ndarray
    radii: np.ndarray
    elements: tuple[str, ...] = ()
    chains: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=np.float64).reshape(-1, 3)
        r = np.asarray(self.radii, dtype=np.float64).ravel()
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)
        if len(c) != len(r):
            raise ValueError("centers and radii differ in length")
        if (r <= 0).any():
            raise ValueError("ball radii must be positive")
        if not self.elements:
            object.__setattr__(self, "elements", ("",) * len(c))
        if not self.chains:
            object.__setattr__(self, "chains", ("",) * len(c))

    @classmethod
    def from_elements(cls, centers, elements, chains=()):
        radii = [ELEMENT_RADII.get(e.strip().upper(), DEFAULT_RADIUS) for e in elements]
        return cls(centers, radii, tuple(elements), tuple(chains))

    def __len__(self):
        return len(self.radii)

    def by_chain(self) -> dict[str, "BallSet"]:
        out = {}
        chains = np.array(self.chains)
        for ch in dict.fromkeys(self.chains):
            idx = np.flatnonzero(chains == ch)
            out[ch] = BallSet(self.centers[idx], self.radii[idx],
                              tuple(self.elements[i] for i in idx),
                              tuple(self.chains[i] for i in idx))
        return out
