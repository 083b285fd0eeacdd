"""Complementary-space segmentation into pockets, tunnels and voids.

The complementary space is modelled by the Delaunay tetrahedra of the
surface sample that lie outside the shape. Tetrahedra are labelled by a
ray-parity test at their centroid. Outside tetrahedra that share facets
form the features; a feature's *mouths* are its facets on the convex hull
of the sample, i.e. shared with the unbounded region, grouped into
edge-connected patches. Features with one mouth are pockets, two or more
tunnels, none voids.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .delaunay import TET_FACES_OUT, DelaunayComplex, build_delaunay, voronoi_dual
from .distance import DistanceField
from .flow import FlowComplex
from .mesh import Label, PointSample, TriangleMesh
from .report import mesh_hash

DEFAULT_FLOOR = 1.5  # cubic angstroms, about one atom
UNDERSAMPLED_RATE = 0.01

POCKET, TUNNEL, VOID = "pocket", "tunnel", "void"


class UndersampledError(ValueError):
    """The sample cannot separate the inside of the shape from the outside."""


@dataclass(eq=False)
class Feature:
    id: int
    kind: str
    tets: np.ndarray
    mouths: list
    walls: np.ndarray
    volume: float
    centroid: np.ndarray
    complex: "SpaceModel" = field(repr=False, default=None)

    @property
    def mouth_count(self) -> int:
        return len(self.mouths)

    @property
    def cell_count(self) -> int:
        return len(self.tets)

    def boundary_triangles(self) -> tuple[np.ndarray, np.ndarray]:
        """Oriented boundary triangles (vertex ids) and their labels."""
        return self.complex.feature_boundary(self)

    def boundary_mesh(self) -> TriangleMesh:
        return tag_feature_mesh(self)

    def summary(self) -> dict:
        return {"id": self.id, "kind": self.kind, "mouth_count": self.mouth_count,
                "cell_count": self.cell_count, "centroid": self.centroid.tolist()}


@dataclass(eq=False)
class FeatureSet:
    features: list
    method: str = "flow-complex"
    input_hash: str = ""
    seed: int = 0
    model: "SpaceModel" = field(default=None, repr=False)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def kinds(self) -> dict:
        out = {POCKET: 0, TUNNEL: 0, VOID: 0}
        for f in self.features:
            out[f.kind] += 1
        return out

    def to_dict(self) -> dict:
        return {"method": self.method, "seed": self.seed, "input_hash": self.input_hash,
                "features": [f.summary() for f in self.features]}


class SpaceModel:
    """Delaunay model of a surface and its inside/outside labelling."""

    def __init__(self, mesh: TriangleMesh, sample=None, seed: int = 0,
                 check_sampling: bool = True, field_: DistanceField | None = None):
        if not mesh.closed:
            from .distance import OpenMeshError
            raise OpenMeshError("complementary space needs a closed mesh")
        self.mesh = mesh
        self.seed = seed
        pts = mesh.compacted().vertices if sample is None else np.asarray(sample, float)
        self.sample = PointSample(pts)
        self.field = field_ or DistanceField(mesh)
        self.dt: DelaunayComplex = build_delaunay(self.sample, seed=seed)
        self.vd = voronoi_dual(self.dt)
        centroids = self.dt.points[self.dt.tets].mean(axis=1)
        self.inside = self.field.inside(centroids)
        self.disagreement = self._disagreement()
        if check_sampling and self.disagreement > UNDERSAMPLED_RATE:
            raise UndersampledError(
                f"the surface cuts through {100 * self.disagreement:.1f}% of the Delaunay "
                "volume; the surface sample is too sparse")
        self._flow = None

    @property
    def flow(self) -> FlowComplex:
        if self._flow is None:
            self._flow = FlowComplex(self.dt, self.vd)
        return self._flow

    def _disagreement(self) -> float:
        """Volume fraction of tets that the surface cuts through.

        A tet is probed at four interior points, each pulled 40% of the way
        from the centroid towards one vertex. If any probe's inside/outside
        label differs from the centroid's, the surface crosses the tet and
        its label is unreliable. A dense sample reproduces the surface as
        Delaunay facets, so hardly any volume straddles it. Large tets
        between flat faces, whose circumcenters can lie far away, do not
        count against the sample.
        """
        dt = self.dt
        P = dt.points[dt.tets]
        c = P.mean(axis=1)
        bad = np.zeros(dt.n_tets, dtype=bool)
        for i in range(4):
            bad |= self.field.inside(0.6 * c + 0.4 * P[:, i]) != self.inside
        vol = dt.tet_volumes()
        total = vol.sum()
        return float(vol[bad].sum() / total) if total > 0 else 0.0

    # -- segmentation ----------------------------------------------------

    def components(self) -> tuple[int, np.ndarray]:
        """Connected components (via shared facets) of outside tets."""
        dt = self.dt
        out = ~self.inside
        a = np.repeat(np.arange(dt.n_tets), 4)
        b = dt.neighbors.ravel()
        keep = (b >= 0) & out[a] & out[np.maximum(b, 0)]
        g = coo_matrix((np.ones(keep.sum()), (a[keep], b[keep])),
                       shape=(dt.n_tets, dt.n_tets))
        n, lab = connected_components(g, directed=False)
        lab = np.where(out, lab, -1)
        return n, lab

    def feature_boundary(self, feat: Feature):
        dt = self.dt
        tets = feat.tets
        member = np.zeros(dt.n_tets, dtype=bool)
        member[tets] = True
        nb = dt.neighbors[tets]
        bnd = (nb < 0) | ~member[np.maximum(nb, 0)]
        t_idx, f_idx = np.nonzero(bnd)
        tt = tets[t_idx]
        verts = dt.tets[tt]
        # combinatorial winding stays consistent even across flat tets
        tri = np.take_along_axis(verts, TET_FACES_OUT[f_idx], axis=1)
        labels = np.where(nb[t_idx, f_idx] < 0, int(Label.MOUTH), int(Label.INTERIOR_WALL))
        return tri, labels

    def features(self, floor: float = DEFAULT_FLOOR) -> FeatureSet:
        dt = self.dt
        n, lab = self.components()
        vol = dt.tet_volumes()
        feats = []
        for c in np.unique(lab[lab >= 0]).tolist():
            tets = np.flatnonzero(lab == c)
            v = float(vol[tets].sum())
            if v < floor:
                continue
            cen = (dt.points[dt.tets[tets]].mean(1) * vol[tets, None]).sum(0) / v
            feats.append((tets, v, cen))
        feats.sort(key=lambda f: (-round(f[1], 9), tuple(np.round(f[2], 9))))
        out = []
        for i, (tets, v, cen) in enumerate(feats):
            f = Feature(i, VOID, tets, [], np.zeros(0, np.int64), v, cen, self)
            mouths, walls = self._mouths_and_walls(tets)
            f.mouths, f.walls = mouths, walls
            f.kind = VOID if not mouths else (POCKET if len(mouths) == 1 else TUNNEL)
            out.append(f)
        return FeatureSet(out, "flow-complex", mesh_hash(self.mesh.vertices, self.mesh.triangles),
                          self.seed, self)

    def _mouths_and_walls(self, tets):
        dt = self.dt
        faces = dt.tet_triangles[tets]
        nb = dt.neighbors[tets]
        mouth = np.unique(faces[nb < 0])
        member = np.zeros(dt.n_tets, dtype=bool)
        member[tets] = True
        wall_mask = (nb >= 0) & ~member[np.maximum(nb, 0)]
        walls = np.unique(faces[wall_mask])
        return self._patches(mouth), walls

    def _patches(self, tris: np.ndarray) -> list:
        """Split triangle ids into edge-connected patches, ordered by smallest id."""
        if not len(tris):
            return []
        T = self.dt.triangles[tris]
        e = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [0, 2]]]), axis=1)
        owner = np.tile(np.arange(len(tris)), 3)
        key = e[:, 0] * self.dt.n_points + e[:, 1]
        order = np.argsort(key, kind="stable")
        k, o = key[order], owner[order]
        same = np.flatnonzero(k[1:] == k[:-1])
        g = coo_matrix((np.ones(len(same)), (o[same], o[same + 1])),
                       shape=(len(tris), len(tris)))
        n, lab = connected_components(g, directed=False)
        patches = [np.sort(tris[lab == i]) for i in range(n)]
        patches.sort(key=lambda p: int(p[0]))
        return patches


def compspace(mesh: TriangleMesh, sample=None, seed: int = 0, floor: float = DEFAULT_FLOOR,
              check_sampling: bool = True) -> FeatureSet:
    """Segment the complementary space of ``mesh`` into classified features."""
    return SpaceModel(mesh, sample, seed, check_sampling).features(floor)


def tag_feature_mesh(feature: Feature) -> TriangleMesh:
    """Closed boundary mesh of a feature, walls and mouths labelled."""
    tri, labels = feature.complex.feature_boundary(feature)
    P = feature.complex.dt.points
    used, inv = np.unique(tri, return_inverse=True)
    return TriangleMesh(P[used], inv.reshape(-1, 3), labels, permissive=True)


def tag_surface(model: SpaceModel, fs: FeatureSet) -> TriangleMesh:
    """The input mesh plus every feature's mouth triangles, for viewing."""
    verts = [model.mesh.vertices]
    tris = [model.mesh.triangles]
    labs = [np.full(model.mesh.n_triangles, int(Label.SURFACE))]
    off = model.mesh.n_vertices
    for f in fs:
        t, lab = model.feature_boundary(f)
        m = lab == int(Label.MOUTH)
        used, inv = np.unique(t[m], return_inverse=True)
        verts.append(model.dt.points[used])
        tris.append(inv.reshape(-1, 3) + off)
        labs.append(np.full(m.sum(), int(Label.MOUTH)))
        off += len(used)
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris), np.concatenate(labs),
                        permissive=True)


# ---------------------------------------------------------------------------


@dataclass
class TopologyDiff:
    matched: list
    missing: list
    extra: list

    @property
    def consistent(self) -> bool:
        return not self.missing and not self.extra

    def to_dict(self) -> dict:
        return {"consistent": self.consistent,
                "matched": [{"a": a, "b": b, "kind": k, "distance": d}
                            for a, b, k, d in self.matched],
                "missing": [{"id": i, "kind": k} for i, k in self.missing],
                "extra": [{"id": i, "kind": k} for i, k in self.extra]}


def compare_feature_sets(a: FeatureSet, b: FeatureSet, match_tol: float) -> TopologyDiff:
    """Greedy matching of same-kind features by centroid distance."""
    pairs = []
    for fa in a.features:
        for fb in b.features:
            if fa.kind != fb.kind:
                continue
            d = float(np.linalg.norm(np.asarray(fa.centroid) - np.asarray(fb.centroid)))
            if d <= match_tol:
                pairs.append((d, fa.id, fb.id, fa.kind))
    pairs.sort()
    used_a, used_b, matched = set(), set(), []
    for d, ia, ib, k in pairs:
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        matched.append((ia, ib, k, d))
    missing = [(f.id, f.kind) for f in a.features if f.id not in used_a]
    extra = [(f.id, f.kind) for f in b.features if f.id not in used_b]
    return TopologyDiff(matched, missing, extra)
