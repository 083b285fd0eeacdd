"""Thin walls on the interior medial axis and the tunnels they may hide.

A shape whose tunnel is sealed by a wall thinner than the imaging
resolution looks closed. Such walls show up on the interior medial axis as
places where ``h_P`` (half the local wall thickness) is small. The search
runs in five steps:

1. approximate the interior medial axis by Voronoi facets,
2. collect the index-1 and index-2 saddles of ``h_P`` lying on it,
3. follow their unstable manifolds (2- and 1-dimensional),
4. mark manifold Voronoi vertices with ``h_P < gamma`` as thin and group
   them into connected regions,
5. offer the stable manifolds of maxima inside a thin region as the
   geometry of the missing tunnel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .features import SpaceModel
from .flow import CriticalPoint, Manifold
from .mesh import Label, TriangleMesh

DEFAULT_ANGLE = 90.0  # degrees


@dataclass
class MedialAxisApprox:
    """Voronoi facets (Delaunay edge ids) approximating the interior medial axis.

    ``vertices`` are the Voronoi vertices (tet ids) of those facets and
    ``h`` their values of ``h_P`` (the tets' circumradii).
    """
    facets: np.ndarray
    vertices: np.ndarray
    h: np.ndarray
    angle: float
    mask: np.ndarray = field(repr=False, default=None)


@dataclass
class ThinRegion:
    parent: str  # "U1" or "U2"
    cells: np.ndarray  # Voronoi vertices (tet ids), all with h_P < gamma
    gamma: float
    centroid: np.ndarray
    h: np.ndarray = field(repr=False, default=None)
    suggested_tunnel: Manifold | None = field(repr=False, default=None)

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def to_dict(self) -> dict:
        return {"parent": self.parent, "gamma_A": self.gamma, "cell_count": self.cell_count,
                "centroid": self.centroid.tolist(),
                "has_tunnel_suggestion": self.suggested_tunnel is not None}


def _interior_vertices(model: SpaceModel) -> np.ndarray:
    """Tets whose circumcenter lies strictly inside the shape."""
    if not hasattr(model, "_cc_inside"):
        dt = model.dt
        ok = np.isfinite(dt.circumradii)
        inside = np.zeros(dt.n_tets, dtype=bool)
        inside[ok] = model.field.signed(dt.circumcenters[ok]) < 0
        model._cc_inside = inside
    return model._cc_inside


def interior_medial_axis(model: SpaceModel, angle: float = DEFAULT_ANGLE) -> MedialAxisApprox:
    """Voronoi facets on the interior medial axis.

    A facet (dual to Delaunay edge ``pq``) is kept when it is bounded, all
    of its Voronoi vertices lie strictly inside the shape, and ``pq``
    subtends at least ``angle`` degrees at every one of those vertices; that
    is, ``p`` and ``q`` sit on opposite sheets of the surface rather than
    next to each other on one sheet.
    """
    dt = model.dt
    inside = _interior_vertices(model)
    E = dt.edges
    t = np.repeat(np.arange(dt.n_tets), 6)
    e = dt.tet_edges.ravel()
    v = dt.circumcenters[t]
    with np.errstate(invalid="ignore"):
        a = dt.points[E[e, 0]] - v
        b = dt.points[E[e, 1]] - v
        cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) *
                                             np.linalg.norm(b, axis=1))
    cos = np.where(np.isfinite(cos), cos, 1.0)
    worst = np.full(len(E), -1.0)
    np.maximum.at(worst, e, cos)
    all_in = np.ones(len(E), dtype=bool)
    np.logical_and.at(all_in, e, inside[t])
    bounded = ~model.vd.facet_unbounded
    mask = bounded & all_in & (worst <= np.cos(np.radians(angle)) + 1e-12)
    facets = np.flatnonzero(mask)
    verts = np.unique(t[mask[e]])
    return MedialAxisApprox(facets, verts, dt.circumradii[verts], float(angle), mask)


def axis_saddles(model: SpaceModel, axis: MedialAxisApprox) -> tuple[list, list]:
    """Interior index-1 and index-2 saddles lying on the axis."""
    dt = model.dt
    fc = model.flow
    c1, c2 = [], []
    for cp in fc.critical_points((1, 2)):
        if cp.index == 1:
            on = axis.mask[cp.simplex]
        else:
            tri = dt.triangles[cp.simplex]
            on = any(axis.mask[_edge_id(fc, tri[i], tri[j])]
                     for i, j in ((0, 1), (1, 2), (0, 2)))
        if on:
            (c1 if cp.index == 1 else c2).append(cp)
    inside = []
    for group in (c1, c2):
        if group:
            loc = np.array([cp.location for cp in group])
            keep = model.field.signed(loc) < 0
            group = [cp for cp, k in zip(group, keep) if k]
        inside.append(group)
    return inside[0], inside[1]


def _edge_id(fc, a, b) -> int:
    return fc._edge_lookup()[(int(min(a, b)), int(max(a, b)))]


def detect_thin_regions(model: SpaceModel, gamma: float, axis: MedialAxisApprox | None = None,
                        suggest: bool = True) -> list[ThinRegion]:
    """Connected groups of unstable-manifold Voronoi vertices with ``h_P < gamma``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    axis = axis or interior_medial_axis(model)
    dt = model.dt
    fc = model.flow
    R = dt.circumradii
    c1, c2 = axis_saddles(model, axis)
    # h_P grows along the flow, so a manifold can only be thin near its saddle:
    # saddles at or above gamma are skipped and growth stops at facets whose
    # lowest vertex is already at or above gamma
    low = np.full(len(dt.edges), np.inf)
    t = np.repeat(np.arange(dt.n_tets), 6)
    np.minimum.at(low, dt.tet_edges.ravel(), R[t])
    within = axis.mask & (low < gamma)
    parent = {}
    for cp in c1:
        if cp.h_value >= gamma:
            continue
        man = fc.unstable_manifold(cp, within=within)
        for v in man.tets[R[man.tets] < gamma].tolist():
            parent[v] = "U1"
    for cp in c2:
        if cp.h_value >= gamma:
            continue
        man = fc.unstable_manifold(cp)
        for v in man.tets[R[man.tets] < gamma].tolist():
            parent.setdefault(v, "U2")
    if not parent:
        return []
    cells = np.array(sorted(parent), dtype=np.int64)
    regions = []
    for group in _components(dt, cells):
        kinds = {parent[v] for v in group.tolist()}
        reg = ThinRegion("U1" if "U1" in kinds else "U2", group, float(gamma),
                         dt.circumcenters[group].mean(axis=0), R[group])
        if suggest:
            reg.suggested_tunnel = missing_tunnel_geometry(model, reg)
        regions.append(reg)
    regions.sort(key=lambda r: (-r.cell_count, tuple(np.round(r.centroid, 9))))
    return regions


def _components(dt, cells: np.ndarray) -> list[np.ndarray]:
    """Split Voronoi vertices into groups pinching shared sample points.

    Two thin cells belong to the same wall when their tets share a vertex,
    i.e. both Voronoi vertices are nearest to the same surface sample point.
    This joins cells across Voronoi edges and medial facets alike.
    """
    n = len(cells)
    verts = dt.tets[cells].ravel()
    rows = np.repeat(np.arange(n), 4)
    g = coo_matrix((np.ones(len(rows)), (rows, n + verts)), shape=(n + dt.n_points,) * 2)
    _, lab = connected_components(g, directed=False)
    lab = lab[:n]
    _, lab = np.unique(lab, return_inverse=True)
    return [cells[lab == i] for i in range(lab.max() + 1)]


def missing_tunnel_geometry(model: SpaceModel, thin: ThinRegion) -> Manifold | None:
    """Union of the stable manifolds of interior maxima inside a thin region.

    Returns ``None`` when the region holds no interior maximum.
    """
    if thin is None or not len(thin.cells):
        raise ValueError("missing-tunnel geometry needs a non-empty thin region")
    fc = model.flow
    inside = _interior_vertices(model)
    cells = thin.cells
    maxima = cells[fc.is_max[cells] & inside[cells]]
    if not len(maxima):
        return None
    tets = np.flatnonzero(np.isin(fc.sink, maxima))
    dt = model.dt
    top = int(maxima[np.argmax(dt.circumradii[maxima])])
    src = CriticalPoint(3, tuple(dt.circumcenters[top].tolist()), float(dt.circumradii[top]), top)
    return Manifold("stable", src, 3, tets, ends=tuple(int(m) for m in maxima))


def tunnel_mesh(model: SpaceModel, tunnel: Manifold) -> TriangleMesh:
    """Boundary triangles of a union of tets, labelled as a tunnel interior."""
    dt = model.dt
    member = np.zeros(dt.n_tets, dtype=bool)
    member[tunnel.tets] = True
    from .delaunay import TET_FACES_OUT
    nb = dt.neighbors[tunnel.tets]
    bnd = (nb < 0) | ~member[np.maximum(nb, 0)]
    ti, fi = np.nonzero(bnd)
    tri = np.take_along_axis(dt.tets[tunnel.tets[ti]], TET_FACES_OUT[fi], axis=1)
    used, inv = np.unique(tri, return_inverse=True)
    labels = np.full(len(tri), int(Label.TUNNEL_INTERIOR))
    return TriangleMesh(dt.points[used], inv.reshape(-1, 3), labels, permissive=True)


def tag_thin(model: SpaceModel, regions: list[ThinRegion]) -> TriangleMesh:
    """The input mesh with triangles touching thin regions labelled thin."""
    mesh = model.mesh
    labels = np.full(mesh.n_triangles, int(Label.SURFACE))
    if regions:
        cells = np.concatenate([r.cells for r in regions])
        sample_ids = np.unique(model.dt.tets[cells])
        tree = cKDTree(mesh.vertices)
        d, vid = tree.query(model.dt.points[sample_ids])
        hit = np.zeros(mesh.n_vertices, dtype=bool)
        hit[vid[d == 0]] = True
        labels[hit[mesh.triangles].all(axis=1)] = int(Label.THIN)
    return mesh.with_labels(labels)


__all__ = ["MedialAxisApprox", "ThinRegion", "interior_medial_axis", "axis_saddles",
           "detect_thin_regions", "missing_tunnel_geometry", "tunnel_mesh", "tag_thin",
           "DEFAULT_ANGLE"]
