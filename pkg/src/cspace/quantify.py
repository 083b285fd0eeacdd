"""Measurements on complementary-space features.

Volumes come from the divergence theorem on a feature's closed boundary
mesh, mouth areas from its mouth patches, and the minimum diameter from the
widest route for a probe sphere along the Voronoi diagram of the sample:
``2 * max over routes of min h_P`` where ``h_P`` is the distance to the
nearest sample point.
"""
from __future__ import annotations

import csv
import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from .features import POCKET, TUNNEL, VOID, Feature, FeatureSet, compare_feature_sets, \
    tag_feature_mesh
from .mesh import TriangleMesh


class NoMouthError(ValueError):
    """The feature is a void and has no mouth."""


class TrackingError(ValueError):
    """A feature could not be followed through a time series."""


def enclosed_volume(mesh: TriangleMesh, origin=None) -> float:
    """Volume enclosed by a closed oriented mesh (signed tetrahedra sum).

    Meshes pinched along edges are accepted as long as every edge is
    traversed equally often in both directions. A negative total means the
    mesh faces inwards; the magnitude is returned with a warning.
    """
    if not mesh.balanced:
        raise ValueError("enclosed volume needs a closed mesh")
    o = mesh.vertices.mean(axis=0) if origin is None else np.asarray(origin, float)
    a, b, c = (mesh.corners() - o).transpose(1, 0, 2)
    vol = float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)
    if vol < 0:
        warnings.warn("mesh is oriented inwards; volume sign corrected", stacklevel=2)
        vol = -vol
    return vol


def mouth_area(feature: Feature) -> dict:
    """Total and per-mouth area of a feature's mouth patches."""
    if not feature.mouths:
        raise NoMouthError(f"feature {feature.id} is a void and has no mouth")
    dt = feature.complex.dt
    P = dt.points[dt.triangles]
    areas = 0.5 * np.linalg.norm(np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=1)
    per = [float(areas[m].sum()) for m in feature.mouths]
    return {"total": float(sum(per)), "per_mouth": per}


def _passage_graph(feature: Feature):
    """Weighted adjacency of the feature's Voronoi vertices.

    Nodes are the feature's tets (their circumcenters). Two tets sharing a
    facet are joined by the Voronoi edge dual to that facet; its weight is
    the smallest ``h_P`` along the edge segment. Each mouth becomes an extra
    node joined to the tets on its facets by their unbounded Voronoi rays.
    """
    model = feature.complex
    dt = model.dt
    fc = model.flow
    side = fc.face_side
    R = dt.circumradii
    tri_R = fc.tri_R
    local = {int(t): i for i, t in enumerate(feature.tets.tolist())}
    n = len(local)
    adj = [[] for _ in range(n + len(feature.mouths))]
    mouth_of = {}
    for m, patch in enumerate(feature.mouths):
        for k in patch.tolist():
            mouth_of[int(k)] = n + m
    for t, u in local.items():
        for i in range(4):
            k = int(dt.tet_triangles[t, i])
            nb = int(dt.neighbors[t, i])
            if nb < 0:
                if k in mouth_of:
                    w = tri_R[k] if side[t, i] >= 0 else R[t]
                    w = max(float(w), float(tri_R[k]))
                    adj[u].append((w, mouth_of[k]))
                    adj[mouth_of[k]].append((w, u))
                continue
            v = local.get(nb)
            if v is None or v < u:
                continue
            j = int(np.flatnonzero(dt.neighbors[nb] == t)[0])
            if side[t, i] >= 0 and side[nb, j] >= 0:
                w = tri_R[k]
            else:
                w = min(R[t], R[nb])
            w = max(float(w), float(tri_R[k]))
            adj[u].append((w, v))
            adj[v].append((w, u))
    return adj, local, n


def _widest(adj, source: int) -> np.ndarray:
    """Bottleneck (maximin) value from ``source`` to every node."""
    best = np.full(len(adj), -np.inf)
    best[source] = np.inf
    heap = [(-np.inf, source)]
    while heap:
        negb, u = heapq.heappop(heap)
        b = -negb
        if b < best[u]:
            continue
        for w, v in adj[u]:
            c = min(b, w)
            if c > best[v]:
                best[v] = c
                heapq.heappush(heap, (-c, v))
    return best


def deepest_maximum(feature: Feature) -> int:
    """Tet id of the feature's highest maximum of ``h_P``.

    "Deepest" means farthest from the sample: the flow sink in the feature
    with the largest circumradius. Without any sink, the largest finite
    circumradius in the feature is used; ties go to the lowest tet id.
    """
    dt = feature.complex.dt
    fc = feature.complex.flow
    tets = feature.tets
    finite = np.isfinite(dt.circumradii[tets])
    cand = tets[fc.is_max[tets] & finite]
    if not len(cand):
        cand = tets[finite]
    r = dt.circumradii[cand]
    return int(cand[np.lexsort((cand, -r))[0]])


def min_diameter(feature: Feature) -> float:
    """Bottleneck width of the feature's passage.

    For a tunnel, the widest route between any two mouths; for a pocket,
    the widest route from the mouth to the deepest maximum.
    """
    if feature.kind == VOID:
        raise NoMouthError(f"feature {feature.id} is a void; minimum diameter is undefined")
    adj, local, n = _passage_graph(feature)
    m = len(feature.mouths)
    if feature.kind == POCKET:
        best = _widest(adj, n)
        target = local[deepest_maximum(feature)]
        return 2.0 * float(best[target])
    width = -np.inf
    for a in range(m - 1):
        best = _widest(adj, n + a)
        width = max(width, float(best[n + a + 1:n + m].max()))
    return 2.0 * width


@dataclass
class Measurement:
    feature_id: int
    kind: str
    enclosed_volume: float
    mouth_area_total: float
    mouth_areas: list
    min_diameter: float | None = None

    def to_dict(self) -> dict:
        return {"feature_id": self.feature_id, "kind": self.kind,
                "volume_A3": self.enclosed_volume, "mouth_area_A2": self.mouth_area_total,
                "mouths": list(self.mouth_areas), "min_diameter_A": self.min_diameter}


def measure(feature: Feature) -> Measurement:
    vol = enclosed_volume(tag_feature_mesh(feature))
    if feature.kind == VOID:
        return Measurement(feature.id, feature.kind, vol, 0.0, [], None)
    ma = mouth_area(feature)
    return Measurement(feature.id, feature.kind, vol, ma["total"], ma["per_mouth"],
                       min_diameter(feature))


def measure_all(fs: FeatureSet) -> list[Measurement]:
    return [measure(f) for f in fs]


# ---------------------------------------------------------------------------

_QUANTITIES = ("enclosed_volume", "mouth_area_total", "min_diameter")


@dataclass
class TimeSeriesReport:
    """Per-step measurements of features tracked from the first step.

    ``series[id]`` holds one entry per step: a :class:`Measurement` or
    ``None`` where the feature was not matched (gaps are never filled).
    """
    series: dict
    n_steps: int
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n_steps": self.n_steps,
                "features": {str(k): [m.to_dict() if m else None for m in v]
                             for k, v in self.series.items()},
                "summary": {str(k): v for k, v in self.summary.items()}}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "id", "volume", "mouth_area", "min_diameter"])
            for fid in sorted(self.series):
                for step, m in enumerate(self.series[fid]):
                    if m is None:
                        continue
                    w.writerow([step, fid, f"{m.enclosed_volume:.4g}",
                                f"{m.mouth_area_total:.4g}",
                                "" if m.min_diameter is None else f"{m.min_diameter:.4g}"])


def time_series_report(sets: list, match_tol: float) -> TimeSeriesReport:
    """Track the first step's features through ``sets`` and measure them."""
    if len(sets) < 2:
        raise ValueError("a time series needs at least two steps")
    ref = sets[0]
    series = {f.id: [None] * len(sets) for f in ref}
    for step, fs in enumerate(sets):
        by_id = {f.id: f for f in fs}
        pairs = [(f.id, f.id) for f in ref] if step == 0 else \
            [(a, b) for a, b, _, _ in compare_feature_sets(ref, fs, match_tol).matched]
        for a, b in pairs:
            series[a][step] = measure(by_id[b])
    # the first step is the reference; a feature missing from half or more of
    # the later steps cannot be tracked
    later = len(sets) - 1
    for fid, ms in series.items():
        misses = sum(m is None for m in ms[1:])
        if misses >= 0.5 * later:
            raise TrackingError(f"feature {fid} unmatched in {misses} of {later} later steps")
    summary = {}
    for fid, ms in series.items():
        s = {}
        for q in _QUANTITIES:
            vals = [getattr(m, q) for m in ms if m is not None and getattr(m, q) is not None]
            if vals:
                s[q] = {"max": max(vals), "min": min(vals)}
        summary[fid] = s
    return TimeSeriesReport(series, len(sets), summary)


__all__ = ["NoMouthError", "TrackingError", "enclosed_volume", "mouth_area", "min_diameter",
           "deepest_maximum", "Measurement", "measure", "measure_all", "TimeSeriesReport",
           "time_series_report", "TUNNEL"]
