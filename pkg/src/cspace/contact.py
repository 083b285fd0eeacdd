"""Contact regions between parts and an assembly order from their contacts.

A part's contact region with respect to some reference geometry is the set
of its triangles incident to a vertex lying within ``threshold`` angstroms
of that geometry; its area is measured on the part. Parts and the
reference form a graph weighted by contact area, and the maximum-weight
spanning tree of that graph suggests an order of assembly: walking the
tree depth-first from the reference, heavier attachments first. The
tree-to-order step is a heuristic and is reported as such.
"""
from __future__ import annotations

import csv
import itertools
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .distance import DistanceField
from .mesh import BallSet, Label, TriangleMesh

DEFAULT_THRESHOLD = 4.0  # angstroms
SCALE_MISMATCH = 1e3
ORDER_NOTE = "heuristic: depth-first walk of the maximum-weight spanning tree from the reference"


class ContactError(ValueError):
    """Invalid contact or assembly input."""


@dataclass
class Part:
    name: str
    mesh: TriangleMesh
    source: str = ""

    def __post_init__(self):
        if not self.name:
            raise ContactError("part name must be non-empty")
        if self.mesh.n_triangles == 0:
            raise ContactError(f"part {self.name!r} has an empty mesh")


@dataclass
class ContactRegion:
    part: str
    reference: str
    triangles: np.ndarray
    area: float
    threshold: float

    def to_dict(self) -> dict:
        return {"part": self.part, "reference": self.reference, "area_A2": self.area,
                "threshold_A": self.threshold, "triangle_count": int(len(self.triangles))}


def part_from_balls(name: str, balls: BallSet, dims: int = 64, source: str = "") -> Part:
    """Mesh a union of balls (e.g. one chain of a PDB file) into a part."""
    from .levelset import balls_to_grid, extract_isosurface
    return Part(name, extract_isosurface(balls_to_grid(balls, dims), 0.0), source)


def _extent(x: np.ndarray) -> float:
    return float(np.ptp(x, axis=0).max()) if len(x) else 0.0


def _geometry_points(ref) -> np.ndarray:
    if isinstance(ref, Part):
        return ref.mesh.vertices
    if isinstance(ref, TriangleMesh):
        return ref.vertices
    if isinstance(ref, BallSet):
        return ref.centers
    return np.asarray(ref, float).reshape(-1, 3)


def distance_to(ref, x: np.ndarray) -> np.ndarray:
    """Distance from points ``x`` to reference geometry.

    Meshes measure to their surface, ball sets to the surface of the union
    of balls (zero inside), bare point arrays to the nearest point.
    """
    x = np.asarray(x, float).reshape(-1, 3)
    if isinstance(ref, Part):
        ref = ref.mesh
    if isinstance(ref, TriangleMesh):
        return DistanceField(ref).unsigned(x)
    if isinstance(ref, BallSet):
        k = min(len(ref), 16)
        tree = cKDTree(ref.centers)
        d, i = tree.query(x, k=k)
        d, i = d.reshape(len(x), k), i.reshape(len(x), k)
        gap = (d - ref.radii[i]).min(axis=1)
        # a ball beyond the k nearest centres can only be closer if it is larger
        far = d[:, -1] - ref.radii.max() < gap
        for j in np.flatnonzero(far):
            gap[j] = (np.linalg.norm(ref.centers - x[j], axis=1) - ref.radii).min()
        return np.maximum(gap, 0.0)
    pts = np.asarray(ref, float).reshape(-1, 3)
    return cKDTree(pts).query(x)[0]


def contact_region(part: Part, reference, threshold: float = DEFAULT_THRESHOLD,
                   reference_name: str = "reference") -> ContactRegion:
    """Triangles of ``part`` touching a vertex within ``threshold`` of ``reference``."""
    if not threshold > 0:
        raise ContactError(f"threshold must be positive, got {threshold}")
    if isinstance(reference, Part):
        reference_name = reference.name
    ref_pts = _geometry_points(reference)
    if not len(ref_pts):
        raise ContactError("reference geometry is empty")
    mesh = part.mesh
    ea, eb = _extent(mesh.vertices), _extent(ref_pts)
    if min(ea, eb) > 0 and max(ea, eb) / min(ea, eb) > SCALE_MISMATCH:
        warnings.warn(f"part {part.name!r} and {reference_name!r} differ in size by more than "
                      f"{SCALE_MISMATCH:g}x; check that they share units", stacklevel=2)
    near = distance_to(reference, mesh.vertices) <= threshold
    tris = np.flatnonzero(near[mesh.triangles].any(axis=1))
    area = float(mesh.triangle_areas()[tris].sum())
    return ContactRegion(part.name, reference_name, tris, area, float(threshold))


def tag_contact(part: Part, region: ContactRegion) -> TriangleMesh:
    labels = np.full(part.mesh.n_triangles, int(Label.SURFACE))
    labels[region.triangles] = int(Label.CONTACT)
    return part.mesh.with_labels(labels)


# ---------------------------------------------------------------------------


def _key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class AssemblyGraph:
    nodes: list
    edges: dict  # (a, b) with a < b -> area
    reference: str
    threshold: float = DEFAULT_THRESHOLD
    tree: list = field(default_factory=list)
    order: list = field(default_factory=list)
    disconnected: bool = False
    reference_areas: dict = field(default_factory=dict)

    def weight(self, a: str, b: str) -> float:
        return self.edges.get(_key(a, b), 0.0)

    def tree_weight(self) -> float:
        return float(sum(self.edges[e] for e in self.tree))

    def to_dict(self) -> dict:
        return {"reference": self.reference, "threshold_A": self.threshold,
                "parts": [n for n in self.nodes if n != self.reference],
                "edges": [{"a": a, "b": b, "area_A2": w} for (a, b), w in sorted(self.edges.items())],
                "tree": [{"a": a, "b": b, "area_A2": self.edges[(a, b)]} for a, b in self.tree],
                "order": list(self.order), "disconnected": self.disconnected,
                "order_note": ORDER_NOTE}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["part", "reference_contact_area"])
            for n in self.nodes:
                if n != self.reference:
                    w.writerow([n, f"{self.reference_areas.get(n, 0.0):.6g}"])


def thread_cap() -> int:
    """Worker count: ``CSK_THREADS`` if set, else up to 8 CPUs."""
    env = os.environ.get("CSK_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            warnings.warn(f"ignoring non-integer CSK_THREADS={env!r}", stacklevel=2)
    return min(8, os.cpu_count() or 1)


def pairwise_contact(a: Part, b: Part, threshold: float) -> float:
    """Symmetric contact weight: the larger of the two one-sided areas."""
    return max(contact_region(a, b, threshold).area, contact_region(b, a, threshold).area)


def assembly_graph(parts: list, reference, threshold: float = DEFAULT_THRESHOLD,
                   reference_name: str = "reference") -> AssemblyGraph:
    """Contact-area graph of ``parts`` plus a reference node, with tree and order."""
    if len(parts) < 2:
        raise ContactError("an assembly needs at least two parts")
    names = [p.name for p in parts]
    if len(set(names)) != len(names):
        raise ContactError("part names must be unique")
    if isinstance(reference, Part):
        reference_name = reference.name
    if reference_name in names:
        raise ContactError(f"reference name {reference_name!r} clashes with a part")
    jobs = [(p, reference, True) for p in parts]
    jobs += [(a, b, False) for a, b in itertools.combinations(parts, 2)]

    def run(job):
        a, b, to_ref = job
        if to_ref:
            return contact_region(a, b, threshold, reference_name).area
        return pairwise_contact(a, b, threshold)

    with ThreadPoolExecutor(thread_cap()) as ex:
        areas = list(ex.map(run, jobs))
    edges, ref_areas = {}, {}
    for (a, b, to_ref), w in zip(jobs, areas):
        if to_ref:
            ref_areas[a.name] = w
        if w > 0:
            edges[_key(a.name, reference_name if to_ref else b.name)] = w
    g = AssemblyGraph([reference_name] + names, edges, reference_name, float(threshold),
                      reference_areas=ref_areas)
    return max_weight_spanning_tree(g)


def graph_from_edges(nodes, edges: dict, reference: str) -> AssemblyGraph:
    """Assembly graph from explicit weights ``{(a, b): w}``; zero weights are dropped."""
    e = {_key(a, b): float(w) for (a, b), w in edges.items() if w > 0}
    return AssemblyGraph(list(nodes), e, reference)


def max_weight_spanning_tree(graph: AssemblyGraph) -> AssemblyGraph:
    """Kruskal on descending weight; ties broken by the node-pair names.

    Fills ``tree``, ``order`` and ``disconnected``. A disconnected graph
    gets a spanning forest.
    """
    if len(graph.nodes) < 2:
        raise ContactError("spanning tree needs at least two nodes")
    if not graph.edges:
        raise ContactError("graph has no edges")
    parent = {n: n for n in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for (a, b), w in sorted(graph.edges.items(), key=lambda kv: (-kv[1], kv[0])):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append((a, b))
    graph.tree = tree
    graph.disconnected = len(tree) < len(graph.nodes) - 1
    graph.order = binding_order(graph)
    return graph


def binding_order(graph: AssemblyGraph) -> list:
    """Depth-first walk of the tree from the reference, heavier edges first.

    Components not reachable from the reference follow, each walked from
    its node with the lexicographically smallest name.
    """
    adj = {n: [] for n in graph.nodes}
    for a, b in graph.tree:
        w = graph.edges[(a, b)]
        adj[a].append((w, b))
        adj[b].append((w, a))
    seen, order = set(), []
    roots = [graph.reference] + sorted(n for n in graph.nodes if n != graph.reference)
    for root in roots:
        if root in seen:
            continue
        stack = [root]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if n != graph.reference:
                order.append(n)
            kids = sorted((c for c in adj[n] if c[1] not in seen), key=lambda c: (-c[0], c[1]))
            stack.extend(c for _, c in reversed(kids))
    return order


__all__ = ["ContactError", "Part", "ContactRegion", "AssemblyGraph", "contact_region",
           "tag_contact", "distance_to", "part_from_balls", "pairwise_contact", "assembly_graph",
           "graph_from_edges", "max_weight_spanning_tree", "binding_order", "DEFAULT_THRESHOLD"]
