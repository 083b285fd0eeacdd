import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from cspace import kernels
from cspace.delaunay import (DegenerateError, build_delaunay, circumradius,
                             voronoi_dual)

from oracles import circumsphere_exact, count_faces, empty_sphere_violations

REG_TET = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
CUBE = np.array(list(itertools.product((0.0, 1.0), repeat=3)))


def _check_structure(dt):
    pts = dt.points
    assert (dt.tet_volumes() > 0).all()
    # neighbour relation is symmetric and shares a face
    for t in range(dt.n_tets):
        for i in range(4):
            u = dt.neighbors[t, i]
            if u < 0:
                continue
            assert t in dt.neighbors[u]
            shared = set(dt.tets[t].tolist()) - {dt.tets[t, i]}
            assert shared <= set(dt.tets[u].tolist())
    tris, edges = count_faces(dt.tets.tolist())
    assert len(tris) == len(dt.triangles) and len(edges) == len(dt.edges)
    hull = ConvexHull(pts)
    assert dt.tet_volumes().sum() == pytest.approx(hull.volume, rel=1e-9)


def test_regular_tetrahedron():
    dt = build_delaunay(REG_TET)
    assert (dt.n_tets, len(dt.triangles), len(dt.edges)) == (1, 4, 6)
    vd = voronoi_dual(dt)
    assert len(vd.vertices) == 1
    assert np.allclose(vd.vertices[0], 0)


def test_tetrahedron_plus_centroid():
    dt = build_delaunay(np.vstack([REG_TET, [[0, 0, 0]]]))
    assert dt.n_tets == 4
    _check_structure(dt)


def test_random_box_empty_sphere():
    pts = np.random.default_rng(42).uniform(0, 10, (200, 3))
    dt = build_delaunay(pts)
    _check_structure(dt)
    assert empty_sphere_violations(pts, dt.tets.tolist()) == 0


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_cube_corners_cospherical(seed):
    dt = build_delaunay(CUBE, seed=seed)
    _check_structure(dt)
    assert empty_sphere_violations(CUBE, dt.tets.tolist()) == 0
    vd = voronoi_dual(dt)
    assert len(vd.vertices) == dt.n_tets
    # the 12 cube edges lie on the hull, so their Voronoi facets are unbounded
    cube_edges = [k for k, (a, b) in enumerate(dt.edges)
                  if np.abs(CUBE[a] - CUBE[b]).sum() == 1]
    assert len(cube_edges) == 12 and vd.facet_unbounded[cube_edges].all()


@pytest.mark.parametrize("seed", [0, 1])
def test_grid_degenerate_input(seed):
    g = np.array(list(itertools.product(range(4), repeat=3)), float)
    dt = build_delaunay(g, seed=seed)
    _check_structure(dt)
    assert empty_sphere_violations(g, dt.tets.tolist()) == 0


def test_seed_changes_structure_but_not_validity():
    g = np.array(list(itertools.product(range(4), repeat=3)), float)
    a = build_delaunay(g, seed=0)
    b = build_delaunay(g, seed=1)
    assert a.simplices_dump() != b.simplices_dump()
    for dt in (a, b):
        vd = voronoi_dual(dt)
        assert len(vd.vertices) == dt.n_tets
        assert len(vd.edge_vertices) == len(dt.triangles)


def test_deterministic_dump():
    pts = np.random.default_rng(5).normal(size=(120, 3))
    assert build_delaunay(pts, seed=3).simplices_dump() == \
        build_delaunay(pts, seed=3).simplices_dump()


def test_degenerate_inputs():
    flat = np.c_[np.random.default_rng(0).uniform(size=(10, 2)), np.zeros(10)]
    with pytest.raises(DegenerateError, match="coplanar"):
        build_delaunay(flat)
    line = np.c_[np.arange(5.0), np.zeros(5), np.zeros(5)]
    with pytest.raises(DegenerateError, match="collinear"):
        build_delaunay(line)
    with pytest.raises(ValueError, match="duplicate"):
        build_delaunay(np.vstack([REG_TET, REG_TET[:1]]))


def test_circumradius_examples():
    a = 2.0
    tet = np.array([[0, 0, 0], [a, 0, 0], [a / 2, a * 3 ** 0.5 / 2, 0],
                    [a / 2, a * 3 ** 0.5 / 6, a * (2 / 3) ** 0.5]])
    assert circumradius(tet) == pytest.approx(a * (3 / 8) ** 0.5, rel=1e-12)
    corner = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    assert circumradius(corner) == pytest.approx(3 ** 0.5 / 2, rel=1e-12)
    flat = corner.copy()
    flat[3, 2] = 1e-13
    flat[3, :2] = 0.3
    with pytest.raises(DegenerateError):
        circumradius(flat)


def test_circumcenters_match_exact():
    pts = np.random.default_rng(11).uniform(size=(60, 3))
    dt = build_delaunay(pts)
    for t in range(0, dt.n_tets, 7):
        cen, r2 = circumsphere_exact(pts[dt.tets[t]])
        assert np.allclose(dt.circumcenters[t], [float(c) for c in cen], atol=1e-9)
        assert dt.circumradii[t] == pytest.approx(float(r2) ** 0.5, rel=1e-9)


def test_voronoi_duality_and_rings():
    pts = np.random.default_rng(2).uniform(size=(150, 3))
    dt = build_delaunay(pts)
    vd = voronoi_dual(dt)
    assert len(vd.vertices) == dt.n_tets
    assert vd.dual_of_vertex(5) == ("tet", 5)
    hull = ConvexHull(pts)
    assert vd.cell_unbounded.sum() == len(hull.vertices)
    assert vd.edge_unbounded.sum() == len(hull.simplices)
    for e in range(len(dt.edges)):
        ring, is_open = vd.facet(e)
        assert sorted(ring) == sorted(dt.edge_tets(e).tolist())
        assert is_open == vd.facet_unbounded[e]
        # consecutive tets in the ring are neighbours
        for s, t in zip(ring, ring[1:] + ([] if is_open else ring[:1])):
            assert t in dt.neighbors[s]
    # unbounded Voronoi rays point away from their tetrahedron
    for k in np.flatnonzero(vd.edge_unbounded):
        t = vd.edge_vertices[k, 0]
        tri = pts[dt.triangles[k]]
        apex = np.setdiff1d(dt.tets[t], dt.triangles[k])[0]
        assert vd.edge_direction[k] @ (pts[apex] - tri[0]) < 0


def test_compiled_matches_fallback():
    if kernels.BACKEND != "compiled":
        pytest.skip("compiled kernels not built")
    pts = np.random.default_rng(9).uniform(size=(400, 3))
    order = np.arange(400)
    ranks = np.random.default_rng(0).permutation(400)
    a = kernels.delaunay_build(pts, order, ranks)[0]
    b = kernels.pure.delaunay_build(pts, order, ranks)[0]
    key = lambda tv: sorted(tuple(sorted(t)) for t in tv.tolist())
    assert key(a) == key(b)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 60), st.integers(0, 2 ** 16), st.booleans())
def test_delaunay_properties(n, seed, lattice):
    rng = np.random.default_rng(seed)
    if lattice:
        # integer lattice points: heavy cospherical/coplanar degeneracy
        pts = np.unique(rng.integers(0, 4, (n, 3)).astype(float), axis=0)
        if len(pts) < 4 or np.linalg.matrix_rank(pts[1:] - pts[0]) < 3:
            return
    else:
        pts = rng.normal(size=(n, 3))
    dt = build_delaunay(pts, seed=seed)
    assert (dt.tet_volumes() > 0).all()
    assert dt.tet_volumes().sum() == pytest.approx(ConvexHull(pts).volume, rel=1e-9)
    assert empty_sphere_violations(pts, dt.tets.tolist()) == 0
    V, E, F, T = dt.n_points, len(dt.edges), len(dt.triangles), dt.n_tets
    assert V - E + F - T == 1
