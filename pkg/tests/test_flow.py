import numpy as np
import pytest
from scipy.spatial import cKDTree

from cspace import fixtures as fx
from cspace.delaunay import build_delaunay, voronoi_dual
from cspace.flow import (CriticalPoint, FlowComplex, UnsupportedIndexError,
                         classify_side, extract_critical_points, write_critical_csv)

from oracles import (closest_point_in_tet, driver_flow_sinks, dumbbell_sample,
                     fibonacci_sphere, h_probe_signature)

REG_TET = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)


def test_regular_tetrahedron_critical_points():
    dt = build_delaunay(REG_TET)
    cps = extract_critical_points(dt, voronoi_dual(dt))
    idx = [c.index for c in cps]
    assert idx.count(0) == 4 and idx.count(3) == 1
    mx = [c for c in cps if c.index == 3][0]
    assert np.allclose(mx.location, 0) and mx.h_value == pytest.approx(3 ** 0.5)
    assert cps == sorted(cps, key=lambda c: (c.index, c.h_value, c.simplex))


def test_right_corner_tetrahedron_dual_intersection():
    P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    dt = build_delaunay(P)
    fc = FlowComplex(dt)
    # circumcenter (1/2,1/2,1/2) is strictly outside: beyond the slanted face
    lam = closest_point_in_tet(P, dt.circumcenters[0])
    assert not fc.is_max[0] and lam.min() < 1e-9
    for c in fc.critical_points():
        if c.index == 1:
            a, b = dt.points[dt.edges[c.simplex]]
            others = [p for p in P if not (np.allclose(p, a) or np.allclose(p, b))]
            assert all(np.dot(a - q, b - q) > 0 for q in others)
        if c.index == 2:
            tri = P[dt.triangles[c.simplex]]
            for j in range(3):
                u, v = tri[(j + 1) % 3] - tri[j], tri[(j + 2) % 3] - tri[j]
                assert np.dot(u, v) > 0


@pytest.mark.parametrize("seed", range(5))
def test_alternating_sum(seed):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(300, 3)) * [1, 2, 3]
    fc = FlowComplex(build_delaunay(P))
    c0, c1, c2, c3 = fc.counts()
    assert c0 - c1 + c2 - c3 == 1


def test_sphere_sample_probe_signature():
    P = fibonacci_sphere(500, jitter=1e-3)
    fc = FlowComplex(build_delaunay(P))
    tree = cKDTree(P)
    agree = total = 0
    for c in fc.critical_points():
        k, contained, up, down = h_probe_signature(tree, c.location)
        agree += k == c.index and contained and up == 6 - 2 * k and down == 2 * k
        total += 1
    assert agree >= 0.99 * total


def test_flow_matches_driver_oracle():
    P = np.random.default_rng(3).uniform(size=(120, 3))
    dt = build_delaunay(P)
    fc = FlowComplex(dt)
    assert np.array_equal(fc.sink, driver_flow_sinks(dt))


def test_circumradius_increases_along_flow():
    P = np.random.default_rng(4).normal(size=(300, 3))
    dt = build_delaunay(P)
    fc = FlowComplex(dt)
    moving = (fc.next >= 0) & (fc.next != np.arange(dt.n_tets))
    assert (dt.circumradii[fc.next[moving]] > dt.circumradii[moving]).all()


def test_dumbbell_stable_manifolds_partition():
    P = dumbbell_sample()
    dt = build_delaunay(P)
    fc = FlowComplex(dt)
    cps = fc.critical_points()
    centers = [c for c in cps if c.index == 3 and abs(abs(c.location[0]) - 0.8) < 0.1
               and np.hypot(*c.location[1:]) < 0.1]
    assert len(centers) == 2
    a, b = (fc.stable_manifold(c).tets for c in centers)
    assert len(np.intersect1d(a, b)) == 0
    # the two lobes' interior tets split between the two maxima
    cc = dt.circumcenters
    for m, tets in zip(centers, (a, b)):
        assert m.simplex in tets
        assert np.sign(cc[tets, 0]).tolist().count(np.sign(m.location[0])) > 0.9 * len(tets)
    # stable manifolds of all maxima plus unbounded flow cover every tet
    maxima = [c for c in cps if c.index == 3]
    union = np.concatenate([fc.stable_manifold(c).tets for c in maxima])
    assert len(union) == len(set(union.tolist()))
    assert len(union) + (fc.sink < 0).sum() == dt.n_tets


def test_dumbbell_neck_saddle_polyline():
    dt = build_delaunay(dumbbell_sample())
    fc = FlowComplex(dt)
    neck = min((c for c in fc.critical_points((2,))), key=lambda c: np.linalg.norm(c.location))
    assert np.linalg.norm(neck.location) < 0.1
    m = fc.unstable_manifold(neck)
    assert m.dim == 1 and len(m.ends) == 2
    assert all(fc.is_max[e] for e in m.ends)
    xs = sorted(dt.circumcenters[e, 0] for e in m.ends)
    assert xs[0] == pytest.approx(-0.8, abs=0.05) and xs[1] == pytest.approx(0.8, abs=0.05)
    assert np.allclose(m.polyline[len(m.polyline) // 2], neck.location) or \
        any(np.allclose(p, neck.location) for p in m.polyline)


def test_slab_index1_manifold_is_planar_patch():
    rng = np.random.default_rng(0)
    n = 300
    xy = rng.uniform(0, 6, (2 * n, 2))
    z = np.r_[np.zeros(n), np.ones(n)] + rng.uniform(-1e-3, 1e-3, 2 * n)
    P = np.c_[xy, z]
    dt = build_delaunay(P)
    fc = FlowComplex(dt)
    cross = [c for c in fc.critical_points((1,)) if abs(c.location[2] - 0.5) < 0.05
             and 1.5 < c.location[0] < 4.5 and 1.5 < c.location[1] < 4.5]
    assert cross
    for cp in cross[:5]:
        m = fc.unstable_manifold(cp)
        assert m.dim == 2 and cp.simplex in m.facets
        ring, _ = dt.edge_ring(cp.simplex)
        assert set(ring) <= set(m.tets.tolist())
        mid = m.tets[(dt.circumcenters[m.tets, 0] > 1) & (dt.circumcenters[m.tets, 0] < 5)
                     & (dt.circumcenters[m.tets, 1] > 1) & (dt.circumcenters[m.tets, 1] < 5)]
        assert np.abs(dt.circumcenters[mid, 2] - 0.5).max() < 0.2


def test_unsupported_indices():
    dt = build_delaunay(REG_TET)
    fc = FlowComplex(dt)
    cps = fc.critical_points()
    with pytest.raises(UnsupportedIndexError):
        fc.unstable_manifold(cps[0])
    with pytest.raises(UnsupportedIndexError):
        fc.stable_manifold(cps[0])
    e = CriticalPoint(1, (0, 0, 0), 1.0, 0)
    with pytest.raises(UnsupportedIndexError):
        fc.stable_manifold(e)


def test_classify_side(tmp_path):
    mesh = fx.icosphere(3, jitter=1e-6)
    cps = [CriticalPoint(3, (0.0, 0.0, 0.0), 1.0, 0),
           CriticalPoint(3, (3.0, 0.0, 0.0), 1.0, 1),
           CriticalPoint(2, tuple(mesh.vertices[0] * (1 + 1e-9)), 1.0, 2)]
    out = classify_side(cps, mesh)
    assert [c.side for c in out] == ["interior", "exterior", "exterior"]
    assert [c.near_boundary for c in out] == [False, False, True]
    path = tmp_path / "cp.csv"
    write_critical_csv(out, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "index,x,y,z,h_value,side" and len(rows) == 4
