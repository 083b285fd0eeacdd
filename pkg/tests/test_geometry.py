import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspace import fixtures as fx
from cspace.distance import (BVH, DistanceField, OpenMeshError, signed_distance,
                             unsigned_distance)
from cspace.io import ParseError, load_mesh, load_pdb, save_mesh, write_off
from cspace.mesh import (BallSet, BoundingDomain, Label, MeshError, PointSample,
                         TriangleMesh, mesh_stats)

from oracles import point_triangles_dist, winding_number


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


CUBE_OFF = """OFF
8 12 0
0 0 0
1 0 0
0 1 0
1 1 0
0 0 1
1 0 1
0 1 1
1 1 1
3 0 2 1
3 1 2 3
3 4 5 6
3 5 7 6
3 0 1 4
3 1 5 4
3 2 6 3
3 3 6 7
3 0 4 2
3 2 4 6
3 1 3 5
3 3 7 5
"""


def test_load_unit_cube_off(tmp_path):
    mesh = load_mesh(_write(tmp_path, "cube.off", CUBE_OFF), "OFF", strict=True)
    s = mesh_stats(mesh)
    assert (mesh.n_vertices, mesh.n_triangles) == (8, 12)
    assert s.euler_char == 2 and s.closed and s.oriented and s.genus == 0


def test_obj_torus_genus_one(tmp_path):
    path = tmp_path / "torus.obj"
    save_mesh(fx.torus(10, 4, 20, 10), path)
    mesh = load_mesh(path, "OBJ")
    V, F = mesh.n_vertices, mesh.n_triangles
    E = len({tuple(sorted(e)) for t in mesh.triangles.tolist()
             for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))})
    assert V - E + F == 0
    assert mesh_stats(mesh).genus == 1


def test_index_out_of_range(tmp_path):
    text = "OFF\n10 1 0\n" + "0 0 0\n" * 9 + "1 1 1\n" + "3 0 1 999\n"
    with pytest.raises(MeshError, match="999"):
        load_mesh(_write(tmp_path, "bad.off", text), "OFF")


def test_malformed_and_nonmanifold(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_mesh(_write(tmp_path, "bad.obj", "v 0 0 0\nv 1 x 0\n"), "OBJ")
    assert exc.value.line == 2
    # a single open triangle: boundary edges have one incident triangle
    text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
    p = _write(tmp_path, "open.off", text)
    assert not load_mesh(p).closed
    with pytest.raises(MeshError, match="non-manifold edge"):
        load_mesh(p, strict=True)


def test_degenerate_triangle_permissive(tmp_path):
    text = "OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n"
    p = _write(tmp_path, "deg.off", text)
    with pytest.raises(MeshError, match="degenerate"):
        load_mesh(p)
    assert load_mesh(p, permissive=True).n_triangles == 1


def test_off_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    m = fx.icosphere(1)
    m = TriangleMesh(m.vertices * rng.uniform(0.5, 2, (len(m.vertices), 1)), m.triangles)
    a, b = tmp_path / "a.off", tmp_path / "b.off"
    write_off(m, a)
    back = load_mesh(a)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    write_off(back, b)
    assert a.read_bytes() == b.read_bytes()


def test_labelled_off_round_trip(tmp_path):
    m = fx.cube()
    labels = np.array([Label.MOUTH, Label.THIN] + [Label.SURFACE] * 10)
    write_off(m.with_labels(labels), tmp_path / "l.off")
    back = load_mesh(tmp_path / "l.off")
    assert back.labels.tolist() == labels.tolist()


@pytest.mark.parametrize("mesh, expected", [
    (fx.icosphere(2), (1, 2, 0, True, True)),
    (fx.two_spheres(), (2, 4, 0, True, True)),
    (fx.torus(), (1, 0, 1, True, True)),
])
def test_mesh_stats(mesh, expected):
    assert mesh_stats(mesh).as_tuple() == expected


def test_open_mesh_has_no_genus():
    m = fx.cube()
    opened = TriangleMesh(m.vertices, m.triangles[:-1])
    s = mesh_stats(opened)
    assert not s.closed and s.genus is None


def test_flipped_mesh_orientation_flag():
    m = fx.cube()
    t = m.triangles.copy()
    t[0] = t[0][::-1]
    assert not TriangleMesh(m.vertices, t).oriented


def test_edge_count_closed_meshes():
    for m in (fx.icosphere(2), fx.torus(), fx.cube()):
        assert 2 * len(m.edges()) == 3 * m.n_triangles


# -- distance ---------------------------------------------------------------

def test_sphere_signed_distance_examples():
    m = fx.icosphere(4)
    assert signed_distance(m, [0, 0, 0]) == pytest.approx(-1.0, abs=5e-3)
    assert signed_distance(m, [2, 0, 0]) == pytest.approx(1.0, abs=5e-3)
    assert signed_distance(m, m.vertices[17]) == 0.0


def test_distance_matches_brute_force_and_winding():
    m = fx.torus(10, 4, 24, 12)
    rng = np.random.default_rng(7)
    q = rng.uniform(-16, 16, (1000, 3))
    df = DistanceField(m)
    s = df.signed(q)
    tris = m.corners()
    ref = np.array([point_triangles_dist(p, tris) for p in q])
    assert np.allclose(np.abs(s), ref, rtol=1e-9, atol=1e-12)
    far = ref > 1e-7
    w = winding_number(q[far], tris)
    assert np.array_equal(s[far] < 0, w > 0.5)


def test_open_mesh_sign_undefined():
    m = fx.cube()
    opened = TriangleMesh(m.vertices, m.triangles[:-1])
    with pytest.raises(OpenMeshError):
        signed_distance(opened, [0, 0, 0])
    assert unsigned_distance(opened, [0, 0, 0]) == pytest.approx(0.5)


def test_ray_retry_on_grazing_queries():
    # query points aligned with cube vertices and edges along axis rays
    m = fx.cube(2.0)
    q = np.array([[0, 0, 0], [0.5, 0.5, 0.5], [3, 1, 1], [-3, -1, 0], [0, 0, 5]], float)
    inside = DistanceField(m).inside(q)
    assert inside.tolist() == [True, True, False, False, False]


def test_bvh_leaf_partition_is_permutation():
    m = fx.icosphere(3)
    bvh = BVH(m.corners())
    assert sorted(bvh.order.tolist()) == list(range(m.n_triangles))
    leaves = bvh.left < 0
    assert bvh.count[leaves].sum() == m.n_triangles


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3.0), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_scaled_sphere_distance_property(r, p):
    m = fx.icosphere(2, radius=r)
    p = np.array(p)
    d = signed_distance(m, p)
    assert abs(d) == pytest.approx(point_triangles_dist(p, m.corners()), rel=1e-9, abs=1e-12)
    if abs(d) > 1e-7:
        assert (d < 0) == (winding_number(p, m.corners())[0] > 0.5)


# -- point samples, domains, balls -----------------------------------------

def test_point_sample_rejects_duplicates():
    pts = np.eye(4, 3)
    with pytest.raises(ValueError, match="duplicate"):
        PointSample(np.vstack([pts, pts[:1] + 1e-12]))
    with pytest.raises(ValueError, match="at least 4"):
        PointSample(pts[:3])


def test_bounding_domain_margin():
    pts = np.array([[0, 0, 0], [1, 2, 2]], float)
    dom = BoundingDomain.around(pts)
    assert np.allclose(dom.lo, -0.3) and np.allclose(dom.hi, [1.3, 2.3, 2.3])
    assert dom.contains(pts).all()


PDB = """\
ATOM      1  CA  ALA A   1      11.104   6.134  -6.504  1.00  0.00           C
ATOM      2  N   ALA A   1      11.639   6.071  -5.147  1.00  0.00           N
HETATM    3  O   HOH B   2      12.000   7.000  -4.000  1.00  0.00           O
END
"""


def test_load_pdb(tmp_path):
    balls = load_pdb(_write(tmp_path, "t.pdb", PDB))
    assert np.allclose(balls.radii, [1.7, 1.55, 1.52])
    assert np.allclose(balls.centers[0], [11.104, 6.134, -6.504])
    parts = balls.by_chain()
    assert list(parts) == ["A", "B"] and len(parts["A"]) == 2


def test_pdb_errors(tmp_path):
    bad = PDB.replace("11.639", "  x.yz")
    with pytest.raises(ParseError) as exc:
        load_pdb(_write(tmp_path, "b.pdb", bad))
    assert exc.value.line == 2
    with pytest.raises(ParseError, match="no ATOM"):
        load_pdb(_write(tmp_path, "e.pdb", "HEADER x\nEND\n"))


def test_ballset_default_radius():
    b = BallSet.from_elements(np.zeros((2, 3)), ["FE", "C"])
    assert b.radii.tolist() == [1.5, 1.7]
