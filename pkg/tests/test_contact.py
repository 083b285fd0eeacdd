import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspace import fixtures as fx
from cspace.contact import (ContactError, Part, assembly_graph, contact_region,
                            distance_to, graph_from_edges, max_weight_spanning_tree, tag_contact,
                            thread_cap)
from cspace.distance import brute_force_distance
from cspace.mesh import BallSet, Label

from oracles import max_spanning_tree_weight


def test_parallel_squares_in_range():
    a = Part("a", fx.square(1.0, 0.0, n=6))
    r = contact_region(a, Part("r", fx.square(1.0, 3.0)), 4.0)
    assert len(r.triangles) == a.mesh.n_triangles
    assert r.area == pytest.approx(1.0, abs=1e-12)


def test_parallel_squares_out_of_range():
    a = Part("a", fx.square(1.0, 0.0))
    r = contact_region(a, Part("r", fx.square(1.0, 5.0)), 4.0)
    assert r.area == 0.0 and len(r.triangles) == 0


def test_partial_overlap_area_is_tagged_triangle_sum():
    # reference square shifted half a side: only part of the plate is in range
    a = Part("a", fx.square(2.0, 0.0, n=8))
    ref = Part("r", fx.square(2.0, 1.0, n=8, offset=(3.5, 0.0)))
    r = contact_region(a, ref, 2.0)
    areas = a.mesh.triangle_areas()
    assert r.area == pytest.approx(areas[r.triangles].sum(), rel=1e-12)
    assert 0 < r.area < a.mesh.area()
    d = brute_force_distance(ref.mesh, a.mesh.vertices)
    near = d <= 2.0
    assert np.array_equal(np.sort(r.triangles),
                          np.flatnonzero(near[a.mesh.triangles].any(axis=1)))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 6.0), st.floats(0.1, 6.0))
def test_area_monotone_in_threshold(t1, t2):
    a = Part("a", fx.icosphere(2, 2.0))
    ref = Part("r", fx.box([2.5, -1, -1], [4, 1, 1]))
    lo, hi = sorted((t1, t2))
    r1, r2 = contact_region(a, ref, lo), contact_region(a, ref, hi)
    assert r1.area <= r2.area
    assert np.isin(r1.triangles, r2.triangles).all()


def test_ball_reference_distance_matches_brute_force():
    rng = np.random.default_rng(3)
    balls = BallSet(rng.uniform(-5, 5, (60, 3)), rng.uniform(0.5, 3.0, 60))
    x = rng.uniform(-8, 8, (200, 3))
    brute = np.maximum((np.linalg.norm(x[:, None] - balls.centers[None], axis=2)
                        - balls.radii).min(axis=1), 0.0)
    assert np.allclose(distance_to(balls, x), brute, atol=1e-12)


def test_point_reference_distance():
    pts = np.array([[0.0, 0, 0], [10, 0, 0]])
    assert distance_to(pts, np.array([[3.0, 4, 0]])) == pytest.approx([5.0])


def test_tagged_mesh_labels():
    a = Part("a", fx.square(1.0, 0.0))
    r = contact_region(a, Part("r", fx.square(1.0, 3.0)))
    m = tag_contact(a, r)
    assert np.all(m.labels == int(Label.CONTACT))


def test_contact_errors():
    a = Part("a", fx.square())
    with pytest.raises(ContactError):
        contact_region(a, np.zeros((0, 3)))
    with pytest.raises(ContactError):
        contact_region(a, Part("r", fx.square(1.0, 3.0)), 0.0)
    with pytest.warns(UserWarning, match="units"):
        contact_region(a, Part("r", fx.square(1e4, 3.0)))


# -- assembly ------------------------------------------------------------------


def _blocks():
    ref = Part("R", fx.box([-3, 0, 0], [-2, 1, 1]))
    parts = [Part(n, fx.box([x, 0, 0], [x + 1, 1, 1])) for n, x in (("A", 0), ("B", 3), ("C", 6))]
    return parts, ref


def test_three_blocks_in_a_row_form_a_path():
    parts, ref = _blocks()
    g = assembly_graph(parts, ref, threshold=2.5)
    assert set(g.edges) == {("A", "R"), ("A", "B"), ("B", "C")}
    assert len(g.tree) == 3 and not g.disconnected
    assert g.order == ["A", "B", "C"]
    # weights equal direct summation of the tagged triangle areas
    for (a, b), w in g.edges.items():
        pa = {p.name: p for p in parts + [ref]}
        one = contact_region(pa[a], pa[b], 2.5)
        two = contact_region(pa[b], pa[a], 2.5)
        assert w == max(one.area, two.area)
        assert one.area == pytest.approx(pa[a].mesh.triangle_areas()[one.triangles].sum())


def test_weighted_triangle_graph():
    g = max_weight_spanning_tree(graph_from_edges(
        ["R", "A", "B"], {("A", "R"): 5, ("B", "R"): 2, ("A", "B"): 1}, "R"))
    assert sorted(g.tree) == [("A", "R"), ("B", "R")]
    assert g.order == ["A", "B"]
    assert g.tree_weight() == 7


def test_zero_weight_pairs_have_no_edge():
    g = graph_from_edges(["R", "A", "B"], {("A", "R"): 1.0, ("B", "R"): 0.0}, "R")
    assert set(g.edges) == {("A", "R")}
    g = max_weight_spanning_tree(g)
    assert g.disconnected
    assert g.order == ["A", "B"]


def test_path_graph_tree_is_the_path():
    nodes = ["R", "P1", "P2", "P3", "P4"]
    edges = {(nodes[i], nodes[i + 1]): float(i + 1) for i in range(4)}
    g = max_weight_spanning_tree(graph_from_edges(nodes, edges, "R"))
    assert sorted(g.tree) == sorted(tuple(sorted(e)) for e in edges)
    assert g.order == ["P1", "P2", "P3", "P4"]


def _random_graph(rng, n):
    nodes = ["R"] + [f"P{i}" for i in range(1, n)]
    while True:
        edges = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.6:
                    # small integers force plenty of ties
                    edges[(nodes[i], nodes[j])] = float(rng.integers(1, 6))
        g = graph_from_edges(nodes, edges, "R")
        if g.edges and not max_weight_spanning_tree(g).disconnected:
            return nodes, edges


def test_tree_weight_matches_exhaustive_search():
    rng = np.random.default_rng(11)
    for trial in range(100):
        n = int(rng.integers(2, 9))
        nodes, edges = _random_graph(rng, n)
        g = max_weight_spanning_tree(graph_from_edges(nodes, edges, "R"))
        assert g.tree_weight() == max_spanning_tree_weight(nodes, g.edges), trial
        assert sorted(g.order) == sorted(nodes[1:])


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from(["A", "B", "C", "D"]), st.floats(0.5, 10.0), min_size=2))
def test_direct_attachments_ordered_by_reference_area(ref_areas):
    g = max_weight_spanning_tree(graph_from_edges(
        ["R"] + sorted(ref_areas), {(k, "R"): v for k, v in ref_areas.items()}, "R"))
    assert g.order == sorted(ref_areas, key=lambda k: (-ref_areas[k], k))


def test_deterministic_tie_break():
    edges = {("A", "R"): 1.0, ("B", "R"): 1.0, ("A", "B"): 1.0}
    orders = {tuple(max_weight_spanning_tree(graph_from_edges(["R", "A", "B"], edges, "R")).tree)
              for _ in range(5)}
    assert orders == {(("A", "B"), ("A", "R"))}


def test_assembly_errors():
    parts, ref = _blocks()
    with pytest.raises(ContactError):
        assembly_graph(parts[:1], ref)
    with pytest.raises(ContactError):
        assembly_graph([parts[0], Part("A", parts[1].mesh)], ref)
    with pytest.raises(ContactError):
        max_weight_spanning_tree(graph_from_edges(["R", "A"], {}, "R"))


def test_json_and_csv(tmp_path):
    parts, ref = _blocks()
    g = assembly_graph(parts, ref, threshold=2.5)
    d = json.loads(json.dumps(g.to_dict()))
    assert {"parts", "edges", "tree", "order"} <= set(d)
    assert d["parts"] == ["A", "B", "C"]
    g.write_csv(tmp_path / "c.csv")
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["part", "reference_contact_area"]
    assert [r[0] for r in rows[1:]] == ["A", "B", "C"]
    assert float(rows[2][1]) == 0.0


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("CSK_THREADS", "3")
    assert thread_cap() == 3
    parts, ref = _blocks()
    monkeypatch.setenv("CSK_THREADS", "1")
    one = assembly_graph(parts, ref, threshold=2.5).to_dict()
    monkeypatch.setenv("CSK_THREADS", "4")
    assert assembly_graph(parts, ref, threshold=2.5).to_dict() == one
