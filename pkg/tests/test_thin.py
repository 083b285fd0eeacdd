import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspace import fixtures as fx
from cspace.features import SpaceModel
from cspace.mesh import Label, merge_meshes
from cspace.thin import (ThinRegion, detect_thin_regions, interior_medial_axis,
                         missing_tunnel_geometry, tag_thin, tunnel_mesh)

from conftest import model


@pytest.fixture(scope="module")
def sealed():
    return model("sealed_torus")


@pytest.fixture(scope="module")
def sealed_axis(sealed):
    return interior_medial_axis(sealed)


def test_shell_medial_axis_is_mid_sphere():
    m = merge_meshes([fx.icosphere(4, 3.0), fx.icosphere(4, 1.5).flipped()])
    sm = SpaceModel(m)
    ax = interior_medial_axis(sm)
    c = sm.dt.circumcenters[ax.vertices]
    e = m.corners()
    spacing = np.linalg.norm(e[:, 0] - e[:, 1], axis=1).mean()
    assert len(c) > 1000
    assert np.abs(np.linalg.norm(c, axis=1) - 2.25).max() <= 2 * spacing
    # every medial vertex is about half the wall thickness from the surface
    assert np.allclose(ax.h, 0.75, atol=spacing)


def test_slab_medial_axis_is_mid_plane():
    slab = fx.mesh_sdf(lambda X: np.max(np.abs(X) - np.array([4, 4, 0.5]), axis=-1),
                       [-4.6] * 3, [4.6] * 3, 0.2)
    sm = SpaceModel(slab)
    c = sm.dt.circumcenters[interior_medial_axis(sm).vertices]
    core = (np.abs(c[:, 0]) < 3) & (np.abs(c[:, 1]) < 3)
    assert core.sum() > 500
    assert np.abs(c[core, 2]).max() < 1e-6


def test_sealed_torus_one_thin_region(sealed, sealed_axis):
    regs = detect_thin_regions(sealed, 2.0, sealed_axis)
    assert len(regs) == 1
    r = regs[0]
    assert r.parent == "U1"
    assert np.all(r.h < 2.0)
    assert abs(r.centroid[2]) < 0.1
    assert np.hypot(*r.centroid[:2]) < 1.0


def test_sealed_torus_nothing_below_membrane_half_thickness(sealed, sealed_axis):
    assert detect_thin_regions(sealed, 0.5, sealed_axis) == []


def test_missing_tunnel_crosses_membrane(sealed, sealed_axis):
    r = detect_thin_regions(sealed, 2.0, sealed_axis)[0]
    tun = r.suggested_tunnel
    assert tun is not None
    P = sealed.dt.points[sealed.dt.tets[tun.tets]]
    assert P[..., 2].min() < 0 < P[..., 2].max()
    # confined to the membrane in the torus hole
    assert np.abs(P[..., 2]).max() <= 0.5 + 0.15
    assert np.hypot(P[..., 0], P[..., 1]).max() <= 6.0 - 3.0 + 0.3
    tm = tunnel_mesh(sealed, tun)
    assert tm.balanced
    assert np.all(tm.labels == int(Label.TUNNEL_INTERIOR))


@settings(max_examples=8, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_thin_cells_grow_with_gamma(g1, g2):
    sm = model("sealed_torus")
    ax = interior_medial_axis(sm)
    lo, hi = sorted((g1, g2))
    a = np.concatenate([r.cells for r in detect_thin_regions(sm, lo, ax, suggest=False)] or [[]])
    b = np.concatenate([r.cells for r in detect_thin_regions(sm, hi, ax, suggest=False)] or [[]])
    assert np.isin(a, b).all()


def test_ported_shell_finds_every_membrane():
    sm = model("ported_shell")
    regs = detect_thin_regions(sm, 1.0)
    assert len(regs) == 5
    dirs = np.array(fx.PORT_DIRECTIONS, float)
    for r in regs:
        cos = dirs @ r.centroid / np.linalg.norm(r.centroid)
        assert cos.max() > 0.99
        assert np.linalg.norm(r.centroid) == pytest.approx(4.5, abs=0.1)
        assert r.suggested_tunnel is not None
    hit = [int(np.argmax(dirs @ r.centroid)) for r in regs]
    assert sorted(hit) == list(range(5))


def test_thick_convex_shape_has_no_thin_region():
    sm = model("sphere")
    assert detect_thin_regions(sm, 0.5) == []


def test_gamma_must_be_positive(sealed):
    for g in (0.0, -1.0):
        with pytest.raises(ValueError):
            detect_thin_regions(sealed, g)


def test_missing_tunnel_rejects_empty_region(sealed):
    empty = ThinRegion("U1", np.zeros(0, np.int64), 1.0, np.zeros(3))
    with pytest.raises(ValueError):
        missing_tunnel_geometry(sealed, empty)


def test_tagged_mesh_and_json(sealed, sealed_axis):
    regs = detect_thin_regions(sealed, 2.0, sealed_axis)
    tagged = tag_thin(sealed, regs)
    thin = tagged.labels == int(Label.THIN)
    assert thin.any() and not thin.all()
    zc = tagged.corners()[thin][..., 2].mean(axis=1)
    assert np.abs(zc).max() < 1.0
    d = json.loads(json.dumps(regs[0].to_dict()))
    assert set(d) == {"parent", "gamma_A", "cell_count", "centroid", "has_tunnel_suggestion"}
    assert d["has_tunnel_suggestion"] is True


def test_deterministic(sealed, sealed_axis):
    a = detect_thin_regions(sealed, 2.0, sealed_axis)
    b = detect_thin_regions(sealed, 2.0, sealed_axis)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_region_without_maxima_gives_no_tunnel(sealed, sealed_axis):
    r = detect_thin_regions(sealed, 2.0, sealed_axis)[0]
    cells = r.cells[~sealed.flow.is_max[r.cells]]
    plain = ThinRegion("U1", cells, 2.0, r.centroid)
    assert missing_tunnel_geometry(sealed, plain) is None
    assert plain.to_dict()["has_tunnel_suggestion"] is False


def test_capsid_thin_region_only_at_sealed_port():
    sm = SpaceModel(fx.capsid_shell())
    tau = 0.5
    regs = detect_thin_regions(sm, 2 * tau)
    assert len(regs) == 1
    c = regs[0].centroid
    assert np.dot(c / np.linalg.norm(c), fx.PORT_DIRECTIONS[0]) > 0.99
    assert detect_thin_regions(sm, tau / 2) == []
