"""Deterministic synthetic shapes used by tests, benchmarks and examples."""
from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh, merge_meshes


def cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned cube with 8 vertices and 12 outward-facing triangles."""
    v = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
    v = (v - 0.5) * size + np.asarray(center, float)
    t = [[0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5], [0, 4, 5], [0, 5, 1],
         [2, 3, 7], [2, 7, 6], [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3]]
    return TriangleMesh(v, t)


def icosphere(subdivisions: int = 3, radius: float = 1.0, center=(0.0, 0.0, 0.0),
              jitter: float = 0.0, seed: int = 0) -> TriangleMesh:
    """Subdivided icosahedron projected to a sphere.

    ``jitter`` perturbs each vertex radius by a relative amount drawn from a
    seeded generator; exact cospherical samples are valid Delaunay input but
    make every in-sphere test degenerate.
    """
    p = (1 + 5 ** 0.5) / 2
    v = [[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0], [0, -1, p], [0, 1, p],
         [0, -1, -p], [0, 1, -p], [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9],
         [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2],
         [3, 2, 6], [3, 6, 8], [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10],
         [8, 6, 7], [9, 8, 1]]
    verts = [np.array(x, float) / np.linalg.norm(x) for x in v]
    faces = f
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = nf
    V = np.array(verts)
    r = np.full(len(V), radius, float)
    if jitter:
        r *= 1 + jitter * np.random.default_rng(seed).uniform(-1, 1, len(V))
    return TriangleMesh(V * r[:, None] + np.asarray(center, float), faces)


def torus(R: float = 10.0, r: float = 4.0, n_major: int = 48, n_minor: int = 24,
          twist: bool = True, phase: float = 0.0) -> TriangleMesh:
    """Parametric torus around the z axis, outward normals.

    ``twist`` offsets alternate rings by half a step, which avoids the
    massively cocircular vertex sets of a plain lattice. Without it every
    quad is a planar isosceles trapezoid. ``phase`` rotates the minor angle;
    a generic value keeps rings off common horizontal planes.
    """
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    u = 2 * np.pi * i / n_major
    v = 2 * np.pi * (j + (0.5 * (i % 2) if twist else 0.0)) / n_minor + phase
    x = (R + r * np.cos(v)) * np.cos(u)
    y = (R + r * np.cos(v)) * np.sin(u)
    z = r * np.sin(v)
    V = np.stack([x, y, z], -1).reshape(-1, 3)

    def idx(a, b):
        return (a % n_major) * n_minor + (b % n_minor)

    T = []
    for a in range(n_major):
        for b in range(n_minor):
            if twist and a % 2 == 1:
                p00, p01 = idx(a, b), idx(a, b + 1)
                p10, p11 = idx(a + 1, b + 1), idx(a + 1, b + 2)
            else:
                p00, p01 = idx(a, b), idx(a, b + 1)
                p10, p11 = idx(a + 1, b), idx(a + 1, b + 1)
            T.append([p00, p10, p11])
            T.append([p00, p11, p01])
    return TriangleMesh(V, T)


def two_spheres(gap: float = 3.0, subdivisions: int = 2) -> TriangleMesh:
    a = icosphere(subdivisions, 1.0, (-gap / 2, 0, 0))
    b = icosphere(subdivisions, 1.0, (gap / 2, 0, 0))
    return merge_meshes([a, b])


def coarse_torus(faces: int = 500) -> TriangleMesh:
    """Low-resolution torus standing in for a decimated model (``faces`` = 2*n*m)."""
    n_minor = 10
    n_major = max(3, faces // (2 * n_minor))
    return torus(10.0, 4.0, n_major, n_minor, twist=False, phase=0.1)


def _stitch(outer, inner, n_out, n_in, flip=False):
    """Triangulate the band between two loops given as (id, angle) lists."""
    tris = []
    i = j = 0
    while i < n_out or j < n_in:
        a0, a1 = outer[i % n_out], outer[(i + 1) % n_out]
        b0, b1 = inner[j % n_in], inner[(j + 1) % n_in]
        ta = a1[1] + (2 * np.pi if i + 1 >= n_out else 0)
        tb = b1[1] + (2 * np.pi if j + 1 >= n_in else 0)
        if j >= n_in or (i < n_out and ta <= tb):
            tris.append([a0[0], a1[0], b0[0]])
            i += 1
        else:
            tris.append([a0[0], b1[0], b0[0]])
            j += 1
    if flip:
        tris = [t[::-1] for t in tris]
    return tris


def _holed_cube(side: float, rings: list, floor_z: float, n_around: int,
                floor_step: float | None = None) -> TriangleMesh:
    """Cube centred at the origin with a surface of revolution cut into its top.

    ``rings`` lists ``(radius, z)`` from the rim on the top face downwards;
    the hole closes at the point ``(0, 0, floor_z)``. A flat floor is
    sampled by concentric rings about ``floor_step`` apart.
    """
    rad_last, z_last = rings[-1]
    if floor_step and rad_last > floor_step:
        m = int(np.ceil(rad_last / floor_step))
        rings = list(rings) + [(rad_last * (1 - k / m), z_last) for k in range(1, m)]
    h = side / 2
    corners = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    V = [corners]
    T = [[0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5], [0, 4, 5], [0, 5, 1],
         [2, 3, 7], [2, 7, 6], [0, 2, 6], [0, 6, 4]]
    th = 2 * np.pi * np.arange(n_around) / n_around
    for rad, z in rings:
        V.append(np.c_[rad * np.cos(th), rad * np.sin(th), np.full(n_around, z)])

    def ring(k, j):
        return 8 + k * n_around + j % n_around

    last = len(rings) - 1
    for k in range(last):
        for j in range(n_around):
            a, b = ring(k, j), ring(k, j + 1)
            c, d = ring(k + 1, j), ring(k + 1, j + 1)
            T += [[a, d, c], [a, b, d]]
    bottom = 8 + len(rings) * n_around
    V.append(np.array([[0.0, 0.0, floor_z]]))
    for j in range(n_around):
        T.append([bottom, ring(last, j), ring(last, j + 1)])
    # top face: band between the square outline and the rim
    top = [1, 5, 7, 3]
    ang = [np.arctan2(corners[i, 1], corners[i, 0]) % (2 * np.pi) for i in top]
    order = np.argsort(ang)
    outer = [(top[i], ang[i]) for i in order]
    inner = [(ring(0, j), th[j]) for j in range(n_around)]
    T += _stitch(outer, inner, 4, n_around)
    return TriangleMesh(np.vstack(V), T)


def blind_bore(side: float = 6.0, radius: float = 1.0, depth: float = 4.0,
               n_around: int = 64, dz: float = 0.1) -> TriangleMesh:
    """Cube centred at the origin with a cylindrical blind hole drilled down from the top."""
    h = side / 2
    n = int(round(depth / dz))
    rings = [(radius, h - depth * k / n) for k in range(n + 1)]
    return _holed_cube(side, rings, h - depth, n_around, dz)


def dimpled_cube(side: float = 2.0, radius: float = 0.5, n_around: int = 64,
                 n_rings: int = 16) -> TriangleMesh:
    """Cube centred at the origin with a hemispherical dimple centred on its top face."""
    h = side / 2
    phi = 0.5 * np.pi * np.arange(n_rings) / n_rings
    rings = [(radius * np.cos(p), h - radius * np.sin(p)) for p in phi]
    return _holed_cube(side, rings, h - radius, n_around)



def flask_pocket(side: float = 6.0, mouth: float = 1.5, neck: float = 0.75,
                 depth: float = 4.0, n_around: int = 64, n_rings: int = 40) -> TriangleMesh:
    """Cube with a pocket that narrows to ``neck`` halfway down and widens again.

    The radius follows ``(mouth + neck)/2 + (mouth - neck)/2 * cos(2 pi s / depth)``
    for depth ``s``; the floor is flat.
    """
    h = side / 2
    s = depth * np.arange(n_rings + 1) / n_rings
    r = (mouth + neck) / 2 + (mouth - neck) / 2 * np.cos(2 * np.pi * s / depth)
    return _holed_cube(side, list(zip(r, h - s)), h - depth, n_around, depth / n_rings)

def _plate_sdf(X, centers, outer, hole, w):
    """Distance to a rounded plate: a flat region in z=0 thickened by ``w``.

    The region is the union of discs of radius ``outer - w`` around
    ``centers`` (joined by their hull strip) minus discs of radius
    ``hole + w``; the result is smooth with genus ``len(centers)``.
    """
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    cx = np.asarray([c[0] for c in centers])
    lo, hi = cx.min(), cx.max()
    # 2-D distance to the stadium through the centres (capsule along x)
    px = np.clip(x, lo, hi)
    d_out = np.hypot(x - px, y) - outer
    d_holes = np.max([hole - np.hypot(x - c[0], y - c[1]) for c in centers], axis=0)
    d2 = np.maximum(d_out, d_holes)
    return np.hypot(np.maximum(d2 + w, 0.0), z) - w


def mesh_sdf(sdf, lo, hi, resolution: float) -> TriangleMesh:
    """Marching-cubes mesh of ``{sdf <= 0}`` sampled on a grid over ``[lo, hi]``.

    ``sdf`` maps an ``(..., 3)`` array of points to values; the box must
    contain the shape with at least one cell of margin.
    """
    from skimage.measure import marching_cubes
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    axes = [np.arange(lo[i], hi[i] + resolution / 2, resolution) for i in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    verts, faces, _, _ = marching_cubes(sdf(X), 0.0, spacing=(resolution,) * 3,
                                        allow_degenerate=False)
    mesh = TriangleMesh(verts + lo, faces)
    a, b, c = mesh.corners().transpose(1, 0, 2)
    if np.einsum("ij,ij->i", a, np.cross(b, c)).sum() < 0:
        mesh = mesh.flipped()
    return mesh


def holed_plate(n_holes: int = 2, spacing: float = 14.0, outer: float = 7.0, hole: float = 2.5,
                thickness: float = 3.0, resolution: float = 0.5) -> TriangleMesh:
    """Smooth plate with ``n_holes`` through-holes (genus ``n_holes``) via marching cubes."""
    w = thickness / 2
    centers = [((i - (n_holes - 1) / 2) * spacing, 0.0) for i in range(n_holes)]
    half = np.array([spacing * (n_holes - 1) / 2 + outer, outer, w]) + 2 * resolution
    return mesh_sdf(lambda X: _plate_sdf(X, centers, outer, hole, w), -half, half, resolution)


def torus_sdf(X, R, r):
    return np.hypot(np.hypot(X[..., 0], X[..., 1]) - R, X[..., 2]) - r


def sealed_torus(R: float = 6.0, r: float = 3.0, membrane: float = 1.0,
                 resolution: float = 0.25) -> TriangleMesh:
    """Torus whose hole is closed by a flat membrane of thickness ``membrane`` at z = 0."""
    def sdf(X):
        rho = np.hypot(X[..., 0], X[..., 1])
        disc = np.maximum(np.abs(X[..., 2]) - membrane / 2, rho - R)
        return np.minimum(torus_sdf(X, R, r), disc)
    half = np.array([R + r, R + r, r]) + 2 * resolution
    return mesh_sdf(sdf, -half, half, resolution)


def _smooth_max(a, b, k):
    """Polynomial smooth maximum; rounds the crease where ``a == b`` over width ``k``."""
    h = np.maximum(k - np.abs(a - b), 0.0) / k
    return np.maximum(a, b) + h * h * k / 4.0


# five ports around the equator, related by 72-degree turns about z
PORT_DIRECTIONS = tuple((float(np.cos(a)), float(np.sin(a)), 0.0)
                        for a in 2 * np.pi * np.arange(5) / 5)


def ported_shell(outer: float = 6.0, inner: float = 3.0, port: float = 1.5,
                 membrane: float = 0.5, directions=PORT_DIRECTIONS, sealed=None,
                 fillet: float = 0.8, resolution: float = 0.3) -> TriangleMesh:
    """Spherical shell pierced by radial ports, some sealed by a thin membrane.

    ``sealed`` lists the indices of the sealed ports (default: all). Port
    rims are rounded over ``fillet`` so that the only thin walls are the
    membranes, flat discs of thickness ``membrane`` centred in the wall.
    """
    D = np.asarray(directions, float)
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    mid = 0.5 * (outer + inner)
    sealed = range(len(D)) if sealed is None else set(sealed)

    def sdf(X):
        rho = np.linalg.norm(X, axis=-1)
        shell = np.maximum(rho - outer, inner - rho)
        solid = shell
        seals = np.full(X.shape[:-1], np.inf)
        for i, d in enumerate(D):
            along = X @ d
            radial = np.linalg.norm(X - along[..., None] * d, axis=-1)
            bore = np.where(along > 0, port - radial, -outer)
            solid = _smooth_max(solid, bore, fillet)
            if i not in sealed:
                continue
            disc = np.maximum(np.abs(along - mid) - membrane / 2, radial - port - fillet)
            seals = np.minimum(seals, np.maximum(disc, shell))
        return np.minimum(solid, seals)
    half = np.full(3, outer + 2 * resolution)
    return mesh_sdf(sdf, -half, half, resolution)


def capsid_shell(**kw) -> TriangleMesh:
    """Five-fold symmetric shell with four open ports and one sealed one (port 0, on +x)."""
    return ported_shell(sealed=(0,), **kw)


def _weld(V, T, decimals: int = 9) -> TriangleMesh:
    """Merge coincident vertices of a face soup."""
    _, first, inv = np.unique(np.round(V, decimals), axis=0, return_index=True,
                              return_inverse=True)
    return TriangleMesh(V[first], inv.ravel()[T])


def _planar_patch(uv, origin, u, v, outward):
    """Triangulate planar points given in face coordinates; wind towards ``outward``."""
    from scipy.spatial import Delaunay
    tri = Delaunay(uv, qhull_options="Qbb Qc Qz Q12").simplices
    P = origin + uv[:, :1] * u + uv[:, 1:] * v
    n = np.cross(P[tri[:, 1]] - P[tri[:, 0]], P[tri[:, 2]] - P[tri[:, 0]])
    flip = n @ outward < 0
    tri[flip] = tri[flip][:, ::-1]
    return P, tri


def wedge(length: float = 4.0, half_angle: float = 15.0, width: float = 4.0,
          spacing: float = 0.1) -> TriangleMesh:
    """Knife-edge prism: a wedge of ``half_angle`` degrees with its edge along y at x = 0."""
    ta = np.tan(np.radians(half_angle))
    n = int(np.ceil(length / spacing))
    m = int(np.ceil(width / spacing))
    xs = np.linspace(0, length, n + 1)
    ys = np.linspace(-width / 2, width / 2, m + 1)
    zs = np.linspace(-1, 1, 2 * n + 1) * length * ta
    parts = []
    g = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
    for s in (1, -1):  # flanks, z = +-x tan(a)
        d = np.array([1.0, 0.0, s * ta])
        parts.append(_planar_patch(g, np.zeros(3), d, np.array([0, 1.0, 0]),
                                   np.array([-ta, 0, s * 1.0])))
    gb = np.stack(np.meshgrid(ys, zs, indexing="ij"), -1).reshape(-1, 2)
    parts.append(_planar_patch(gb, np.array([length, 0, 0]), np.array([0, 1.0, 0]),
                               np.array([0, 0, 1.0]), np.array([1.0, 0, 0])))
    # end caps: row i holds 2i + 1 points spanning the wedge's thickness at x_i
    cap = np.concatenate([np.column_stack([np.full(2 * i + 1, x),
                                           np.linspace(-x * ta, x * ta, 2 * i + 1)])
                          for i, x in enumerate(xs)])
    for s in (1, -1):
        parts.append(_planar_patch(cap, np.array([0, s * width / 2, 0]), np.array([1.0, 0, 0]),
                                   np.array([0, 0, 1.0]), np.array([0, s * 1.0, 0])))
    V, T, off = [], [], 0
    for P, tri in parts:
        V.append(P)
        T.append(tri + off)
        off += len(P)
    return _weld(np.concatenate(V), np.concatenate(T))


def square(size: float = 1.0, z: float = 0.0, n: int = 4, offset=(0.0, 0.0)) -> TriangleMesh:
    """Open ``size`` x ``size`` square in the plane ``z``, split into ``2 n^2`` triangles."""
    s = np.linspace(0.0, size, n + 1)
    X, Y = np.meshgrid(s + offset[0], s + offset[1], indexing="ij")
    V = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, float(z))])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = (i * (n + 1) + j).ravel()
    b, c, d = a + n + 1, a + 1, a + n + 2
    T = np.concatenate([np.column_stack([a, b, d]), np.column_stack([a, d, c])])
    return TriangleMesh(V, T)


def box(lo, hi, n: int = 4) -> TriangleMesh:
    """Closed axis-aligned box, each face split into ``2 n^2`` triangles."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    V, T, off = [], [], 0
    for axis in range(3):
        u, v = [k for k in range(3) if k != axis]
        for side in (0, 1):
            q = square(1.0, 0.0, n)
            P = np.zeros((q.n_vertices, 3))
            P[:, axis] = (lo if side == 0 else hi)[axis]
            P[:, u] = lo[u] + q.vertices[:, 0] * (hi - lo)[u]
            P[:, v] = lo[v] + q.vertices[:, 1] * (hi - lo)[v]
            tri = q.triangles
            # (u, v, axis) is right-handed for axis 0 and 2, left-handed for 1
            outward = (side == 1) == (axis != 1)
            V.append(P)
            T.append((tri if outward else tri[:, ::-1]) + off)
            off += len(P)
    return _weld(np.concatenate(V), np.concatenate(T))
