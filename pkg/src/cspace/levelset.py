"""Signed-distance grids and out-and-back front propagation.

A surface is rasterised to a signed distance grid (negative inside). Moving
the front outward at unit speed for time ``t`` and then back inward for the
same time is a morphological closing by a ball of radius ``t``; the points
it adds outside the original surface are the pockets. For constant speed the
front at time ``t`` is exactly a distance level set, so both passes are
computed as distance transforms rather than by time stepping.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage.measure import marching_cubes

from . import kernels
from .distance import DistanceField, OpenMeshError
from .mesh import BallSet, TriangleMesh

MIN_DIMS = 16
BAND = 3.0  # exact-distance band half-width, in grid spacings
GRID_MAGIC = "CSGRID1"


class GridError(ValueError):
    """Invalid grid parameters."""


class EmptySurfaceError(ValueError):
    """The requested level does not cut the grid."""


class PropagationOverflowError(RuntimeError):
    """The front hit the grid boundary before reaching sphere topology."""


@dataclass
class ScalarGrid:
    """Scalar values on a regular grid with isotropic spacing."""
    values: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.origin = np.asarray(self.origin, dtype=np.float64)
        if self.values.ndim != 3:
            raise GridError("grid values must be 3-D")

    @property
    def dims(self) -> tuple:
        return tuple(self.values.shape)

    @property
    def voxel_volume(self) -> float:
        return self.spacing ** 3

    def nodes(self) -> np.ndarray:
        """World coordinates of every node, shape ``dims + (3,)``."""
        axes = [self.origin[i] + self.spacing * np.arange(n) for i, n in enumerate(self.dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values) -> "ScalarGrid":
        return ScalarGrid(values, self.spacing, self.origin.copy())

    def save(self, path) -> None:
        """Write the ``CSGRID1`` format: ASCII header, little-endian float32 payload."""
        nx, ny, nz = self.dims
        o = [repr(float(x)) for x in self.origin]
        head = (f"{GRID_MAGIC}\ndims {nx} {ny} {nz}\nspacing {float(self.spacing)!r}\n"
                f"origin {o[0]} {o[1]} {o[2]}\n")
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(np.ascontiguousarray(self.values, dtype="<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "ScalarGrid":
        with open(path, "rb") as fh:
            if fh.readline().decode("ascii").strip() != GRID_MAGIC:
                raise GridError(f"{path}: not a {GRID_MAGIC} file")
            dims = tuple(int(x) for x in fh.readline().split()[1:])
            spacing = float(fh.readline().split()[1])
            origin = [float(x) for x in fh.readline().split()[1:]]
            data = np.frombuffer(fh.read(), dtype="<f4")
        if len(dims) != 3 or data.size != np.prod(dims):
            raise GridError(f"{path}: payload does not match header dims {dims}")
        return cls(data.reshape(dims).astype(np.float64), spacing, origin)


def _dims3(dims) -> tuple:
    d = (int(dims),) * 3 if np.isscalar(dims) else tuple(int(x) for x in dims)
    if len(d) != 3 or min(d) < MIN_DIMS:
        raise GridError(f"grid dims must be at least {MIN_DIMS} per axis, got {d}")
    return d


def _frame(lo, hi, dims, padding) -> tuple:
    """Isotropic spacing and origin covering ``[lo, hi]`` plus padding."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    ext = hi - lo
    pad = padding * ext.max() if padding is not None else 0.25 * ext.max()
    span = ext + 2 * pad
    h = float((span / (np.asarray(dims) - 1)).max())
    center = (lo + hi) / 2
    origin = center - h * (np.asarray(dims) - 1) / 2
    return h, origin


def _band_nodes(corners: np.ndarray, h: float, origin: np.ndarray, dims) -> np.ndarray:
    """Mask of nodes within ``BAND*h`` of some triangle's bounding box."""
    mask = np.zeros(dims, dtype=bool)
    lo = np.floor((corners.min(axis=1) - BAND * h - origin) / h).astype(int)
    hi = np.ceil((corners.max(axis=1) + BAND * h - origin) / h).astype(int)
    lo = np.clip(lo, 0, np.asarray(dims) - 1)
    hi = np.clip(hi, 0, np.asarray(dims) - 1)
    for (a, b, c), (x, y, z) in zip(lo, hi):
        mask[a:x + 1, b:y + 1, c:z + 1] = True
    return mask


def _extend(grid_vals: np.ndarray, known: np.ndarray, h: float) -> np.ndarray:
    """Fill unknown nodes by fast marching |value| outward from ``known``.

    The sign of each unknown region is taken from the known nodes it
    touches; a region cannot change sign without crossing the band.
    """
    mag = kernels.fast_march(np.abs(grid_vals), known, h)
    far = ~known
    lab, n = ndimage.label(far)
    sign = np.ones(n + 1)
    if n:
        # sign of a region = sign of a known neighbour
        grown = ndimage.grey_dilation(lab, size=(3, 3, 3))
        touch = known & (grown > 0)
        ids = grown[touch]
        neg = np.bincount(ids, weights=(grid_vals[touch] < 0), minlength=n + 1)
        tot = np.bincount(ids, minlength=n + 1)
        sign = np.where((tot > 0) & (neg * 2 > tot), -1.0, 1.0)
    out = np.where(known, grid_vals, sign[lab] * mag)
    return out


def rasterize_signed_distance(mesh: TriangleMesh, dims=64, padding: float | None = None,
                              field_: DistanceField | None = None) -> ScalarGrid:
    """Signed distance to ``mesh`` sampled on a grid (negative inside).

    Values are exact within ``BAND`` grid spacings of the surface and
    extended beyond by first-order fast marching. ``padding`` is the margin
    on each side as a fraction of the largest mesh extent (default 0.25).
    """
    if not mesh.closed:
        raise OpenMeshError("signed distance grid needs a closed mesh")
    dims = _dims3(dims)
    lo, hi = mesh.bounds()
    h, origin = _frame(lo, hi, dims, padding)
    band = _band_nodes(mesh.corners(), h, origin, dims)
    field_ = field_ or DistanceField(mesh)
    idx = np.nonzero(band)
    pts = origin + h * np.stack(idx, axis=1)
    vals = np.full(dims, np.inf)
    vals[idx] = field_.signed(pts)
    known = band & (np.abs(vals) <= BAND * h)
    vals = np.where(known, vals, 0.0)
    if not known.any():
        raise GridError("grid too coarse to resolve the surface")
    return ScalarGrid(_extend(vals, known, h), h, origin)


def balls_to_grid(balls: BallSet, dims=64, padding: float | None = None) -> ScalarGrid:
    """Grid of ``min_i(|x - c_i| - r_i)``, whose zero level is the union of balls."""
    if balls is None or len(balls.centers) == 0:
        raise GridError("empty ball set")
    dims = _dims3(dims)
    C = np.asarray(balls.centers, float)
    r = np.asarray(balls.radii, float)
    lo, hi = (C - r[:, None]).min(0), (C + r[:, None]).max(0)
    h, origin = _frame(lo, hi, dims, padding)
    grid = ScalarGrid(np.zeros(dims), h, origin)
    X = grid.nodes().reshape(-1, 3)
    tree = cKDTree(C)
    k = min(len(C), 8)
    d, j = tree.query(X, k=k)
    d, j = d.reshape(len(X), k), j.reshape(len(X), k)
    best = (d - r[j]).min(axis=1)
    # a farther ball can only win if its radius makes up the distance gap
    unsure = np.flatnonzero(d[:, -1] - r.max() < best) if k < len(C) else []
    for s in range(0, len(unsure), 4096):
        q = unsure[s:s + 4096]
        dd = np.linalg.norm(X[q, None, :] - C[None, :, :], axis=2) - r[None, :]
        best[q] = dd.min(axis=1)
    return grid.with_values(best.reshape(dims))


def extract_isosurface(grid: ScalarGrid, iso: float = 0.0) -> TriangleMesh:
    """Closed triangle mesh of ``{value <= iso}`` with outward normals.

    Nodes exactly at ``iso`` count as inside.
    """
    v = grid.values
    if not (v.min() <= iso < v.max()):
        raise EmptySurfaceError(f"level {iso} does not cut the grid values "
                                f"[{v.min():.4g}, {v.max():.4g}]")
    vals = np.where(v == iso, np.nextafter(iso, -np.inf), v)
    # pad with an outside layer so the surface is closed at the grid boundary
    fill = max(float(vals.max()), iso + grid.spacing)
    padded = np.pad(vals, 1, constant_values=fill)
    verts, faces, _, _ = marching_cubes(padded, level=iso, allow_degenerate=False)
    verts = grid.origin + grid.spacing * (verts - 1.0)
    mesh = TriangleMesh(verts, faces, permissive=True)
    a, b, c = mesh.corners().transpose(1, 0, 2)
    if np.einsum("ij,ij->i", a, np.cross(b, c)).sum() < 0:
        mesh = mesh.flipped()
    return mesh


def sphere_topology(grid: ScalarGrid, iso: float) -> bool:
    """``{value <= iso}`` is one connected piece bounded by a genus-0 surface."""
    inside = grid.values <= iso
    _, n = ndimage.label(inside)
    if n != 1:
        return False
    _, holes = ndimage.label(~inside)
    if holes != 1:  # enclosed cavity: surface has more than one component
        return False
    mesh = extract_isosurface(grid, iso)
    st = mesh.stats()
    return st.components == 1 and st.euler_char == 2


@dataclass
class PocketRegion:
    """Voxels outside the surface but inside its closing."""
    mask: np.ndarray
    grid: ScalarGrid = field(repr=False)
    source: tuple = ("sigma", "sigma_prime")

    @property
    def voxel_count(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> float:
        return self.voxel_count * self.grid.voxel_volume

    @property
    def empty(self) -> bool:
        return not self.mask.any()

    def boundary_mesh(self) -> TriangleMesh | None:
        if self.empty:
            return None
        g = self.grid.with_values(np.where(self.mask, -0.5, 0.5) * self.grid.spacing)
        return extract_isosurface(g, 0.0)


@dataclass
class OutAndBack:
    pocket: PocketRegion
    t_stop: float
    sigma_prime: ScalarGrid = field(repr=False)

    def sigma_prime_mesh(self) -> TriangleMesh:
        return extract_isosurface(self.sigma_prime, 0.0)


def _march_from_level(grid: ScalarGrid, iso: float) -> np.ndarray:
    """Unsigned distance to the ``iso`` level by fast marching.

    Nodes on either side of a crossing are seeded with the linearly
    interpolated distance along the grid edge.
    """
    h = grid.spacing
    phi = grid.values - iso
    known = np.zeros(phi.shape, dtype=bool)
    seed = np.full(phi.shape, np.inf)
    for ax in range(3):
        a = [slice(None)] * 3
        b = [slice(None)] * 3
        a[ax], b[ax] = slice(0, -1), slice(1, None)
        a, b = tuple(a), tuple(b)
        pa, pb = phi[a], phi[b]
        cross = (pa <= 0) != (pb <= 0)
        frac = np.where(cross, pa / np.where(cross, pa - pb, 1.0), 0.0)
        seed[a] = np.where(cross, np.minimum(seed[a], frac * h), seed[a])
        seed[b] = np.where(cross, np.minimum(seed[b], (1 - frac) * h), seed[b])
        known[a] |= cross
        known[b] |= cross
    return kernels.fast_march(np.where(known, seed, 0.0), known, h)


def redistance(grid: ScalarGrid) -> ScalarGrid:
    """Signed distance to the zero level of ``grid`` on the same nodes.

    Exact (against the extracted isosurface) within ``BAND`` spacings,
    fast-marched beyond; the sign follows the input.
    """
    d = _march_from_level(grid, 0.0)
    near = d <= BAND * grid.spacing
    idx = np.nonzero(near)
    pts = grid.origin + grid.spacing * np.stack(idx, axis=1)
    d[idx] = DistanceField(extract_isosurface(grid, 0.0)).unsigned(pts)
    return grid.with_values(np.where(grid.values <= 0, -d, d))


def closing_distance(grid: ScalarGrid, t: float) -> ScalarGrid:
    """A field whose zero level bounds the closing of ``{grid <= 0}`` by radius ``t``.

    The closing is the set of points at least ``t`` inside the dilation
    ``{grid <= t}``. Only nodes in the shell ``0 < grid <= t`` can change
    side; for them the field is ``t - distance to the dilated front``.
    Elsewhere it keeps the sign of the original (``grid`` inside, ``grid - t``
    outside the dilation). The distance comes from fast marching, then is
    recomputed exactly against the front's isosurface wherever it is within
    two spacings of ``t``, so first-order marching error cannot flip nodes.
    """
    v = grid.values
    out = np.where(v <= 0, v, v - t)
    shell = (v > 0) & (v <= t)
    if not shell.any():
        return grid.with_values(out)
    d = _march_from_level(grid, t)
    close = shell & (np.abs(d - t) <= 2 * grid.spacing)
    if close.any():
        front = extract_isosurface(grid, t)
        idx = np.nonzero(close)
        pts = grid.origin + grid.spacing * np.stack(idx, axis=1)
        d[idx] = DistanceField(front).unsigned(pts)
    out[shell] = t - d[shell]
    return grid.with_values(out)


def out_and_back(grid: ScalarGrid, t: float) -> OutAndBack:
    """Close the surface by radius ``t`` and return the added outside voxels."""
    if t <= 0:
        empty = np.zeros(grid.dims, dtype=bool)
        return OutAndBack(PocketRegion(empty, grid), 0.0, grid)
    if _touches_boundary(grid, t):
        raise PropagationOverflowError(
            f"dilation by {t:.4g} reaches the grid boundary; enlarge the padding")
    # closed set: points at least t inside the dilated region
    sigma_prime = closing_distance(grid, t)
    pocket = (sigma_prime.values <= 0) & (grid.values > 0)
    return OutAndBack(PocketRegion(pocket, grid), float(t), sigma_prime)


def _half_width(grid: ScalarGrid) -> float:
    return 0.5 * grid.spacing * (min(grid.dims) - 1)


def _touches_boundary(grid: ScalarGrid, t: float) -> bool:
    """``{grid <= t}`` reaches within one spacing of the grid boundary."""
    v = grid.values
    inner = v[2:-2, 2:-2, 2:-2]
    return bool((v <= t).sum() != (inner <= t).sum())


def stop_time(grid: ScalarGrid) -> float:
    """Smallest multiple of the spacing at which the dilated shape is a sphere."""
    h = grid.spacing
    limit = _half_width(grid)
    k = 1
    while k * h < limit and not _touches_boundary(grid, k * h):
        try:
            if sphere_topology(grid, k * h):
                return k * h
        except EmptySurfaceError:
            break
        k += 1
    raise PropagationOverflowError("no dilation within the grid reaches sphere topology; "
                                   "enlarge the padding")


def propagate_out_and_back(grid: ScalarGrid, t: float | None = None) -> OutAndBack:
    """Out-and-back closing with the stop time chosen automatically.

    ``t`` overrides the stop time (0 gives an empty pocket).
    """
    if t is None:
        t = stop_time(grid)
    return out_and_back(grid, t)


def eikonal_residual(grid: ScalarGrid) -> np.ndarray:
    """``| |grad phi| - 1 |`` by central differences (interior nodes)."""
    g = np.gradient(grid.values, grid.spacing)
    return np.abs(np.sqrt(sum(x * x for x in g)) - 1.0)


__all__ = ["ScalarGrid", "GridError", "EmptySurfaceError", "PropagationOverflowError",
           "rasterize_signed_distance", "balls_to_grid", "extract_isosurface",
           "sphere_topology", "PocketRegion", "OutAndBack", "closing_distance",
           "redistance", "out_and_back", "stop_time", "propagate_out_and_back", "eikonal_residual"]
