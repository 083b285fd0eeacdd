"""Exact geometric predicates with symbolic perturbation.

Orientation and in-sphere tests first run a floating-point evaluation with a
static error bound (Shewchuk's formulas and constants). When the bound cannot
certify the sign, the determinant is recomputed exactly on integer
coordinates: every float64 is a dyadic rational, so all input points are
scaled once by a common power of two.

Insphere ties are broken by perturbing the lifting map with infinitesimal
weights ordered by a seeded rank per point (Devillers & Teillaud style). The
same ranks break cocircular ties on hull faces.
"""
from __future__ import annotations

import numpy as np

INF = -1

_EPS = 2.0 ** -53
O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS
ISP_ERRBOUND = (16.0 + 224.0 * _EPS) * _EPS
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def integer_coordinates(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Scale float64 coordinates by a common power of two into exact ints."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    mant, expo = np.frexp(pts)
    m = (mant * 2.0 ** 53).astype(np.int64)
    e = expo.astype(np.int64) - 53
    nz = m != 0
    shift = int(e[nz].min()) if nz.any() else 0
    out = []
    for mi, ei in zip(m.tolist(), (e - shift).tolist()):
        out.append(tuple(int(a) << int(b) if a else 0 for a, b in zip(mi, ei)))
    return out


def orient3d_float(a, b, c, d) -> float:
    """Shewchuk orient3d with a certified sign, or 0.0 when uncertain."""
    adx = a[0] - d[0]; bdx = b[0] - d[0]; cdx = c[0] - d[0]
    ady = a[1] - d[1]; bdy = b[1] - d[1]; cdy = c[1] - d[1]
    adz = a[2] - d[2]; bdz = b[2] - d[2]; cdz = c[2] - d[2]
    bdxcdy = bdx * cdy; cdxbdy = cdx * bdy
    cdxady = cdx * ady; adxcdy = adx * cdy
    adxbdy = adx * bdy; bdxady = bdx * ady
    det = (adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy)
           + cdz * (adxbdy - bdxady))
    perm = ((abs(bdxcdy) + abs(cdxbdy)) * abs(adz)
            + (abs(cdxady) + abs(adxcdy)) * abs(bdz)
            + (abs(adxbdy) + abs(bdxady)) * abs(cdz))
    if abs(det) > O3D_ERRBOUND * perm:
        return det
    return 0.0


def orient3d_exact(a, b, c, d) -> int:
    adx = a[0] - d[0]; bdx = b[0] - d[0]; cdx = c[0] - d[0]
    ady = a[1] - d[1]; bdy = b[1] - d[1]; cdy = c[1] - d[1]
    adz = a[2] - d[2]; bdz = b[2] - d[2]; cdz = c[2] - d[2]
    det = (adz * (bdx * cdy - cdx * bdy) + bdz * (cdx * ady - adx * cdy)
           + cdz * (adx * bdy - bdx * ady))
    return _sign(det)


def insphere_float(a, b, c, d, e) -> float:
    """Shewchuk insphere with a certified sign, or 0.0 when uncertain."""
    aex = a[0] - e[0]; bex = b[0] - e[0]; cex = c[0] - e[0]; dex = d[0] - e[0]
    aey = a[1] - e[1]; bey = b[1] - e[1]; cey = c[1] - e[1]; dey = d[1] - e[1]
    aez = a[2] - e[2]; bez = b[2] - e[2]; cez = c[2] - e[2]; dez = d[2] - e[2]
    aexbey = aex * bey; bexaey = bex * aey; ab = aexbey - bexaey
    bexcey = bex * cey; cexbey = cex * bey; bc = bexcey - cexbey
    cexdey = cex * dey; dexcey = dex * cey; cd = cexdey - dexcey
    dexaey = dex * aey; aexdey = aex * dey; da = dexaey - aexdey
    aexcey = aex * cey; cexaey = cex * aey; ac = aexcey - cexaey
    bexdey = bex * dey; dexbey = dex * bey; bd = bexdey - dexbey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)
    aezp = abs(aez); bezp = abs(bez); cezp = abs(cez); dezp = abs(dez)
    abp = abs(aexbey) + abs(bexaey)
    bcp = abs(bexcey) + abs(cexbey)
    cdp = abs(cexdey) + abs(dexcey)
    dap = abs(dexaey) + abs(aexdey)
    acp = abs(aexcey) + abs(cexaey)
    bdp = abs(bexdey) + abs(dexbey)
    perm = ((cdp * bezp + bdp * cezp + bcp * dezp) * alift
            + (dap * cezp + acp * dezp + cdp * aezp) * blift
            + (abp * dezp + bdp * aezp + dap * bezp) * clift
            + (bcp * aezp + acp * bezp + abp * cezp) * dlift)
    if abs(det) > ISP_ERRBOUND * perm:
        return det
    return 0.0


def insphere_exact(a, b, c, d, e) -> int:
    aex = a[0] - e[0]; bex = b[0] - e[0]; cex = c[0] - e[0]; dex = d[0] - e[0]
    aey = a[1] - e[1]; bey = b[1] - e[1]; cey = c[1] - e[1]; dey = d[1] - e[1]
    aez = a[2] - e[2]; bez = b[2] - e[2]; cez = c[2] - e[2]; dez = d[2] - e[2]
    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    return _sign((dlift * abc - clift * dab) + (blift * cda - alift * bcd))


def orient2d_exact(a, b, c) -> int:
    return _sign((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]))


class Predicates:
    """Exact, perturbed predicates over an indexed point set.

    Parameters
    ----------
    points : (n, 3) float64 array
    ranks : (n,) int array
        Perturbation priority; a higher rank receives the larger
        infinitesimal lifting weight.

    Orientation follows Shewchuk: ``orient(a, b, c, d) > 0`` when ``d`` lies
    below the plane through ``a, b, c`` seen counterclockwise. Tetrahedra
    are stored positively oriented.
    """

    def __init__(self, points: np.ndarray, ranks: np.ndarray):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self._pl = self.points.tolist()
        self.ranks = np.asarray(ranks, dtype=np.int64)
        self._rk = self.ranks.tolist()
        self._ints: list | None = None
        self.exact_calls = 0

    @property
    def ints(self):
        if self._ints is None:
            self._ints = integer_coordinates(self.points)
        return self._ints

    # -- plain signs ---------------------------------------------------

    def orient(self, a: int, b: int, c: int, d: int) -> int:
        pl = self._pl
        det = orient3d_float(pl[a], pl[b], pl[c], pl[d])
        if det != 0.0:
            return 1 if det > 0 else -1
        self.exact_calls += 1
        q = self.ints
        return orient3d_exact(q[a], q[b], q[c], q[d])

    def insphere(self, a: int, b: int, c: int, d: int, e: int) -> int:
        pl = self._pl
        det = insphere_float(pl[a], pl[b], pl[c], pl[d], pl[e])
        if det != 0.0:
            return 1 if det > 0 else -1
        self.exact_calls += 1
        q = self.ints
        return insphere_exact(q[a], q[b], q[c], q[d], q[e])

    def orient_exact(self, a: int, b: int, c: int, d: int) -> int:
        """Exact orientation, for callers whose float filter already failed."""
        self.exact_calls += 1
        q = self.ints
        return orient3d_exact(q[a], q[b], q[c], q[d])

    def insphere_sos_exact(self, a: int, b: int, c: int, d: int, e: int) -> int:
        """Perturbed insphere, for callers whose float filter already failed."""
        self.exact_calls += 1
        q = self.ints
        s = insphere_exact(q[a], q[b], q[c], q[d], q[e])
        if s != 0:
            return s
        return self.insphere_tiebreak(a, b, c, d, e)

    # -- perturbed -----------------------------------------------------

    def insphere_sos(self, a: int, b: int, c: int, d: int, e: int) -> int:
        """+1 if ``e`` is inside the perturbed circumsphere of positive ``abcd``."""
        s = self.insphere(a, b, c, d, e)
        if s != 0:
            return s
        return self.insphere_tiebreak(a, b, c, d, e)

    def insphere_tiebreak(self, a: int, b: int, c: int, d: int, e: int) -> int:
        tet = [a, b, c, d]
        rk = self._rk
        for v in sorted(tet + [e], key=lambda i: -rk[i]):
            if v == e:
                return -1
            k = tet.index(v)
            sub = list(tet)
            sub[k] = e
            o = self.orient(*sub)
            if o != 0:
                return o
        raise AssertionError("perturbation failed to resolve insphere tie")

    def ghost_conflict(self, tet, p: int) -> bool:
        """Conflict test for a hull (ghost) tetrahedron containing INF."""
        k = tet.index(INF)
        sub = list(tet)
        sub[k] = p
        o = self.orient(*sub)
        if o != 0:
            return o > 0
        face = [v for v in tet if v != INF]
        return self.coplanar_in_circle(face[0], face[1], face[2], p)

    def coplanar_in_circle(self, p0: int, p1: int, p2: int, p: int) -> bool:
        """Perturbed bounded-side test for ``p`` coplanar with ``p0 p1 p2``."""
        q = self.ints
        a, b, c = q[p0], q[p1], q[p2]
        u = [b[i] - a[i] for i in range(3)]
        v = [c[i] - a[i] for i in range(3)]
        n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
             u[0] * v[1] - u[1] * v[0]]
        axis = max(range(3), key=lambda i: abs(n[i]))
        span = max(max(abs(x) for x in a), 1) * 4
        off = list(a)
        off[axis] += span
        o = orient3d_exact(a, b, c, off)
        s = insphere_exact(a, b, c, off, q[p]) * o
        self.exact_calls += 1
        if s != 0:
            return s > 0
        keep = [i for i in range(3) if i != axis]

        def o2(x, y, z):
            return orient2d_exact([x[keep[0]], x[keep[1]]],
                                  [y[keep[0]], y[keep[1]]],
                                  [z[keep[0]], z[keep[1]]])

        local = o2(a, b, c)
        rk = self._rk
        for w in sorted([p0, p1, p2, p], key=lambda i: -rk[i]):
            if w == p:
                return False
            tri = [a, b, c]
            tri[[p0, p1, p2].index(w)] = q[p]
            o = o2(*tri)
            if o != 0:
                return o == local
        raise AssertionError("perturbation failed to resolve circle tie")
