# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Delaunay insertion, BVH queries, fast marching.

Behaviour matches ``_pykernels``; uncertain predicate signs are delegated to
the exact Python ``Predicates`` object.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY
from libc.stdlib cimport malloc, realloc, free

from .predicates import Predicates
from ._pykernels import initial_simplex, _start_triangulation

cnp.import_array()

DEF O3D_ERR = 7.771561172376103e-16
DEF ISP_ERR = 1.7763568394002532e-15


cdef inline double orient_f(const double* a, const double* b, const double* c,
                            const double* d) noexcept nogil:
    cdef double adx = a[0] - d[0], bdx = b[0] - d[0], cdx = c[0] - d[0]
    cdef double ady = a[1] - d[1], bdy = b[1] - d[1], cdy = c[1] - d[1]
    cdef double adz = a[2] - d[2], bdz = b[2] - d[2], cdz = c[2] - d[2]
    cdef double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy
    cdef double cdxady = cdx * ady, adxcdy = adx * cdy
    cdef double adxbdy = adx * bdy, bdxady = bdx * ady
    cdef double det = (adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy)
                       + cdz * (adxbdy - bdxady))
    cdef double perm = ((fabs(bdxcdy) + fabs(cdxbdy)) * fabs(adz)
                        + (fabs(cdxady) + fabs(adxcdy)) * fabs(bdz)
                        + (fabs(adxbdy) + fabs(bdxady)) * fabs(cdz))
    if fabs(det) > O3D_ERR * perm:
        return det
    return 0.0


cdef inline double insphere_f(const double* a, const double* b, const double* c,
                              const double* d, const double* e) noexcept nogil:
    cdef double aex = a[0] - e[0], bex = b[0] - e[0], cex = c[0] - e[0], dex = d[0] - e[0]
    cdef double aey = a[1] - e[1], bey = b[1] - e[1], cey = c[1] - e[1], dey = d[1] - e[1]
    cdef double aez = a[2] - e[2], bez = b[2] - e[2], cez = c[2] - e[2], dez = d[2] - e[2]
    cdef double aexbey = aex * bey, bexaey = bex * aey
    cdef double bexcey = bex * cey, cexbey = cex * bey
    cdef double cexdey = cex * dey, dexcey = dex * cey
    cdef double dexaey = dex * aey, aexdey = aex * dey
    cdef double aexcey = aex * cey, cexaey = cex * aey
    cdef double bexdey = bex * dey, dexbey = dex * bey
    cdef double ab = aexbey - bexaey, bc = bexcey - cexbey, cd = cexdey - dexcey
    cdef double da = dexaey - aexdey, ac = aexcey - cexaey, bd = bexdey - dexbey
    cdef double abc = aez * bc - bez * ac + cez * ab
    cdef double bcd = bez * cd - cez * bd + dez * bc
    cdef double cda = cez * da + dez * ac + aez * cd
    cdef double dab = dez * ab + aez * bd + bez * da
    cdef double alift = aex * aex + aey * aey + aez * aez
    cdef double blift = bex * bex + bey * bey + bez * bez
    cdef double clift = cex * cex + cey * cey + cez * cez
    cdef double dlift = dex * dex + dey * dey + dez * dez
    cdef double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)
    cdef double aezp = fabs(aez), bezp = fabs(bez), cezp = fabs(cez), dezp = fabs(dez)
    cdef double abp = fabs(aexbey) + fabs(bexaey)
    cdef double bcp = fabs(bexcey) + fabs(cexbey)
    cdef double cdp = fabs(cexdey) + fabs(dexcey)
    cdef double dap = fabs(dexaey) + fabs(aexdey)
    cdef double acp = fabs(aexcey) + fabs(cexaey)
    cdef double bdp = fabs(bexdey) + fabs(dexbey)
    cdef double perm = ((cdp * bezp + bdp * cezp + bcp * dezp) * alift
                        + (dap * cezp + acp * dezp + cdp * aezp) * blift
                        + (abp * dezp + bdp * aezp + dap * bezp) * clift
                        + (bcp * aezp + acp * bezp + abp * cezp) * dlift)
    if fabs(det) > ISP_ERR * perm:
        return det
    return 0.0


cdef class _Tets:
    cdef long* tv
    cdef long* tn
    cdef char* alive
    cdef long* mark
    cdef char* inconf
    cdef long n
    cdef long cap

    def __cinit__(self, long cap):
        self.cap = cap
        self.n = 0
        self.tv = <long*>malloc(cap * 4 * sizeof(long))
        self.tn = <long*>malloc(cap * 4 * sizeof(long))
        self.alive = <char*>malloc(cap)
        self.mark = <long*>malloc(cap * sizeof(long))
        self.inconf = <char*>malloc(cap)
        if not (self.tv and self.tn and self.alive and self.mark and self.inconf):
            raise MemoryError()

    def __dealloc__(self):
        free(self.tv); free(self.tn); free(self.alive)
        free(self.mark); free(self.inconf)

    cdef long new_slot(self) except -1:
        cdef long t
        if self.n == self.cap:
            self.cap *= 2
            self.tv = <long*>realloc(self.tv, self.cap * 4 * sizeof(long))
            self.tn = <long*>realloc(self.tn, self.cap * 4 * sizeof(long))
            self.alive = <char*>realloc(self.alive, self.cap)
            self.mark = <long*>realloc(self.mark, self.cap * sizeof(long))
            self.inconf = <char*>realloc(self.inconf, self.cap)
            if not (self.tv and self.tn and self.alive and self.mark and self.inconf):
                raise MemoryError()
        t = self.n
        self.n += 1
        self.alive[t] = 1
        self.mark[t] = -1
        self.inconf[t] = 0
        return t


cdef inline bint has_inf(long* v) noexcept nogil:
    return v[0] < 0 or v[1] < 0 or v[2] < 0 or v[3] < 0


def delaunay_build(points, order, ranks):
    """Compiled twin of ``_pykernels.delaunay_build``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef double* X = <double*>P.data
    cdef const long[::1] ordv = np.ascontiguousarray(order, dtype=np.int_)
    cdef long npts = ordv.shape[0]
    pred = Predicates(P, ranks)
    first, tv0, tn0 = _start_triangulation(pred, [int(i) for i in order])
    cdef _Tets T = _Tets(max(64, 8 * npts))
    cdef long t, i, j, k, m, u, w, nb, c, p, nt, steps, q
    for t in range(5):
        T.new_slot()
        for i in range(4):
            T.tv[4 * t + i] = tv0[t][i]
            T.tn[4 * t + i] = tn0[t][i]
    cdef char* used = <char*>malloc(npts if npts > 0 else 1)
    for i in range(npts):
        used[i] = 0
    for i in first:
        used[i] = 1

    cdef long* stack = <long*>malloc(1024 * sizeof(long))
    cdef long stack_cap = 1024
    cdef long* cavity = <long*>malloc(1024 * sizeof(long))
    cdef long cav_cap = 1024
    cdef long* bnd_t = <long*>malloc(1024 * sizeof(long))
    cdef long* bnd_i = <long*>malloc(1024 * sizeof(long))
    cdef long bnd_cap = 1024
    cdef long* pend_key = <long*>malloc(2048 * 2 * sizeof(long))
    cdef long* pend_t = <long*>malloc(2048 * sizeof(long))
    cdef long* pend_k = <long*>malloc(2048 * sizeof(long))
    cdef long pend_cap = 2048
    cdef long* freelist = <long*>malloc(1024 * sizeof(long))
    cdef long free_cap = 1024
    cdef long nfree = 0
    cdef long nstack, ncav, nbnd, npend
    cdef long last = 0
    cdef unsigned long seed = 12345
    cdef long r
    cdef long sub[4]
    cdef double det
    cdef bint moved, conf
    cdef long stamp = 0
    cdef long* v
    cdef long kinf
    cdef cnp.int64_t[::1] rmv
    cdef cnp.int64_t[:, ::1] tvo, tno

    try:
        for q in range(npts):
            p = ordv[q]
            if used[p]:
                continue
            # ---- locate
            t = last
            v = &T.tv[4 * t]
            if has_inf(v):
                for i in range(4):
                    if v[i] < 0:
                        t = T.tn[4 * t + i]
                        break
            steps = 0
            while not has_inf(&T.tv[4 * t]):
                seed = (seed * 1103515245 + 12345) & 0x7FFFFFFF
                r = seed >> 16
                moved = False
                for j in range(4):
                    i = (j + r) & 3
                    for m in range(4):
                        sub[m] = T.tv[4 * t + m]
                    sub[i] = p
                    det = orient_f(X + 3 * sub[0], X + 3 * sub[1], X + 3 * sub[2], X + 3 * sub[3])
                    if det == 0.0:
                        det = pred.orient_exact(sub[0], sub[1], sub[2], sub[3])
                    if det < 0:
                        t = T.tn[4 * t + i]
                        moved = True
                        break
                if not moved:
                    break
                steps += 1
                if steps > 4 * T.n + 100:
                    raise RuntimeError("point location failed to terminate")
            # ---- cavity search
            stamp += 1
            T.mark[t] = stamp
            T.inconf[t] = 1
            stack[0] = t
            nstack = 1
            cavity[0] = t
            ncav = 1
            nbnd = 0
            while nstack > 0:
                nstack -= 1
                c = stack[nstack]
                for i in range(4):
                    nb = T.tn[4 * c + i]
                    if T.mark[nb] == stamp and T.inconf[nb]:
                        continue
                    if T.mark[nb] != stamp:
                        T.mark[nb] = stamp
                        v = &T.tv[4 * nb]
                        if has_inf(v):
                            kinf = 0
                            for m in range(4):
                                sub[m] = v[m]
                                if v[m] < 0:
                                    kinf = m
                            sub[kinf] = p
                            det = orient_f(X + 3 * sub[0], X + 3 * sub[1], X + 3 * sub[2], X + 3 * sub[3])
                            if det > 0:
                                conf = True
                            elif det < 0:
                                conf = False
                            else:
                                conf = pred.ghost_conflict([v[0], v[1], v[2], v[3]], p)
                        else:
                            det = insphere_f(X + 3 * v[0], X + 3 * v[1], X + 3 * v[2], X + 3 * v[3], X + 3 * p)
                            if det == 0.0:
                                det = pred.insphere_sos_exact(v[0], v[1], v[2], v[3], p)
                            conf = det > 0
                        T.inconf[nb] = conf
                        if conf:
                            if nstack == stack_cap:
                                stack_cap *= 2
                                stack = <long*>realloc(stack, stack_cap * sizeof(long))
                            stack[nstack] = nb
                            nstack += 1
                            if ncav == cav_cap:
                                cav_cap *= 2
                                cavity = <long*>realloc(cavity, cav_cap * sizeof(long))
                            cavity[ncav] = nb
                            ncav += 1
                            continue
                    if nbnd == bnd_cap:
                        bnd_cap *= 2
                        bnd_t = <long*>realloc(bnd_t, bnd_cap * sizeof(long))
                        bnd_i = <long*>realloc(bnd_i, bnd_cap * sizeof(long))
                    bnd_t[nbnd] = c
                    bnd_i[nbnd] = i
                    nbnd += 1
            # ---- retriangulate
            if 3 * nbnd > pend_cap:
                pend_cap = 3 * nbnd
                pend_key = <long*>realloc(pend_key, pend_cap * 2 * sizeof(long))
                pend_t = <long*>realloc(pend_t, pend_cap * sizeof(long))
                pend_k = <long*>realloc(pend_k, pend_cap * sizeof(long))
            npend = 0
            last = -1
            for m in range(nbnd):
                c = bnd_t[m]
                i = bnd_i[m]
                nb = T.tn[4 * c + i]
                if nfree > 0:
                    nfree -= 1
                    nt = freelist[nfree]
                    T.alive[nt] = 1
                else:
                    nt = T.new_slot()
                for k in range(4):
                    T.tv[4 * nt + k] = T.tv[4 * c + k]
                    T.tn[4 * nt + k] = -1
                T.tv[4 * nt + i] = p
                T.tn[4 * nt + i] = nb
                for k in range(4):
                    if T.tn[4 * nb + k] == c:
                        T.tn[4 * nb + k] = nt
                        break
                for k in range(4):
                    if k == i:
                        continue
                    u = -2
                    w = -2
                    for j in range(4):
                        if j != i and j != k:
                            if u == -2:
                                u = T.tv[4 * nt + j]
                            else:
                                w = T.tv[4 * nt + j]
                    if w < u:
                        u, w = w, u
                    for j in range(npend):
                        if pend_key[2 * j] == u and pend_key[2 * j + 1] == w:
                            T.tn[4 * nt + k] = pend_t[j]
                            T.tn[4 * pend_t[j] + pend_k[j]] = nt
                            npend -= 1
                            pend_key[2 * j] = pend_key[2 * npend]
                            pend_key[2 * j + 1] = pend_key[2 * npend + 1]
                            pend_t[j] = pend_t[npend]
                            pend_k[j] = pend_k[npend]
                            break
                    else:
                        pend_key[2 * npend] = u
                        pend_key[2 * npend + 1] = w
                        pend_t[npend] = nt
                        pend_k[npend] = k
                        npend += 1
                if last < 0 and not has_inf(&T.tv[4 * nt]):
                    last = nt
            if npend != 0:
                raise RuntimeError("cavity boundary not closed")
            if last < 0:
                last = nt
            for m in range(ncav):
                c = cavity[m]
                T.alive[c] = 0
                if nfree == free_cap:
                    free_cap *= 2
                    freelist = <long*>realloc(freelist, free_cap * sizeof(long))
                freelist[nfree] = c
                nfree += 1
            used[p] = 1

        remap = np.full(T.n, -1, dtype=np.int64)
        k = 0
        for t in range(T.n):
            if T.alive[t]:
                remap[t] = k
                k += 1
        tv_out = np.empty((k, 4), dtype=np.int64)
        tn_out = np.empty((k, 4), dtype=np.int64)
        rmv = remap
        tvo = tv_out
        tno = tn_out
        for t in range(T.n):
            if T.alive[t]:
                m = rmv[t]
                for i in range(4):
                    tvo[m, i] = T.tv[4 * t + i]
                    tno[m, i] = rmv[T.tn[4 * t + i]]
        return tv_out, tn_out, pred.exact_calls
    finally:
        free(used); free(stack); free(cavity); free(bnd_t); free(bnd_i)
        free(pend_key); free(pend_t); free(pend_k); free(freelist)


# ---------------------------------------------------------------------------
# BVH queries
# ---------------------------------------------------------------------------

cdef inline double dot3(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef double closest_dist2(const double* p, const double* a, const double* b,
                          const double* c) noexcept nogil:
    cdef double ab[3], ac[3], ap[3], bp[3], cp[3], x[3]
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, s, denom
    cdef int i
    for i in range(3):
        ab[i] = b[i] - a[i]
        ac[i] = c[i] - a[i]
        ap[i] = p[i] - a[i]
    d1 = dot3(ab, ap)
    d2 = dot3(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        for i in range(3):
            x[i] = a[i]
        return _d2(p, x)
    for i in range(3):
        bp[i] = p[i] - b[i]
    d3 = dot3(ab, bp)
    d4 = dot3(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        for i in range(3):
            x[i] = b[i]
        return _d2(p, x)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        s = d1 / (d1 - d3)
        for i in range(3):
            x[i] = a[i] + s * ab[i]
        return _d2(p, x)
    for i in range(3):
        cp[i] = p[i] - c[i]
    d5 = dot3(ab, cp)
    d6 = dot3(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        for i in range(3):
            x[i] = c[i]
        return _d2(p, x)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        s = d2 / (d2 - d6)
        for i in range(3):
            x[i] = a[i] + s * ac[i]
        return _d2(p, x)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        s = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        for i in range(3):
            x[i] = b[i] + s * (c[i] - b[i])
        return _d2(p, x)
    denom = 1.0 / (va + vb + vc)
    for i in range(3):
        x[i] = a[i] + ab[i] * (vb * denom) + ac[i] * (vc * denom)
    return _d2(p, x)


cdef inline double _d2(const double* p, const double* x) noexcept nogil:
    cdef double dx = p[0] - x[0], dy = p[1] - x[1], dz = p[2] - x[2]
    return dx * dx + dy * dy + dz * dz


cdef inline double box_d2(const double* p, const double* lo, const double* hi) noexcept nogil:
    cdef double s = 0.0, e
    cdef int i
    for i in range(3):
        if p[i] < lo[i]:
            e = lo[i] - p[i]
            s += e * e
        elif p[i] > hi[i]:
            e = p[i] - hi[i]
            s += e * e
    return s


def bvh_closest(queries, tris, lo, hi, left, right, start, count, order):
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, :, ::1] TR = np.ascontiguousarray(tris, dtype=np.float64)
    cdef const double[:, ::1] LO = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:, ::1] HI = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const cnp.int64_t[::1] L = np.ascontiguousarray(left, dtype=np.int64)
    cdef const cnp.int64_t[::1] R = np.ascontiguousarray(right, dtype=np.int64)
    cdef const cnp.int64_t[::1] S = np.ascontiguousarray(start, dtype=np.int64)
    cdef const cnp.int64_t[::1] C = np.ascontiguousarray(count, dtype=np.int64)
    cdef const cnp.int64_t[::1] O = np.ascontiguousarray(order, dtype=np.int64)
    cdef long m = Q.shape[0]
    out_d = np.empty(m)
    out_t = np.empty(m, dtype=np.int64)
    cdef double[::1] od = out_d
    cdef cnp.int64_t[::1] ot = out_t
    cdef long stack[256]
    cdef double sd[256]
    cdef long ns, node, q, k, t, best_t, l, r
    cdef double best, bd, d, dl, dr
    with nogil:
        for q in range(m):
            best = INFINITY
            best_t = -1
            stack[0] = 0
            sd[0] = box_d2(&Q[q, 0], &LO[0, 0], &HI[0, 0])
            ns = 1
            while ns > 0:
                ns -= 1
                node = stack[ns]
                bd = sd[ns]
                if bd > best:
                    continue
                if L[node] < 0:
                    for k in range(S[node], S[node] + C[node]):
                        t = O[k]
                        d = closest_dist2(&Q[q, 0], &TR[t, 0, 0], &TR[t, 1, 0], &TR[t, 2, 0])
                        if d < best or (d == best and t < best_t):
                            best = d
                            best_t = t
                else:
                    l = L[node]
                    r = R[node]
                    dl = box_d2(&Q[q, 0], &LO[l, 0], &HI[l, 0])
                    dr = box_d2(&Q[q, 0], &LO[r, 0], &HI[r, 0])
                    if dl < dr:
                        stack[ns] = r; sd[ns] = dr; ns += 1
                        stack[ns] = l; sd[ns] = dl; ns += 1
                    else:
                        stack[ns] = l; sd[ns] = dl; ns += 1
                        stack[ns] = r; sd[ns] = dr; ns += 1
            od[q] = best
            ot[q] = best_t
    return out_d, out_t


def ray_crossings(queries, direction, tris, lo, hi, left, right, start, count,
                  order, double tol):
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, :, ::1] TR = np.ascontiguousarray(tris, dtype=np.float64)
    cdef const double[:, ::1] LO = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:, ::1] HI = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const cnp.int64_t[::1] L = np.ascontiguousarray(left, dtype=np.int64)
    cdef const cnp.int64_t[::1] R = np.ascontiguousarray(right, dtype=np.int64)
    cdef const cnp.int64_t[::1] S = np.ascontiguousarray(start, dtype=np.int64)
    cdef const cnp.int64_t[::1] C = np.ascontiguousarray(count, dtype=np.int64)
    cdef const cnp.int64_t[::1] O = np.ascontiguousarray(order, dtype=np.int64)
    cdef double d[3]
    cdef double inv[3]
    cdef int i
    for i in range(3):
        d[i] = direction[i]
        inv[i] = 1.0 / d[i] if d[i] != 0.0 else INFINITY
    cdef long m = Q.shape[0]
    hits = np.zeros(m, dtype=np.int64)
    bad = np.zeros(m, dtype=np.uint8)
    cdef cnp.int64_t[::1] H = hits
    cdef cnp.uint8_t[::1] B = bad
    cdef long stack[256]
    cdef long ns, node, q, k, t
    cdef double tmin, tmax, t1, t2, det, inv_det, u, v, tt
    cdef double e1[3], e2[3], pv[3], tv[3], qv[3]
    cdef const double* a
    with nogil:
        for q in range(m):
            stack[0] = 0
            ns = 1
            while ns > 0:
                ns -= 1
                node = stack[ns]
                tmin = -INFINITY
                tmax = INFINITY
                for i in range(3):
                    t1 = (LO[node, i] - Q[q, i]) * inv[i]
                    t2 = (HI[node, i] - Q[q, i]) * inv[i]
                    if t1 != t1:
                        t1 = -INFINITY
                    if t2 != t2:
                        t2 = INFINITY
                    if t1 > t2:
                        t1, t2 = t2, t1
                    if t1 > tmin:
                        tmin = t1
                    if t2 < tmax:
                        tmax = t2
                if tmax < tmin or tmax < 0.0:
                    continue
                if L[node] >= 0:
                    stack[ns] = L[node]; ns += 1
                    stack[ns] = R[node]; ns += 1
                    continue
                for k in range(S[node], S[node] + C[node]):
                    t = O[k]
                    a = &TR[t, 0, 0]
                    for i in range(3):
                        e1[i] = TR[t, 1, i] - a[i]
                        e2[i] = TR[t, 2, i] - a[i]
                        tv[i] = Q[q, i] - a[i]
                    pv[0] = d[1] * e2[2] - d[2] * e2[1]
                    pv[1] = d[2] * e2[0] - d[0] * e2[2]
                    pv[2] = d[0] * e2[1] - d[1] * e2[0]
                    det = dot3(e1, pv)
                    if fabs(det) < 1e-300:
                        continue
                    inv_det = 1.0 / det
                    u = dot3(tv, pv) * inv_det
                    qv[0] = tv[1] * e1[2] - tv[2] * e1[1]
                    qv[1] = tv[2] * e1[0] - tv[0] * e1[2]
                    qv[2] = tv[0] * e1[1] - tv[1] * e1[0]
                    v = dot3(d, qv) * inv_det
                    tt = dot3(e2, qv) * inv_det
                    if u < -tol or v < -tol or u + v > 1.0 + tol or tt < -tol:
                        continue
                    if u < tol or v < tol or u + v > 1.0 - tol or tt < tol:
                        B[q] = 1
                        continue
                    H[q] += 1
    return hits, bad.astype(bool)


# ---------------------------------------------------------------------------
# Fast marching
# ---------------------------------------------------------------------------

cdef struct HeapItem:
    double key
    long idx


cdef inline void heap_push(HeapItem* heap, long* n, double key, long idx) noexcept nogil:
    cdef long i = n[0]
    cdef long parent
    n[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent].key <= key:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i].key = key
    heap[i].idx = idx


cdef inline HeapItem heap_pop(HeapItem* heap, long* n) noexcept nogil:
    cdef HeapItem top = heap[0]
    cdef HeapItem last
    cdef long i = 0, child
    n[0] -= 1
    last = heap[n[0]]
    while True:
        child = 2 * i + 1
        if child >= n[0]:
            break
        if child + 1 < n[0] and heap[child + 1].key < heap[child].key:
            child += 1
        if heap[child].key >= last.key:
            break
        heap[i] = heap[child]
        i = child
    heap[i] = last
    return top


cdef double solve_eikonal(double a, double b, double c, double h) noexcept nogil:
    cdef double v[3]
    cdef double tmp, u, s, s2, disc
    cdef int n, k, tmp_i
    v[0] = a; v[1] = b; v[2] = c
    if v[0] > v[1]:
        tmp = v[0]; v[0] = v[1]; v[1] = tmp
    if v[1] > v[2]:
        tmp = v[1]; v[1] = v[2]; v[2] = tmp
    if v[0] > v[1]:
        tmp = v[0]; v[0] = v[1]; v[1] = tmp
    u = v[0] + h
    for k in range(1, 3):
        if v[k] == INFINITY or u <= v[k]:
            break
        n = k + 1
        s = 0.0
        s2 = 0.0
        for tmp_i in range(n):
            s += v[tmp_i]
            s2 += v[tmp_i] * v[tmp_i]
        disc = s * s - n * (s2 - h * h)
        if disc < 0:
            break
        u = (s + sqrt(disc)) / n
    return u


cdef inline double axis_min(double[:, :, ::1] D, cnp.int8_t[:, :, ::1] st,
                            long i, long j, long k, int ax,
                            long nx, long ny, long nz) noexcept nogil:
    cdef double m = INFINITY
    cdef long ii, jj, kk
    cdef int s
    for s in range(-1, 2, 2):
        ii = i; jj = j; kk = k
        if ax == 0:
            ii += s
        elif ax == 1:
            jj += s
        else:
            kk += s
        if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and st[ii, jj, kk] == 2:
            if D[ii, jj, kk] < m:
                m = D[ii, jj, kk]
    return m


def fast_march(dist, known, double h, double limit=INFINITY):
    d_arr = np.array(dist, dtype=np.float64, copy=True, order="C")
    known_arr = np.ascontiguousarray(known, dtype=bool)
    d_arr[~known_arr] = np.inf
    st_arr = np.where(known_arr, 2, 0).astype(np.int8)
    cdef double[:, :, ::1] D = d_arr
    cdef cnp.int8_t[:, :, ::1] st = st_arr
    cdef long nx = D.shape[0], ny = D.shape[1], nz = D.shape[2]
    cdef long total = nx * ny * nz
    cdef long cap = max(1024, total)
    cdef HeapItem* heap = <HeapItem*>malloc(cap * sizeof(HeapItem))
    cdef long n = 0
    cdef long i, j, k, ii, jj, kk, idx, nb
    cdef int s, ax
    cdef double u
    cdef HeapItem top
    seeds = np.flatnonzero(known_arr.ravel()).astype(np.int64)
    cdef cnp.int64_t[::1] sv = seeds
    cdef long q
    try:
        with nogil:
            for q in range(sv.shape[0]):
                idx = sv[q]
                i = idx // (ny * nz); j = (idx // nz) % ny; k = idx % nz
                for ax in range(3):
                    for s in range(-1, 2, 2):
                        ii = i; jj = j; kk = k
                        if ax == 0:
                            ii += s
                        elif ax == 1:
                            jj += s
                        else:
                            kk += s
                        if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and st[ii, jj, kk] == 0:
                            st[ii, jj, kk] = 1
                            u = solve_eikonal(axis_min(D, st, ii, jj, kk, 0, nx, ny, nz),
                                              axis_min(D, st, ii, jj, kk, 1, nx, ny, nz),
                                              axis_min(D, st, ii, jj, kk, 2, nx, ny, nz), h)
                            D[ii, jj, kk] = u
                            if n == cap:
                                cap *= 2
                                heap = <HeapItem*>realloc(heap, cap * sizeof(HeapItem))
                            heap_push(heap, &n, u, (ii * ny + jj) * nz + kk)
            while n > 0:
                top = heap_pop(heap, &n)
                idx = top.idx
                i = idx // (ny * nz); j = (idx // nz) % ny; k = idx % nz
                if st[i, j, k] == 2 or top.key > D[i, j, k]:
                    continue
                if top.key > limit:
                    break
                st[i, j, k] = 2
                for ax in range(3):
                    for s in range(-1, 2, 2):
                        ii = i; jj = j; kk = k
                        if ax == 0:
                            ii += s
                        elif ax == 1:
                            jj += s
                        else:
                            kk += s
                        if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz and st[ii, jj, kk] != 2:
                            st[ii, jj, kk] = 1
                            u = solve_eikonal(axis_min(D, st, ii, jj, kk, 0, nx, ny, nz),
                                              axis_min(D, st, ii, jj, kk, 1, nx, ny, nz),
                                              axis_min(D, st, ii, jj, kk, 2, nx, ny, nz), h)
                            if u < D[ii, jj, kk]:
                                D[ii, jj, kk] = u
                                if n == cap:
                                    cap *= 2
                                    heap = <HeapItem*>realloc(heap, cap * sizeof(HeapItem))
                                heap_push(heap, &n, u, (ii * ny + jj) * nz + kk)
    finally:
        free(heap)
    d_arr[st_arr != 2] = np.inf
    return d_arr
