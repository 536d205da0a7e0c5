# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the scans and searches in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


def floors_argmax(U, Py_ssize_t target, floors, active, double tol):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] fl = np.ascontiguousarray(floors, dtype=np.float64)
    cdef const cnp.uint8_t[::1] act = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t K = u.shape[0], n = u.shape[1], k, a
    cdef double best = -INFINITY
    cdef Py_ssize_t arg = -1
    cdef bint ok
    for k in range(K):
        if u[k, target] <= best and arg >= 0:
            continue
        ok = True
        for a in range(n):
            if act[a] and u[k, a] < fl[a] - tol:
                ok = False
                break
        if ok and (arg < 0 or u[k, target] > best):
            best = u[k, target]
            arg = k
    return float(best), int(arg)


cdef inline void _offer(double[:, ::1] V, long long[:, ::1] W, Py_ssize_t i, Py_ssize_t j,
                        double v, long long k) noexcept nogil:
    if v > V[i, j] or (v == V[i, j] and (W[i, j] < 0 or k < W[i, j])):
        V[i, j] = v
        W[i, j] = k


def ihr_pairs(U, cur, double tol):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cur, dtype=np.float64)
    cdef Py_ssize_t K = u.shape[0], n = u.shape[1], k, a, i, j, h1, h2, nh
    Vn = np.full((n, n), -np.inf)
    Wn = np.full((n, n), -1, dtype=np.int64)
    # per-agent best over rows with nobody hurt
    b0n = np.full(n, -np.inf)
    i0n = np.full(n, -1, dtype=np.int64)
    # rows hurting exactly h: best utility of each agent, indexed [h, i]
    b1n = np.full((n, n), -np.inf)
    i1n = np.full((n, n), -1, dtype=np.int64)
    cdef double[:, ::1] V = Vn
    cdef long long[:, ::1] W = Wn
    cdef double[::1] b0 = b0n
    cdef long long[::1] i0 = i0n
    cdef double[:, ::1] b1 = b1n
    cdef long long[:, ::1] i1 = i1n
    with nogil:
        for k in range(K):
            nh = 0
            h1 = -1
            h2 = -1
            for a in range(n):
                if u[k, a] < c[a] - tol:
                    nh += 1
                    if nh == 1:
                        h1 = a
                    elif nh == 2:
                        h2 = a
                    else:
                        break
            if nh == 0:
                for i in range(n):
                    if u[k, i] > b0[i]:
                        b0[i] = u[k, i]
                        i0[i] = k
            elif nh == 1:
                for i in range(n):
                    if u[k, i] > b1[h1, i]:
                        b1[h1, i] = u[k, i]
                        i1[h1, i] = k
            elif nh == 2:
                _offer(V, W, h1, h2, u[k, h1], k)
                _offer(V, W, h2, h1, u[k, h2], k)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if i0[i] >= 0:
                    _offer(V, W, i, j, b0[i], i0[i])
                if i1[j, i] >= 0:
                    _offer(V, W, i, j, b1[j, i], i1[j, i])
                if i1[i, i] >= 0:
                    _offer(V, W, i, j, b1[i, i], i1[i, i])
        for i in range(n):
            V[i, i] = -INFINITY
            W[i, i] = -1
    return Vn, Wn


cdef Py_ssize_t _ratios(const double[:, ::1] u, const double[::1] c, Py_ssize_t k, double tol,
                        double *r, Py_ssize_t *hurt) noexcept nogil:
    """Fill ``r`` with the non-hurt ratios of row k sorted descending; return their count."""
    cdef Py_ssize_t n = u.shape[1], a, q = 0, h = 0, i, j
    cdef double x
    for a in range(n):
        if u[k, a] < c[a] - tol:
            h += 1
        else:
            if c[a] == 0:
                x = INFINITY if u[k, a] > 0 else 1.0
            else:
                x = u[k, a] / c[a]
            j = q
            while j > 0 and r[j - 1] < x:
                r[j] = r[j - 1]
                j -= 1
            r[j] = x
            q += 1
    hurt[0] = h
    return q


def ghr_sort(U, cur, Py_ssize_t min_k, double alpha, double tol):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cur, dtype=np.float64)
    cdef Py_ssize_t K = u.shape[0], n = u.shape[1], k, q, kk, h = 0
    rbuf = np.empty(n + 1)
    cdef double[::1] r = rbuf
    cdef double best = -INFINITY, f, cand, top
    cdef Py_ssize_t brow = -1, bk = 0
    cdef bint strict = False, violates = False, any_valid = False
    if min_k < 1:
        min_k = 1
    with nogil:
        for k in range(K):
            q = _ratios(u, c, k, tol, &r[0], &h)
            for kk in range(min_k, q + 1):
                any_valid = True
                f = <double>kk / <double>(kk + h)
                cand = f * r[kk - 1]
                top = f * r[0]
                if cand >= alpha - tol and top > alpha + tol:
                    violates = True
                if cand > best:
                    best = cand
        if any_valid and best > -INFINITY:
            for k in range(K):
                q = _ratios(u, c, k, tol, &r[0], &h)
                for kk in range(min_k, q + 1):
                    f = <double>kk / <double>(kk + h)
                    cand = f * r[kk - 1]
                    if (best == INFINITY and cand == INFINITY) or (best < INFINITY and cand >= best - tol):
                        if brow < 0:
                            brow = k
                            bk = kk
                        if best == INFINITY or f * r[0] > best + tol:
                            strict = True
    if brow < 0:
        return float("-inf"), -1, 0, False, False
    return float(best), int(brow), int(bk), bool(strict), bool(violates)


# ---------------------------------------------------------------------------
# branch and bound


cdef struct _Search:
    Py_ssize_t n, m
    double *V          # n x m, row-major
    long long *order   # goods in branching order
    double *rem        # (m+1) x n suffix sums in branching order
    double *cur
    long long *assign
    long long *best_assign
    long long best_count
    double best_log
    # max-min search: thr holds floors of inactive agents
    cnp.uint8_t *active
    double *thr
    double best_val
    double tol
    double *sortbuf
    # optional linear bound: const + sum_i lw[i] * cur[i] + lsuf[p]
    bint use_lin
    double lconst
    double *lw
    double *lsuf


cdef void _sort_small(double *a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double x
    for i in range(1, n):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x


cdef inline double _linear_bound(_Search *s, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t i
    cdef double b = s.lconst + s.lsuf[p]
    for i in range(s.n):
        b += s.lw[i] * s.cur[i]
    return b


cdef bint _nash_prunes(_Search *s, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t n = s.n, m = s.m, i, q, g, c0 = 0, zc = 0, cub, need
    cdef double lub = 0.0, gmax, gv
    if s.use_lin and s.best_count == n:
        if _linear_bound(s, p) <= s.best_log + 1e-12:
            return True
    for i in range(n):
        if s.cur[i] > 0:
            c0 += 1
            lub += log(s.cur[i])
        elif s.rem[p * n + i] > 0:
            s.sortbuf[zc] = -log(s.rem[p * n + i])
            zc += 1
    cub = c0 + (zc if zc < m - p else m - p)
    if cub < s.best_count:
        return True
    if cub > s.best_count:
        return False
    need = s.best_count - c0
    if c0 > 0:
        for q in range(p, m):
            g = s.order[q]
            gmax = 0.0
            for i in range(n):
                if s.cur[i] > 0:
                    gv = log1p(s.V[i * m + g] / s.cur[i])
                    if gv > gmax:
                        gmax = gv
            lub += gmax
    if need > 0:
        _sort_small(s.sortbuf, zc)
        for i in range(need):
            lub -= s.sortbuf[i]
    return lub <= s.best_log + 1e-12


cdef void _nash_rec(_Search *s, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t n = s.n, m = s.m, i, j, g, cnt, best_i
    cdef double lg, prev, v, gi, gj
    cdef bint tried_zero
    cdef long long *cand
    cdef double *gain
    if p == m:
        cnt = 0
        lg = 0.0
        for i in range(n):
            if s.cur[i] > 0:
                cnt += 1
                lg += log(s.cur[i])
        if cnt > s.best_count or (cnt == s.best_count and lg > s.best_log + 1e-12):
            s.best_count = cnt
            s.best_log = lg
            for i in range(m):
                s.best_assign[s.order[i]] = s.assign[i]
        return
    if _nash_prunes(s, p):
        return
    g = s.order[p]
    # try agents by decreasing log-gain (zero-utility agents with value first)
    cand = <long long *> malloc(n * sizeof(long long))
    gain = <double *> malloc(n * sizeof(double))
    for i in range(n):
        v = s.V[i * m + g]
        if s.cur[i] > 0:
            gain[i] = log1p(v / s.cur[i])
        elif v > 0:
            gain[i] = INFINITY
        else:
            gain[i] = 0.0
        cand[i] = i
    for i in range(1, n):
        j = i
        while j > 0 and gain[cand[j - 1]] < gain[cand[j]]:
            cand[j - 1], cand[j] = cand[j], cand[j - 1]
            j -= 1
    tried_zero = False
    for j in range(n):
        i = cand[j]
        v = s.V[i * m + g]
        if v <= 0:
            if tried_zero:
                continue
            tried_zero = True
        s.assign[p] = i
        prev = s.cur[i]
        s.cur[i] = prev + v
        _nash_rec(s, p + 1)
        s.cur[i] = prev
    free(cand)
    free(gain)


cdef bint _mm_prunes(_Search *s, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t n = s.n, i
    cdef double ub
    if s.use_lin and _linear_bound(s, p) <= s.best_val + s.tol:
        return True
    for i in range(n):
        ub = s.cur[i] + s.rem[p * n + i]
        if s.active[i]:
            if ub <= s.best_val + s.tol:
                return True
        elif ub < s.thr[i] - s.tol:
            return True
    return False


cdef void _mm_rec(_Search *s, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t n = s.n, m = s.m, i, j, g
    cdef double prev, v, low
    cdef bint tried_zero
    cdef long long *cand
    if _mm_prunes(s, p):
        return
    if p == m:
        low = INFINITY
        for i in range(n):
            if s.active[i] and s.cur[i] < low:
                low = s.cur[i]
        s.best_val = low
        for i in range(m):
            s.best_assign[s.order[i]] = s.assign[i]
        return
    g = s.order[p]
    cand = <long long *> malloc(n * sizeof(long long))
    for i in range(n):
        cand[i] = i
    for i in range(1, n):
        j = i
        while j > 0 and s.cur[cand[j - 1]] > s.cur[cand[j]]:
            cand[j - 1], cand[j] = cand[j], cand[j - 1]
            j -= 1
    tried_zero = False
    for j in range(n):
        i = cand[j]
        v = s.V[i * m + g]
        if v <= 0:
            if tried_zero:
                continue
            tried_zero = True
        s.assign[p] = i
        prev = s.cur[i]
        s.cur[i] = prev + v
        _mm_rec(s, p + 1)
        s.cur[i] = prev
    free(cand)


cdef class _Buffers:
    cdef object arrays
    cdef _Search s

    def __init__(self, V):
        Vc = np.array(V, dtype=np.float64, order="C", copy=True)
        n, m = Vc.shape
        order = np.ascontiguousarray(np.argsort(-Vc.max(axis=0), kind="stable"), dtype=np.int64)
        rem = np.zeros((m + 1, n))
        for p in range(m - 1, -1, -1):
            rem[p] = rem[p + 1] + Vc[:, order[p]]
        cur = np.zeros(n)
        assign = np.zeros(max(m, 1), dtype=np.int64)
        best_assign = np.zeros(max(m, 1), dtype=np.int64)
        sortbuf = np.zeros(n + 1)
        thr = np.zeros(n + 1)
        lw = np.zeros(n)
        lsuf = np.zeros(m + 1)
        act = np.ones(n, dtype=np.uint8)
        self.arrays = [Vc, order, rem, cur, assign, best_assign, sortbuf, thr, lw, lsuf, act]
        cdef double[:, ::1] vv = Vc
        cdef long long[::1] oo = order
        cdef double[:, ::1] rr = rem
        cdef double[::1] cc = cur
        cdef long long[::1] aa = assign
        cdef long long[::1] bb = best_assign
        cdef double[::1] ss = sortbuf
        cdef double[::1] tt = thr
        cdef double[::1] lwv = lw
        cdef double[::1] lsv = lsuf
        cdef cnp.uint8_t[::1] av = act
        self.s.n = n
        self.s.m = m
        self.s.V = &vv[0, 0]
        self.s.order = &oo[0]
        self.s.rem = &rr[0, 0]
        self.s.cur = &cc[0]
        self.s.assign = &aa[0]
        self.s.best_assign = &bb[0]
        self.s.sortbuf = &ss[0]
        self.s.thr = &tt[0]
        self.s.lw = &lwv[0]
        self.s.lsuf = &lsv[0]
        self.s.active = &av[0]
        self.s.use_lin = False
        self.s.lconst = 0.0

    def set_linear(self, weights, double const):
        Vc, order = self.arrays[0], self.arrays[1]
        w = np.asarray(weights, dtype=np.float64)
        self.arrays[8][:] = w
        suf = self.arrays[9]
        suf[:] = 0.0
        for p in range(Vc.shape[1] - 1, -1, -1):
            suf[p] = suf[p + 1] + float((w * Vc[:, order[p]]).max())
        self.s.lconst = const
        self.s.use_lin = True


def bnb_nash(V, incumbent, tangent=None):
    buf = _Buffers(V)
    cdef _Buffers b = buf
    if tangent is not None:
        t = np.asarray(tangent, dtype=np.float64)
        b.set_linear(1.0 / t, float(np.sum(np.log(t)) - t.size))
    Vc = b.arrays[0]
    n, m = Vc.shape
    owners = np.asarray(incumbent, dtype=np.int64)
    u0 = np.zeros(n)
    for g in range(m):
        u0[owners[g]] += Vc[owners[g], g]
    pos = u0 > 0
    b.s.best_count = int(pos.sum())
    b.s.best_log = float(np.log(u0[pos]).sum()) if pos.any() else 0.0
    b.arrays[5][:m] = owners
    with nogil:
        _nash_rec(&b.s, 0)
    return np.array(b.arrays[5][:m], dtype=np.int64)


def bnb_maxmin(V, active, floors, incumbent, double tol, weights=None):
    buf = _Buffers(V)
    cdef _Buffers b = buf
    if weights is not None:
        b.set_linear(weights, 0.0)
    Vc = b.arrays[0]
    n, m = Vc.shape
    act = np.asarray(active, dtype=bool)
    owners = np.asarray(incumbent, dtype=np.int64)
    u0 = np.zeros(n)
    for g in range(m):
        u0[owners[g]] += Vc[owners[g], g]
    b.arrays[7][:n] = np.asarray(floors, dtype=np.float64)
    b.arrays[10][:] = act.astype(np.uint8)
    b.s.tol = tol
    b.s.best_val = float(u0[act].min())
    b.arrays[5][:m] = owners
    with nogil:
        _mm_rec(&b.s, 0)
    return float(b.s.best_val), np.array(b.arrays[5][:m], dtype=np.int64)
