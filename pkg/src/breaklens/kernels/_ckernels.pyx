# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: PELT, segment neighbourhood DP, batched best split and
the penalized trend coordinate descent. Mirrors ``_pykernels`` exactly for
the prefix-sum cost models (l2 = 0, normal = 1)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, INFINITY, isfinite

cnp.import_array()

cdef double NORMAL_EPS = 1e-8


cdef inline double seg_cost(const double[::1] s1, const double[::1] s2,
                            Py_ssize_t a, Py_ssize_t b, int model) nogil:
    cdef double m = <double>(b - a)
    cdef double d1 = s1[b] - s1[a]
    cdef double d2 = s2[b] - s2[a]
    cdef double v
    if model == 0:
        v = d2 - d1 * d1 / m
        return v if v > 0.0 else 0.0
    v = d2 / m - (d1 / m) * (d1 / m)
    if v < 0.0:
        v = 0.0
    return m * log(v + NORMAL_EPS)


def _prefix(y):
    y = np.ascontiguousarray(y, dtype=np.float64)
    s1 = np.zeros(y.shape[0] + 1)
    s2 = np.zeros(y.shape[0] + 1)
    np.cumsum(y, out=s1[1:])
    np.cumsum(y * y, out=s2[1:])
    return y, s1, s2


def _model_code(model):
    if model == "l2":
        return 0
    if model == "normal":
        return 1
    raise ValueError(f"compiled kernels support l2 and normal costs, not {model!r}")


def admissible_positions(Py_ssize_t n, Py_ssize_t min_size, Py_ssize_t jump):
    return [p for p in range(jump, n, jump) if min_size <= p <= n - min_size]


def pelt(y, model, double pen, Py_ssize_t min_size, Py_ssize_t jump):
    cdef int code = _model_code(model)
    y, s1_arr, s2_arr = _prefix(y)
    cdef const double[::1] s1 = s1_arr
    cdef const double[::1] s2 = s2_arr
    cdef Py_ssize_t n = y.shape[0]
    points = admissible_positions(n, min_size, jump) + [n]
    cdef Py_ssize_t npts = len(points)
    cdef const cnp.int64_t[::1] pos = np.asarray(points, dtype=np.int64)

    # F and last indexed by position value 0..n
    F_arr = np.full(n + 1, INFINITY)
    last_arr = np.zeros(n + 1, dtype=np.int64)
    cdef double[::1] F = F_arr
    cdef cnp.int64_t[::1] last = last_arr
    F[0] = -pen

    # candidate list (positions) and per-candidate pruning deadline:
    # prune_when[r] = position t whose eligibility removes r (-1 = never)
    cand_arr = np.zeros(npts + 1, dtype=np.int64)
    prune_arr = np.full(n + 1, -1, dtype=np.int64)
    base_arr = np.zeros(npts + 1)
    cdef cnp.int64_t[::1] cand = cand_arr
    cdef cnp.int64_t[::1] prune_when = prune_arr
    cdef double[::1] base = base_arr
    cdef Py_ssize_t ncand = 0
    cdef Py_ssize_t head = 0          # next pending position (index into pos)
    cdef bint pend_zero = True
    cdef Py_ssize_t i, k, t, s, r, best_k, keep
    cdef double v, best

    for i in range(npts):
        t = pos[i]
        # make processed positions eligible
        while True:
            if pend_zero:
                s = 0
            elif head < i:
                s = pos[head]
            else:
                break
            if s > t - min_size:
                break
            if pend_zero:
                pend_zero = False
            else:
                head += 1
            # apply pruning decided at time s
            keep = 0
            for k in range(ncand):
                r = cand[k]
                if prune_when[r] != s:
                    cand[keep] = r
                    keep += 1
            ncand = keep
            if isfinite(F[s]):
                cand[ncand] = s
                ncand += 1
        if ncand == 0:
            F[t] = INFINITY
            continue
        best = INFINITY
        best_k = 0
        for k in range(ncand):
            r = cand[k]
            base[k] = F[r] + seg_cost(s1, s2, r, t, code)
            v = base[k] + pen
            if v < best:
                best = v
                best_k = k
        F[t] = best
        last[t] = cand[best_k]
        if t == n:
            break
        for k in range(ncand):
            if base[k] > best and prune_when[cand[k]] == -1:
                prune_when[cand[k]] = t

    bkps = [n]
    t = n
    while t > 0:
        t = last[t]
        if t > 0:
            bkps.append(int(t))
    return sorted(bkps), float(F[n])


def segment_neighbourhood(y, model, Py_ssize_t max_bkps, Py_ssize_t min_size, Py_ssize_t jump):
    cdef int code = _model_code(model)
    y, s1_arr, s2_arr = _prefix(y)
    cdef const double[::1] s1 = s1_arr
    cdef const double[::1] s2 = s2_arr
    cdef Py_ssize_t n = y.shape[0]
    P_list = [0] + admissible_positions(n, min_size, jump) + [n]
    cdef Py_ssize_t m = len(P_list)
    cdef const cnp.int64_t[::1] P = np.asarray(P_list, dtype=np.int64)
    D_arr = np.full((max_bkps + 1, m), INFINITY)
    arg_arr = np.full((max_bkps + 1, m), -1, dtype=np.int64)
    cdef double[:, ::1] D = D_arr
    cdef cnp.int64_t[:, ::1] arg = arg_arr
    cdef Py_ssize_t k, j, i, bi
    cdef double v, best
    for j in range(1, m):
        D[0, j] = seg_cost(s1, s2, 0, P[j], code)
    for k in range(1, max_bkps + 1):
        for j in range(1, m):
            best = INFINITY
            bi = -1
            for i in range(1, j):
                if P[j] - P[i] < min_size:
                    break
                if not isfinite(D[k - 1, i]):
                    continue
                v = D[k - 1, i] + seg_cost(s1, s2, P[i], P[j], code)
                if v < best:
                    best = v
                    bi = i
            D[k, j] = best
            arg[k, j] = bi
    costs, breaks = [], []
    for k in range(max_bkps + 1):
        total = float(D[k, m - 1])
        costs.append(total)
        if total == INFINITY:
            breaks.append(None)
            continue
        out = []
        j = m - 1
        for i in range(k, 0, -1):
            j = arg[i, j]
            out.append(int(P[j]))
        breaks.append(sorted(out))
    return np.array(costs), breaks


def best_splits(y, starts, ends, Py_ssize_t min_size):
    y, s1_arr, s2_arr = _prefix(y)
    cdef const double[::1] s1 = s1_arr
    cdef const double[::1] s2 = s2_arr
    cdef const cnp.int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const cnp.int64_t[::1] en = np.ascontiguousarray(ends, dtype=np.int64)
    cdef Py_ssize_t m = st.shape[0]
    idx_arr = np.full(m, -1, dtype=np.int64)
    gain_arr = np.full(m, -INFINITY)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[::1] gain = gain_arr
    cdef Py_ssize_t i, t, s, e
    cdef double total, g, best
    with nogil:
        for i in range(m):
            s = st[i]
            e = en[i]
            if e - s < 2 * min_size:
                continue
            total = seg_cost(s1, s2, s, e, 0)
            best = -INFINITY
            for t in range(s + min_size, e - min_size + 1):
                g = total - seg_cost(s1, s2, s, t, 0) - seg_cost(s1, s2, t, e, 0)
                if g > best:
                    best = g
                    idx[i] = t
            gain[i] = best
    return idx_arr, gain_arr


def trend_cd(tt_in, y_in, knots_in, double lam, double tol, Py_ssize_t max_sweeps):
    cdef const double[::1] tt = np.ascontiguousarray(tt_in, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] knots = np.ascontiguousarray(knots_in, dtype=np.int64)
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t K = knots.shape[0]
    r_arr = np.array(y, dtype=np.float64)
    d_arr = np.zeros(K)
    zsq_arr = np.zeros(K)
    cdef double[::1] r = r_arr
    cdef double[::1] d = d_arr
    cdef double[::1] zsq = zsq_arr
    cdef Py_ssize_t i, j, sweeps = 0, it
    cdef double st = 0.0, stt = 0.0, det, sw, stw, a = 0.0, b = 0.0, a_new, b_new
    cdef double z, rho, new, obj, prev = INFINITY, absd, c
    trace = []
    for i in range(n):
        st += tt[i]
        stt += tt[i] * tt[i]
    det = n * stt - st * st
    for j in range(K):
        c = tt[knots[j]]
        for i in range(knots[j], n):
            z = tt[i] - c
            if z > 0.0:
                zsq[j] += z * z
    for it in range(1, max_sweeps + 1):
        sweeps = it
        sw = 0.0
        stw = 0.0
        for i in range(n):
            z = r[i] + a + b * tt[i]
            sw += z
            stw += tt[i] * z
        a_new = (stt * sw - st * stw) / det
        b_new = (n * stw - st * sw) / det
        for i in range(n):
            r[i] -= (a_new - a) + (b_new - b) * tt[i]
        a = a_new
        b = b_new
        for j in range(K):
            if zsq[j] <= 0.0:
                continue
            c = tt[knots[j]]
            rho = 0.0
            for i in range(knots[j], n):
                z = tt[i] - c
                if z > 0.0:
                    rho += z * r[i]
            rho += d[j] * zsq[j]
            if fabs(rho) > lam:
                new = (fabs(rho) - lam) / zsq[j]
                if rho < 0.0:
                    new = -new
            else:
                new = 0.0
            if new != d[j]:
                for i in range(knots[j], n):
                    z = tt[i] - c
                    if z > 0.0:
                        r[i] -= z * (new - d[j])
                d[j] = new
        obj = 0.0
        for i in range(n):
            obj += r[i] * r[i]
        obj *= 0.5
        absd = 0.0
        for j in range(K):
            absd += fabs(d[j])
        obj += lam * absd
        trace.append(obj)
        if obj == 0.0 or (isfinite(prev) and fabs(prev - obj) <= tol * (fabs(prev) if fabs(prev) > 1e-300 else 1e-300)):
            break
        prev = obj
    return a, b, d_arr, sweeps, np.array(trace)
