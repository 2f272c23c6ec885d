# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the functions in ``_pykernels``.

Same signatures, same results, same consumption of pre-drawn uniforms.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, INFINITY

cnp.import_array()

cdef double TAU = 1e-12


cdef void _rbf_row(const double[:, ::1] X, Py_ssize_t i, double gamma,
                   double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], t, k
    cdef double acc, diff
    for t in range(n):
        acc = 0.0
        for k in range(d):
            diff = X[t, k] - X[i, k]
            acc += diff * diff
        out[t] = exp(-gamma * acc)


def smo_solve(X, y, double C, double gamma, double tol, long max_iter):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n)
    G_arr = -np.ones(n)
    Ki_arr = np.empty(n)
    Kj_arr = np.empty(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef double[::1] Ki = Ki_arr
    cdef double[::1] Kj = Kj_arr
    cdef Py_ssize_t i, j, t
    cdef long it = 0
    cdef double gap = INFINITY, vmax, vmin, v, quad, delta, diff, total
    cdef double ai, aj, ai_old, aj_old, dai, daj, Qij
    cdef bint any_up, any_low
    with nogil:
        while it < max_iter:
            vmax = -INFINITY
            vmin = INFINITY
            i = -1
            j = -1
            for t in range(n):
                v = -yv[t] * G[t]
                if (yv[t] > 0 and alpha[t] < C) or (yv[t] < 0 and alpha[t] > 0):
                    if v > vmax:
                        vmax = v
                        i = t
                if (yv[t] < 0 and alpha[t] < C) or (yv[t] > 0 and alpha[t] > 0):
                    if v < vmin:
                        vmin = v
                        j = t
            if i < 0 or j < 0:
                gap = 0.0
                break
            gap = vmax - vmin
            if gap < tol:
                break
            _rbf_row(Xv, i, gamma, Ki)
            _rbf_row(Xv, j, gamma, Kj)
            ai_old = alpha[i]
            aj_old = alpha[j]
            ai = ai_old
            aj = aj_old
            Qij = yv[i] * yv[j] * Ki[j]
            if yv[i] != yv[j]:
                quad = Ki[i] + Kj[j] + 2.0 * Qij
                if quad <= 0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = ai - aj
                ai += delta
                aj += delta
                if diff > 0:
                    if aj < 0:
                        aj = 0.0
                        ai = diff
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = -diff
                if diff > 0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                else:
                    if aj > C:
                        aj = C
                        ai = C + diff
            else:
                quad = Ki[i] + Kj[j] - 2.0 * Qij
                if quad <= 0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                total = ai + aj
                ai -= delta
                aj += delta
                if total > C:
                    if ai > C:
                        ai = C
                        aj = total - C
                else:
                    if aj < 0:
                        aj = 0.0
                        ai = total
                if total > C:
                    if aj > C:
                        aj = C
                        ai = total - C
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = total
            alpha[i] = ai
            alpha[j] = aj
            dai = ai - ai_old
            daj = aj - aj_old
            for t in range(n):
                G[t] += yv[t] * (yv[i] * Ki[t] * dai + yv[j] * Kj[t] * daj)
            it += 1
    from ._pykernels import _rho
    return alpha_arr, _rho(alpha_arr, G_arr, np.asarray(yv), C), float(gap), int(it)


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef inline void _piece(const double[::1] times, Py_ssize_t lo, Py_ssize_t hi,
                        Py_ssize_t base, double beta, Py_ssize_t p,
                        double* start, double* end, Py_ssize_t* seg) noexcept nogil:
    # piece p of one site laid out on [0, beta); see _pykernels._pieces
    cdef Py_ssize_t n = hi - lo
    if n == 0:
        start[0] = 0.0
        end[0] = beta
        seg[0] = base
    elif p == 0:
        start[0] = 0.0
        end[0] = times[lo]
        seg[0] = base + n - 1
    elif p == n:
        start[0] = times[hi - 1]
        end[0] = beta
        seg[0] = base + n - 1
    else:
        start[0] = times[lo + p - 1]
        end[0] = times[lo + p]
        seg[0] = base + p - 1


def sw_cluster_update(cut_times, cut_is_kink, cut_offsets, s0, bonds, double J,
                      double beta, u_bond, u_flip):
    cdef const double[::1] ct = np.ascontiguousarray(cut_times, dtype=np.float64)
    cdef const cnp.int8_t[::1] kink = np.ascontiguousarray(cut_is_kink, dtype=np.int8)
    cdef const cnp.int64_t[::1] off = np.ascontiguousarray(cut_offsets, dtype=np.int64)
    cdef const cnp.int8_t[::1] s0v = np.ascontiguousarray(s0, dtype=np.int8)
    cdef const cnp.int64_t[:, ::1] bv = np.ascontiguousarray(bonds, dtype=np.int64)
    cdef const double[::1] ub = np.ascontiguousarray(u_bond, dtype=np.float64)
    cdef const double[::1] uf = np.ascontiguousarray(u_flip, dtype=np.float64)
    cdef Py_ssize_t n_sites = s0v.shape[0]
    cdef Py_ssize_t i, m, g, lo, hi, n, r, ra, rb, a, b, k
    seg_off_arr = np.zeros(n_sites + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] seg_off = seg_off_arr
    for i in range(n_sites):
        n = off[i + 1] - off[i]
        seg_off[i + 1] = seg_off[i] + (n if n > 0 else 1)
    cdef Py_ssize_t total = seg_off[n_sites]
    spin_arr = np.empty(total, dtype=np.int64)
    parent_arr = np.arange(total, dtype=np.intp)
    first_arr = np.full(total, -1, dtype=np.intp)
    cdef cnp.int64_t[::1] spin = spin_arr
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] first = first_arr
    cdef long s
    cdef double two_j = 2.0 * (J if J > 0 else -J)
    cdef long sign_j = 1 if J > 0 else -1
    cdef Py_ssize_t counter = 0, ia, ib, na, nb, ga, gb
    cdef double sa_t, ea_t, sb_t, eb_t, length, lo_t, hi_t
    cdef Py_ssize_t n_clusters = 0
    new_times_arr = np.empty(ct.shape[0], dtype=np.float64)
    new_off_arr = np.zeros(n_sites + 1, dtype=np.int64)
    new_s0_arr = np.empty(n_sites, dtype=np.int8)
    cdef double[::1] new_times = new_times_arr
    cdef cnp.int64_t[::1] new_off = new_off_arr
    cdef cnp.int8_t[::1] new_s0 = new_s0_arr
    cdef Py_ssize_t n_new = 0
    cdef long prev, cur

    with nogil:
        for i in range(n_sites):
            lo = off[i]
            hi = off[i + 1]
            s = s0v[i]
            if hi == lo:
                spin[seg_off[i]] = s
                continue
            for m in range(hi - lo):
                if kink[lo + m]:
                    s = -s
                spin[seg_off[i] + m] = s

        for k in range(bv.shape[0]):
            a = bv[k, 0]
            b = bv[k, 1]
            na = off[a + 1] - off[a]
            nb = off[b + 1] - off[b]
            na = na + 1 if na > 0 else 1
            nb = nb + 1 if nb > 0 else 1
            ia = 0
            ib = 0
            while ia < na and ib < nb:
                _piece(ct, off[a], off[a + 1], seg_off[a], beta, ia, &sa_t, &ea_t, &ga)
                _piece(ct, off[b], off[b + 1], seg_off[b], beta, ib, &sb_t, &eb_t, &gb)
                hi_t = ea_t if ea_t < eb_t else eb_t
                lo_t = sa_t if sa_t > sb_t else sb_t
                length = hi_t - lo_t
                if length > 0 and sign_j * spin[ga] * spin[gb] < 0:
                    if ub[counter] < -expm1(-two_j * length):
                        ra = _find(parent, ga)
                        rb = _find(parent, gb)
                        if ra != rb:
                            if ra < rb:
                                parent[rb] = ra
                            else:
                                parent[ra] = rb
                    counter += 1
                if ea_t < eb_t:
                    ia += 1
                elif eb_t < ea_t:
                    ib += 1
                else:
                    ia += 1
                    ib += 1

        for g in range(total):
            r = _find(parent, g)
            if first[r] < 0:
                first[r] = g
                n_clusters += 1
            if uf[first[r]] < 0.5:
                spin[g] = -spin[g]

        for i in range(n_sites):
            lo = off[i]
            hi = off[i + 1]
            n = hi - lo
            if n == 0:
                new_s0[i] = <cnp.int8_t>spin[seg_off[i]]
            else:
                new_s0[i] = <cnp.int8_t>spin[seg_off[i] + n - 1]
                prev = spin[seg_off[i] + n - 1]
                for m in range(n):
                    cur = spin[seg_off[i] + m]
                    if cur != prev:
                        new_times[n_new] = ct[lo + m]
                        n_new += 1
                    prev = cur
            new_off[i + 1] = n_new
    return new_times_arr[:n_new].copy(), new_off_arr, new_s0_arr, int(n_clusters)


def site_integrals(kink_times, kink_offsets, s0, double beta):
    cdef const double[::1] kt = np.ascontiguousarray(kink_times, dtype=np.float64)
    cdef const cnp.int64_t[::1] off = np.ascontiguousarray(kink_offsets, dtype=np.int64)
    cdef const cnp.int8_t[::1] s0v = np.ascontiguousarray(s0, dtype=np.int8)
    cdef Py_ssize_t n_sites = s0v.shape[0], i, m
    out_arr = np.empty(n_sites)
    cdef double[::1] out = out_arr
    cdef double prev, acc
    cdef long s
    with nogil:
        for i in range(n_sites):
            s = s0v[i]
            prev = 0.0
            acc = 0.0
            for m in range(off[i], off[i + 1]):
                acc += s * (kt[m] - prev)
                prev = kt[m]
                s = -s
            acc += s * (beta - prev)
            out[i] = acc / beta
    return out_arr


def bond_integrals(kink_times, kink_offsets, s0, bonds, double beta):
    cdef const double[::1] kt = np.ascontiguousarray(kink_times, dtype=np.float64)
    cdef const cnp.int64_t[::1] off = np.ascontiguousarray(kink_offsets, dtype=np.int64)
    cdef const cnp.int8_t[::1] s0v = np.ascontiguousarray(s0, dtype=np.int8)
    cdef const cnp.int64_t[:, ::1] bv = np.ascontiguousarray(bonds, dtype=np.int64)
    cdef Py_ssize_t nb = bv.shape[0], k, a, b, ia, ib, ha, hb
    out_arr = np.empty(nb)
    cdef double[::1] out = out_arr
    cdef double t, acc, ta, tb, nxt
    cdef long sa, sb
    with nogil:
        for k in range(nb):
            a = bv[k, 0]
            b = bv[k, 1]
            ia = off[a]
            ha = off[a + 1]
            ib = off[b]
            hb = off[b + 1]
            sa = s0v[a]
            sb = s0v[b]
            t = 0.0
            acc = 0.0
            while True:
                ta = kt[ia] if ia < ha else beta
                tb = kt[ib] if ib < hb else beta
                nxt = ta if ta < tb else tb
                acc += sa * sb * (nxt - t)
                t = nxt
                if t >= beta:
                    break
                if ta <= nxt:
                    sa = -sa
                    ia += 1
                if tb <= nxt:
                    sb = -sb
                    ib += 1
            out[k] = acc / beta
    return out_arr
