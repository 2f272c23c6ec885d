"""Pure-Python implementations of the hot loops.

These define the reference semantics. ``_kernels.pyx`` mirrors every
function here operation for operation, including the order in which
pre-drawn uniforms are consumed, so both backends produce the same Monte
Carlo chains from the same seed.
"""

import math

import numpy as np

TAU = 1e-12


# --- SMO for the kernel SVM dual -------------------------------------------


def _rbf_row(X, i, gamma):
    diff = X - X[i]
    return np.exp(-gamma * np.einsum("ij,ij->i", diff, diff))


def smo_solve(X, y, C, gamma, tol, max_iter):
    """Solve the C-SVM dual with an RBF kernel by maximal-violating-pair SMO.

    Returns ``(alpha, rho, kkt_gap, iterations)``; the decision function is
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)
    gap = math.inf
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            gap = 0.0
            break
        v = -y * G
        vu = np.where(up, v, -math.inf)
        vl = np.where(low, v, math.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap < tol:
            break
        Ki = _rbf_row(X, i, gamma)
        Kj = _rbf_row(X, j, gamma)
        Qi = y[i] * y * Ki
        Qj = y[j] * y * Kj
        ai_old, aj_old = alpha[i], alpha[j]
        ai, aj = ai_old, aj_old
        if y[i] != y[j]:
            quad = Qi[i] + Qj[j] + 2.0 * Qi[j]
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
            quad = Qi[i] + Qj[j] - 2.0 * Qi[j]
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
        alpha[i], alpha[j] = ai, aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)
        it += 1
    rho = _rho(alpha, G, y, C)
    return alpha, rho, float(gap), it


def _rho(alpha, G, y, C):
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(np.mean(yG[free]))
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = np.min(yG[ub_mask]) if ub_mask.any() else math.inf
    lb = np.max(yG[lb_mask]) if lb_mask.any() else -math.inf
    if math.isinf(ub) or math.isinf(lb):
        return float(ub if not math.isinf(ub) else lb)
    return float(0.5 * (ub + lb))


# --- continuous-time worldlines ---------------------------------------------


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def _pieces(times, lo, hi, seg_base, beta):
    """Pieces ``(start, end, segment)`` of one site laid out on ``[0, beta)``."""
    n = hi - lo
    if n == 0:
        return [(0.0, beta, seg_base)]
    wrap = seg_base + n - 1
    out = [(0.0, times[lo], wrap)]
    for m in range(n - 1):
        out.append((times[lo + m], times[lo + m + 1], seg_base + m))
    out.append((times[hi - 1], beta, wrap))
    return out


def sw_cluster_update(cut_times, cut_is_kink, cut_offsets, s0, bonds, J, beta,
                      u_bond, u_flip):
    """Cluster step of the continuous-time Swendsen-Wang update.

    Parameters
    ----------
    cut_times, cut_is_kink, cut_offsets
        Per-site sorted cut times (existing kinks plus freshly inserted
        cuts) in CSR layout; ``cut_is_kink`` marks the spin flips.
    s0 : int8 array
        Spin on the segment that wraps through ``tau = 0``.
    bonds : (n_bonds, 2) int array
    u_bond, u_flip : float arrays
        Pre-drawn uniforms. One ``u_bond`` entry is consumed per
        anti-aligned overlap, in bond order; ``u_flip[s]`` decides the flip
        of the cluster whose smallest segment index is ``s``.

    Returns
    -------
    kink_times, kink_offsets, new_s0, n_clusters
    """
    n_sites = len(s0)
    nseg = np.maximum(np.diff(cut_offsets), 1)
    seg_off = np.zeros(n_sites + 1, dtype=np.int64)
    np.cumsum(nseg, out=seg_off[1:])
    total = int(seg_off[-1])
    spin = np.empty(total, dtype=np.int64)
    for i in range(n_sites):
        lo, hi = cut_offsets[i], cut_offsets[i + 1]
        s = int(s0[i])
        if hi == lo:
            spin[seg_off[i]] = s
            continue
        for m in range(hi - lo):
            if cut_is_kink[lo + m]:
                s = -s
            spin[seg_off[i] + m] = s

    parent = list(range(total))
    pieces = [
        _pieces(cut_times, cut_offsets[i], cut_offsets[i + 1], seg_off[i], beta)
        for i in range(n_sites)
    ]
    two_j = 2.0 * abs(J)
    sign_j = 1 if J > 0 else -1
    counter = 0
    for a, b in bonds:
        pa, pb = pieces[a], pieces[b]
        ia = ib = 0
        while ia < len(pa) and ib < len(pb):
            sa, ea, ga = pa[ia]
            sb, eb, gb = pb[ib]
            length = min(ea, eb) - max(sa, sb)
            if length > 0 and sign_j * spin[ga] * spin[gb] < 0:
                u = u_bond[counter]
                counter += 1
                if u < -math.expm1(-two_j * length):
                    ra, rb = _find(parent, ga), _find(parent, gb)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
            if ea < eb:
                ia += 1
            elif eb < ea:
                ib += 1
            else:
                ia += 1
                ib += 1

    first = [-1] * total
    n_clusters = 0
    for g in range(total):
        r = _find(parent, g)
        if first[r] < 0:
            first[r] = g
            n_clusters += 1
        if u_flip[first[r]] < 0.5:
            spin[g] = -spin[g]

    new_times = []
    new_off = np.zeros(n_sites + 1, dtype=np.int64)
    new_s0 = np.empty(n_sites, dtype=np.int8)
    for i in range(n_sites):
        lo, hi = cut_offsets[i], cut_offsets[i + 1]
        base = seg_off[i]
        n = hi - lo
        if n == 0:
            new_s0[i] = spin[base]
        else:
            new_s0[i] = spin[base + n - 1]
            prev = spin[base + n - 1]
            for m in range(n):
                cur = spin[base + m]
                if cur != prev:
                    new_times.append(cut_times[lo + m])
                prev = cur
        new_off[i + 1] = len(new_times)
    return np.asarray(new_times, dtype=float), new_off, new_s0, n_clusters


def site_integrals(kink_times, kink_offsets, s0, beta):
    """Time-averaged spin of every site, ``(1/beta) int s_i(tau) dtau``."""
    n_sites = len(s0)
    out = np.empty(n_sites)
    for i in range(n_sites):
        lo, hi = kink_offsets[i], kink_offsets[i + 1]
        s = int(s0[i])
        prev = 0.0
        acc = 0.0
        for m in range(lo, hi):
            acc += s * (kink_times[m] - prev)
            prev = kink_times[m]
            s = -s
        acc += s * (beta - prev)
        out[i] = acc / beta
    return out


def bond_integrals(kink_times, kink_offsets, s0, bonds, beta):
    """Time-averaged ``s_i s_j`` for every bond."""
    out = np.empty(len(bonds))
    for k, (a, b) in enumerate(bonds):
        la, ha = kink_offsets[a], kink_offsets[a + 1]
        lb, hb = kink_offsets[b], kink_offsets[b + 1]
        sa, sb = int(s0[a]), int(s0[b])
        ia, ib = la, lb
        t = 0.0
        acc = 0.0
        while True:
            ta = kink_times[ia] if ia < ha else beta
            tb = kink_times[ib] if ib < hb else beta
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
    return out
