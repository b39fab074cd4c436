"""Numba-jitted kernel implementations.

Fast twin of ``kernels_numpy`` with identical contracts. All kernels are
serial: outputs are bit-stable regardless of thread configuration, which the
solvers rely on for reproducibility.
"""

import numpy as np
from numba import njit

# One-sided Jacobi SVD: rotations are applied on the smaller dimension so
# every localized block (tau^2 x (K+1) or (K+1) x (labels+1)) stays cheap.

_JACOBI_SWEEPS = 60
_JACOBI_TOL = 1e-14


@njit(cache=True)
def _jacobi(a, v):
    """Orthogonalize the columns of ``a`` in place, accumulating the
    rotations into ``v``. Returns 0 on convergence, 1 otherwise."""
    m, k = a.shape
    # columns below the rotation noise floor are numerically zero; rotating
    # them against each other never converges (pure rounding noise stays
    # correlated)
    scale2 = 0.0
    for j in range(k):
        acc = 0.0
        for r in range(m):
            acc += a[r, j] * a[r, j]
        if acc > scale2:
            scale2 = acc
    floor2 = 1e-26 * scale2
    for _ in range(_JACOBI_SWEEPS):
        rotated = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                aii = 0.0
                ajj = 0.0
                aij = 0.0
                for r in range(m):
                    aii += a[r, i] * a[r, i]
                    ajj += a[r, j] * a[r, j]
                    aij += a[r, i] * a[r, j]
                if aii <= floor2 or ajj <= floor2:
                    continue
                if abs(aij) <= _JACOBI_TOL * np.sqrt(aii * ajj):
                    continue
                rotated = True
                zeta = (ajj - aii) / (2.0 * aij)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                for r in range(m):
                    tmp = a[r, i]
                    a[r, i] = cs * tmp - sn * a[r, j]
                    a[r, j] = sn * tmp + cs * a[r, j]
                for r in range(k):
                    tmp = v[r, i]
                    v[r, i] = cs * tmp - sn * v[r, j]
                    v[r, j] = sn * tmp + cs * v[r, j]
        if not rotated:
            return 0
    return 1


@njit(cache=True)
def _svt_tall(x, t, out):
    """SVT of a single block with cols <= rows. Returns (nuclear norm of the
    result, jacobi status)."""
    m, k = x.shape
    a = x.copy()
    v = np.eye(k)
    st = _jacobi(a, v)
    nn = 0.0
    for r in range(m):
        for c in range(k):
            out[r, c] = 0.0
    for j in range(k):
        s2 = 0.0
        for r in range(m):
            s2 += a[r, j] * a[r, j]
        s = np.sqrt(s2)
        sthr = s - t
        if sthr <= 0.0:
            continue
        nn += sthr
        scale = sthr / s
        for r in range(m):
            arj = a[r, j] * scale
            for c in range(k):
                out[r, c] += arj * v[c, j]
    return nn, st


@njit(cache=True)
def svt_batch(blocks, t):
    """Singular value soft-thresholding of a stack of small matrices.

    Returns the thresholded stack and, per block, the nuclear norm of the
    result (sum of the surviving singular values).
    """
    n, a, b = blocks.shape
    out = np.empty_like(blocks)
    sums = np.empty(n)
    status = 0
    if b <= a:
        for i in range(n):
            nn, st = _svt_tall(blocks[i], t, out[i])
            sums[i] = nn
            status |= st
    else:
        tmp = np.empty((b, a))
        xt = np.empty((b, a))
        for i in range(n):
            for r in range(a):
                for c in range(b):
                    xt[c, r] = blocks[i, r, c]
            nn, st = _svt_tall(xt, t, tmp)
            for r in range(a):
                for c in range(b):
                    out[i, r, c] = tmp[c, r]
            sums[i] = nn
            status |= st
    if status != 0:
        raise RuntimeError("jacobi SVD did not converge")
    return out, sums


@njit(cache=True)
def _singular_values(x, s):
    """Descending singular values of a single block with cols <= rows."""
    m, k = x.shape
    a = x.copy()
    v = np.eye(k)
    st = _jacobi(a, v)
    for j in range(k):
        acc = 0.0
        for r in range(m):
            acc += a[r, j] * a[r, j]
        s[j] = np.sqrt(acc)
    s.sort()
    for i in range(k // 2):
        tmp = s[i]
        s[i] = s[k - 1 - i]
        s[k - 1 - i] = tmp
    return st


@njit(cache=True)
def svd_values_batch(blocks):
    """Singular values (descending) of each block in a stack."""
    n, a, b = blocks.shape
    r = min(a, b)
    vals = np.empty((n, r))
    status = 0
    if b <= a:
        for i in range(n):
            status |= _singular_values(blocks[i], vals[i])
    else:
        xt = np.empty((b, a))
        for i in range(n):
            for p in range(a):
                for q in range(b):
                    xt[q, p] = blocks[i, p, q]
            status |= _singular_values(xt, vals[i])
    if status != 0:
        raise RuntimeError("jacobi SVD did not converge")
    return vals


@njit(cache=True)
def _svd_tall(x):
    """Thin SVD of a block with cols <= rows; sorted descending, orthonormal
    u completed for zero singular values."""
    m, k = x.shape
    a = x.copy()
    v = np.eye(k)
    st = _jacobi(a, v)
    s = np.empty(k)
    for j in range(k):
        acc = 0.0
        for r in range(m):
            acc += a[r, j] * a[r, j]
        s[j] = np.sqrt(acc)
    order = np.empty(k, np.int64)
    used = np.zeros(k, np.bool_)
    for pos in range(k):
        best = -1
        for j in range(k):
            if used[j]:
                continue
            if best < 0 or s[j] > s[best]:
                best = j
        order[pos] = best
        used[best] = True
    u = np.zeros((m, k))
    vt = np.empty((k, k))
    s_out = np.empty(k)
    for pos in range(k):
        j = order[pos]
        s_out[pos] = s[j]
        if s[j] > 0.0:
            for r in range(m):
                u[r, pos] = a[r, j] / s[j]
        for c in range(k):
            vt[pos, c] = v[c, j]
    # complete orthonormal columns of u where the singular value vanished
    for pos in range(k):
        if s_out[pos] > 0.0:
            continue
        best_q = 0
        best_norm = -1.0
        for q in range(m):
            acc = 1.0
            for c in range(k):
                acc -= u[q, c] * u[q, c]
            if acc > best_norm:
                best_norm = acc
                best_q = q
        w = np.zeros(m)
        w[best_q] = 1.0
        for _ in range(2):
            for c in range(k):
                if c == pos:
                    continue
                dot = 0.0
                for r in range(m):
                    dot += w[r] * u[r, c]
                for r in range(m):
                    w[r] -= dot * u[r, c]
        nrm = 0.0
        for r in range(m):
            nrm += w[r] * w[r]
        nrm = np.sqrt(nrm)
        if nrm > 0.0:
            for r in range(m):
                u[r, pos] = w[r] / nrm
    return u, s_out, vt, st


@njit(cache=True)
def svd_factors(x):
    """Thin SVD ``x = u @ diag(s) @ vt`` with orthonormal u, vt rows.

    Returns (u, s, vt, status); status is nonzero on convergence failure.
    """
    m, k = x.shape
    if k <= m:
        return _svd_tall(x)
    xt = np.empty((k, m))
    for r in range(m):
        for c in range(k):
            xt[c, r] = x[r, c]
    u2, s, v2t, st = _svd_tall(xt)
    u = np.empty((m, m))
    vt = np.empty((m, k))
    for r in range(m):
        for c in range(m):
            u[r, c] = v2t[c, r]
    for r in range(m):
        for c in range(k):
            vt[r, c] = u2[c, r]
    return u, s, vt, st


@njit(cache=True)
def knn_search(pts, k):
    """Exact brute-force K nearest neighbors by Euclidean distance.

    Self index first, then the k nearest; ties broken by smaller index.
    """
    n, d = pts.shape
    idx = np.empty((n, k + 1), np.int64)
    dist = np.empty((n, k + 1))
    if k == 0:
        for x in range(n):
            idx[x, 0] = x
            dist[x, 0] = 0.0
        return idx, dist
    bd = np.empty(k)
    bj = np.empty(k, np.int64)
    for x in range(n):
        cnt = 0
        for j in range(n):
            if j == x:
                continue
            dd = 0.0
            for r in range(d):
                diff = pts[x, r] - pts[j, r]
                dd += diff * diff
            if cnt == k:
                last = k - 1
                if dd > bd[last] or (dd == bd[last] and j > bj[last]):
                    continue
                pos = last
            else:
                pos = cnt
                cnt += 1
            while pos > 0 and (
                bd[pos - 1] > dd or (bd[pos - 1] == dd and bj[pos - 1] > j)
            ):
                bd[pos] = bd[pos - 1]
                bj[pos] = bj[pos - 1]
                pos -= 1
            bd[pos] = dd
            bj[pos] = j
        idx[x, 0] = x
        dist[x, 0] = 0.0
        for p in range(k):
            idx[x, 1 + p] = bj[p]
            dist[x, 1 + p] = np.sqrt(bd[p])
    return idx, dist


@njit(cache=True)
def scatter_stack(row_ids, contrib, n_rows):
    """Accumulate contribution rows into ``n_rows`` output rows."""
    w = contrib.shape[1]
    out = np.zeros((n_rows, w))
    for i in range(row_ids.shape[0]):
        r = row_ids[i]
        for c in range(w):
            out[r, c] += contrib[i, c]
    return out


@njit(cache=True)
def spmv_csr(indptr, indices, data, x, n_rows):
    """CSR matrix-vector product."""
    y = np.zeros(n_rows)
    for r in range(n_rows):
        acc = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * x[indices[p]]
        y[r] = acc
    return y


@njit(cache=True)
def spmv_csr_t(indptr, indices, data, x, n_rows, n_cols):
    """CSR transpose matrix-vector product (A^T x)."""
    y = np.zeros(n_cols)
    for r in range(n_rows):
        xr = x[r]
        if xr == 0.0:
            continue
        for p in range(indptr[r], indptr[r + 1]):
            y[indices[p]] += data[p] * xr
    return y


@njit(cache=True)
def siddon_ray(x0, y0, x1, y1, n):
    """Pixel crossings of the segment (x0,y0)->(x1,y1) through the n x n
    unit-pixel square centered at the origin.

    Returns (flat pixel indices in traversal order, intersection lengths).
    """
    half = n / 2.0
    dx = x1 - x0
    dy = y1 - y0
    seg = np.hypot(dx, dy)
    pix_empty = np.empty(0, np.int64)
    len_empty = np.empty(0, np.float64)
    if seg == 0.0:
        return pix_empty, len_empty
    tmin = 0.0
    tmax = 1.0
    if dx == 0.0:
        if x0 <= -half or x0 >= half:
            return pix_empty, len_empty
    else:
        ta = (-half - x0) / dx
        tb = (half - x0) / dx
        if ta > tb:
            ta, tb = tb, ta
        if ta > tmin:
            tmin = ta
        if tb < tmax:
            tmax = tb
    if dy == 0.0:
        if y0 <= -half or y0 >= half:
            return pix_empty, len_empty
    else:
        ta = (-half - y0) / dy
        tb = (half - y0) / dy
        if ta > tb:
            ta, tb = tb, ta
        if ta > tmin:
            tmin = ta
        if tb < tmax:
            tmax = tb
    if tmin >= tmax:
        return pix_empty, len_empty
    buf = np.empty(2 * (n + 1) + 2)
    cnt = 0
    buf[cnt] = tmin
    cnt += 1
    buf[cnt] = tmax
    cnt += 1
    if dx != 0.0:
        for g in range(n + 1):
            tk = ((-half + g) - x0) / dx
            if tk > tmin and tk < tmax:
                buf[cnt] = tk
                cnt += 1
    if dy != 0.0:
        for g in range(n + 1):
            tk = ((-half + g) - y0) / dy
            if tk > tmin and tk < tmax:
                buf[cnt] = tk
                cnt += 1
    t = np.sort(buf[:cnt])
    pix = np.empty(cnt - 1, np.int64)
    ln = np.empty(cnt - 1)
    thr = 1e-12 * (tmax - tmin)
    m = 0
    for i in range(cnt - 1):
        dt = t[i + 1] - t[i]
        if dt <= thr:
            continue
        tmid = 0.5 * (t[i] + t[i + 1])
        col = int(np.floor(x0 + tmid * dx + half))
        row = int(np.floor(y0 + tmid * dy + half))
        if col < 0:
            col = 0
        elif col > n - 1:
            col = n - 1
        if row < 0:
            row = 0
        elif row > n - 1:
            row = n - 1
        p = row * n + col
        if m > 0 and pix[m - 1] == p:
            ln[m - 1] += dt * seg
        else:
            pix[m] = p
            ln[m] = dt * seg
            m += 1
    return pix[:m].copy(), ln[:m].copy()
