"""Pure-numpy kernel implementations.

Fallback twin of ``kernels_numba``. Each function keeps the exact contract of
its jitted counterpart; agreement between the two backends is covered by
tests/test_backends.py and timed by benchmarks/bench_kernels.py.
"""

import numpy as np

# scratch budget for blocked pairwise distances, in float64 elements
_BLOCK_BUDGET = 8_000_000


def knn_search(pts, k):
    """Exact brute-force K nearest neighbors by Euclidean distance.

    Parameters
    ----------
    pts : (n, d) float64
        One point per row.
    k : int
        Neighbor count, 1 <= k <= n-1.

    Returns
    -------
    idx : (n, k+1) int64
        Self index first, then the k nearest, ties broken by smaller index.
    dist : (n, k+1) float64
        Euclidean distances matching ``idx`` (first entry 0).
    """
    n, d = pts.shape
    idx = np.empty((n, k + 1), dtype=np.int64)
    dist = np.empty((n, k + 1), dtype=np.float64)
    idx[:, 0] = np.arange(n)
    dist[:, 0] = 0.0
    cols = np.arange(n)
    block = max(1, min(n, _BLOCK_BUDGET // max(1, n * d)))
    for s in range(0, n, block):
        e = min(n, s + block)
        diff = pts[s:e, None, :] - pts[None, :, :]
        d2 = np.einsum("bnr,bnr->bn", diff, diff)
        d2[np.arange(e - s), cols[s:e]] = np.inf
        keys = np.broadcast_to(cols, d2.shape)
        order = np.lexsort((keys, d2), axis=-1)[:, :k]
        idx[s:e, 1:] = order
        dist[s:e, 1:] = np.sqrt(np.take_along_axis(d2, order, axis=-1))
    return idx, dist


def svt_batch(blocks, t):
    """Singular value soft-thresholding of a stack of small matrices.

    Returns the thresholded stack and, per block, the nuclear norm of the
    result (sum of the surviving singular values).
    """
    u, s, vt = np.linalg.svd(blocks, full_matrices=False)
    s_thr = np.maximum(s - t, 0.0)
    out = np.matmul(u * s_thr[..., None, :], vt)
    return out, s_thr.sum(axis=-1)


def svd_values_batch(blocks):
    """Singular values (descending) of each block in a stack."""
    return np.linalg.svd(blocks, compute_uv=False)


def svd_factors(x):
    """Thin SVD ``x = u @ diag(s) @ vt`` with orthonormal u, vt rows.

    Returns (u, s, vt, status); status is nonzero on convergence failure.
    """
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError:
        m, k = x.shape
        r = min(m, k)
        return np.zeros((m, r)), np.zeros(r), np.zeros((r, k)), 1
    return u, s, vt, 0


def scatter_stack(row_ids, contrib, n_rows):
    """Accumulate contribution rows into ``n_rows`` output rows.

    ``out[row_ids[i]] += contrib[i]`` for every i, summing in ascending
    row-id groups with contributions kept in input order.
    """
    out = np.zeros((n_rows, contrib.shape[1]), dtype=np.float64)
    if row_ids.size == 0:
        return out
    order = np.argsort(row_ids, kind="stable")
    sorted_ids = row_ids[order]
    csorted = contrib[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    out[sorted_ids[starts]] = np.add.reduceat(csorted, starts, axis=0)
    return out


def spmv_csr(indptr, indices, data, x, n_rows):
    """CSR matrix-vector product."""
    prod = data * x[indices]
    row_ids = np.repeat(np.arange(n_rows), np.diff(indptr))
    return np.bincount(row_ids, weights=prod, minlength=n_rows)


def spmv_csr_t(indptr, indices, data, x, n_rows, n_cols):
    """CSR transpose matrix-vector product (A^T x)."""
    xrep = np.repeat(x, np.diff(indptr))
    return np.bincount(indices, weights=data * xrep, minlength=n_cols)


def siddon_ray(x0, y0, x1, y1, n):
    """Pixel crossings of the segment (x0,y0)->(x1,y1) through the n x n
    unit-pixel square centered at the origin.

    Returns (flat pixel indices in traversal order, intersection lengths).
    Row i spans y in [-n/2+i, -n/2+i+1), column j likewise in x; the flat
    index is i*n + j.
    """
    half = n / 2.0
    dx = x1 - x0
    dy = y1 - y0
    seg = np.hypot(dx, dy)
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    if seg == 0.0:
        return empty
    tmin, tmax = 0.0, 1.0
    for p0, dp in ((x0, dx), (y0, dy)):
        if dp == 0.0:
            if p0 <= -half or p0 >= half:
                return empty
        else:
            ta = (-half - p0) / dp
            tb = (half - p0) / dp
            if ta > tb:
                ta, tb = tb, ta
            tmin = max(tmin, ta)
            tmax = min(tmax, tb)
    if tmin >= tmax:
        return empty
    lines = -half + np.arange(n + 1)
    ts = [np.array([tmin, tmax])]
    if dx != 0.0:
        tx = (lines - x0) / dx
        ts.append(tx[(tx > tmin) & (tx < tmax)])
    if dy != 0.0:
        ty = (lines - y0) / dy
        ts.append(ty[(ty > tmin) & (ty < tmax)])
    t = np.sort(np.concatenate(ts))
    dt = np.diff(t)
    keep = dt > 1e-12 * (tmax - tmin)
    if not keep.any():
        return empty
    tm = 0.5 * (t[:-1] + t[1:])[keep]
    lengths = dt[keep] * seg
    col = np.clip(np.floor(x0 + tm * dx + half).astype(np.int64), 0, n - 1)
    row = np.clip(np.floor(y0 + tm * dy + half).astype(np.int64), 0, n - 1)
    pix = row * n + col
    # merge consecutive duplicates produced by grazing crossings
    if pix.size > 1:
        same = pix[1:] == pix[:-1]
        if same.any():
            group = np.r_[0, np.cumsum(~same)]
            starts = np.flatnonzero(np.r_[True, ~same])
            lengths = np.bincount(group, weights=lengths)
            pix = pix[starts]
    return pix, lengths
