"""KNN neighborhoods, block gather/scatter, and the affinity-graph Laplacian.

A NeighborhoodSet realizes the per-center restriction to a point and its K
nearest neighbors; stacking all restricted blocks (gather) and its adjoint
(scatter) make the per-neighborhood nuclear norms separable. The affinity
graph carries self-tuning Gaussian weights on the KNN edge set and the
negative-semidefinite graph Laplacian built from them.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import InvalidArgumentError
from .linalg import SparseOperator

# distance floor for the self-tuning affinity scale
_SIGMA_FLOOR = 1e-12

# incremented on every knn_build call; lets tests assert how many times a
# solver constructed its neighborhoods
KNN_BUILD_COUNT = 0


@dataclass(frozen=True)
class NeighborhoodSet:
    """Per-center neighbor lists (self first, then K nearest)."""

    indices: np.ndarray  # (n, K+1) int64
    distances: np.ndarray  # (n, K+1) float64
    counts: np.ndarray  # (n,) int64, occurrences of each point across lists

    @property
    def k(self):
        return self.indices.shape[1] - 1

    @property
    def center_count(self):
        return self.indices.shape[0]


def knn_build(points, k):
    """Exact K-nearest-neighbor lists for a d x n column matrix of points.

    Ties are broken toward the smaller column index; the center itself is
    stored first in every list.
    """
    global KNN_BUILD_COUNT
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InvalidArgumentError("points must be a d x n matrix")
    n = points.shape[1]
    if k < 0 or k + 1 > n:
        raise InvalidArgumentError(
            f"need k + 1 <= point count, got k={k} with {n} points"
        )
    pts = np.ascontiguousarray(points.T)
    idx, dist = kernels.knn_search(pts, k)
    counts = np.bincount(idx.ravel(), minlength=n)
    KNN_BUILD_COUNT += 1
    return NeighborhoodSet(indices=idx, distances=dist, counts=counts)


def gather(nbr, m, x, axis=1):
    """Columns (axis=1) or rows (axis=0) of ``m`` selected by center ``x``'s
    neighbor list."""
    if x < 0 or x >= nbr.center_count:
        raise InvalidArgumentError(f"center {x} out of range")
    sel = nbr.indices[x]
    return m[:, sel].copy() if axis == 1 else m[sel, :].copy()


def gather_all(nbr, m, axis=1):
    """All localized blocks as one stack.

    axis=1: (n, rows(m), K+1) column blocks; axis=0: (n, K+1, cols(m)) row
    blocks.
    """
    if axis == 1:
        return np.ascontiguousarray(np.moveaxis(m[:, nbr.indices], 0, 1))
    return m[nbr.indices, :]


def scatter(nbr, blocks, axis=1):
    """Adjoint of gather_all: sum every block entry back onto its source
    column (axis=1) or row (axis=0)."""
    blocks = np.asarray(blocks, dtype=np.float64)
    n = nbr.center_count
    k1 = nbr.indices.shape[1]
    ids = nbr.indices.ravel()
    if axis == 1:
        if blocks.ndim != 3 or blocks.shape[0] != n or blocks.shape[2] != k1:
            raise InvalidArgumentError(
                f"expected block stack (n, rows, {k1}), got {blocks.shape}"
            )
        contrib = np.ascontiguousarray(np.moveaxis(blocks, 2, 1)).reshape(
            n * k1, blocks.shape[1]
        )
        return kernels.scatter_stack(ids, contrib, n).T
    if blocks.ndim != 3 or blocks.shape[0] != n or blocks.shape[1] != k1:
        raise InvalidArgumentError(
            f"expected block stack (n, {k1}, cols), got {blocks.shape}"
        )
    contrib = blocks.reshape(n * k1, blocks.shape[2])
    return kernels.scatter_stack(ids, contrib, n)


def qtilde(nbr, blocks, axis=1):
    """Left inverse of gather_all: scatter then divide by the occurrence
    counts."""
    acc = scatter(nbr, blocks, axis=axis)
    if axis == 1:
        return acc / nbr.counts[np.newaxis, :]
    return acc / nbr.counts[:, np.newaxis]


@dataclass(frozen=True)
class AffinityGraph:
    """Symmetric edge weights, node degrees, and the graph Laplacian
    ``(L f)(x) = sum_y w(x, y) (f(y) - f(x))`` (negative semidefinite)."""

    adjacency: SparseOperator
    degree: np.ndarray
    laplacian: SparseOperator

    @property
    def node_count(self):
        return self.adjacency.shape[0]

    @classmethod
    def from_adjacency(cls, adjacency):
        degree = adjacency.row_sums()
        n = adjacency.shape[0]
        row_ids = np.repeat(np.arange(n), np.diff(adjacency.indptr))
        lap = SparseOperator.from_coo(
            np.concatenate([row_ids, np.arange(n)]),
            np.concatenate([adjacency.indices, np.arange(n)]),
            np.concatenate([adjacency.data, -degree]),
            (n, n),
        )
        return cls(adjacency=adjacency, degree=degree, laplacian=lap)


def affinity_laplacian(points, nbr):
    """Self-tuning Gaussian affinity on the KNN edge set and its Laplacian.

    w(x, y) = exp(-d(x, y)^2 / (sigma(x) sigma(y))) with sigma(x) the
    distance to x's K-th neighbor (floored), symmetrized as (w + w^T) / 2.
    """
    points = np.asarray(points, dtype=np.float64)
    n = nbr.center_count
    if points.shape[1] != n:
        raise InvalidArgumentError("neighborhoods were built from different points")
    sigma = np.maximum(nbr.distances[:, -1], _SIGMA_FLOOR)
    src = np.repeat(np.arange(n), nbr.k)
    dst = nbr.indices[:, 1:].ravel()
    d2 = nbr.distances[:, 1:].ravel() ** 2
    w_half = 0.5 * np.exp(-d2 / (sigma[src] * sigma[dst]))
    keep = src != dst
    src, dst, w_half = src[keep], dst[keep], w_half[keep]
    adjacency = SparseOperator.from_coo(
        np.concatenate([src, dst]),
        np.concatenate([dst, src]),
        np.concatenate([w_half, w_half]),
        (n, n),
    )
    return AffinityGraph.from_adjacency(adjacency)


def nonlocal_gradient_energy(graph, f):
    """Sum over ordered pairs of w(x, y) (f(y) - f(x))^2."""
    f = np.asarray(f, dtype=np.float64).ravel()
    if f.size != graph.node_count:
        raise InvalidArgumentError(
            f"value array length {f.size} does not match {graph.node_count} nodes"
        )
    a = graph.adjacency
    row_ids = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    diff = f[a.indices] - f[row_ids]
    return float(np.sum(a.data * diff * diff))


def local_rank_map(pm, nbr, tol):
    """Numerical rank of each localized block of a patch matrix."""
    if tol <= 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    blocks = gather_all(nbr, pm.values, axis=1)
    vals = kernels.svd_values_batch(blocks)
    smax = vals[:, 0]
    ranks = (vals > tol * np.maximum(smax, _SIGMA_FLOOR)[:, None]).sum(axis=1)
    ranks[smax == 0.0] = 0
    return ranks.astype(np.int64)
