"""Patch transform and its adjoint.

An m x n image maps to a tau^2 x mn matrix whose column x is the vectorized
tau x tau window centered at pixel x of the symmetric extension. All patch
reads are encoded by a single integer index map (one source pixel per patch
entry), which makes the adjoint an exact scatter-add and the composition
adjoint(transform) a diagonal operator of pixel occurrence counts.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PatchConfig:
    """Patch half-width eta (window size tau = 2*eta + 1) and KNN size."""

    eta: int
    knn_k: int

    def __post_init__(self):
        if self.eta < 0:
            raise InvalidArgumentError(f"eta must be >= 0, got {self.eta}")
        if self.knn_k < 1:
            raise InvalidArgumentError(f"knn_k must be >= 1, got {self.knn_k}")

    @property
    def tau(self):
        return 2 * self.eta + 1

    @property
    def patch_dim(self):
        return self.tau * self.tau

    @classmethod
    def from_patch_size(cls, tau, knn_k):
        if tau < 1 or tau % 2 == 0:
            raise InvalidArgumentError(f"patch size must be odd and >= 1, got {tau}")
        return cls(eta=(tau - 1) // 2, knn_k=knn_k)


@dataclass(frozen=True)
class PatchMatrix:
    """Column-per-pixel matrix of vectorized patches."""

    values: np.ndarray  # (tau^2, m*n)
    image_shape: tuple
    eta: int

    @property
    def patch_dim(self):
        return self.values.shape[0]

    @property
    def center_count(self):
        return self.values.shape[1]

    @property
    def center_coords(self):
        m, n = self.image_shape
        flat = np.arange(m * n)
        return np.stack([flat // n, flat % n], axis=1)


def _reflect_indices(size, eta):
    """Half-sample symmetric extension map: index -1 -> 0, index size ->
    size - 1, applied recursively (closed form: triangle wave of period
    2 * size)."""
    idx = np.mod(np.arange(-eta, size + eta), 2 * size)
    return np.where(idx < size, idx, 2 * size - 1 - idx)


def symmetric_extend(f, eta):
    """Mirror-pad an image by ``eta`` pixels on every side."""
    f = np.asarray(f, dtype=np.float64)
    m, n = f.shape
    if eta > min(m, n):
        raise InvalidArgumentError(
            f"extension width {eta} must not exceed the image sides {m}x{n}"
        )
    if eta == 0:
        return f.copy()
    return f[np.ix_(_reflect_indices(m, eta), _reflect_indices(n, eta))]


@lru_cache(maxsize=8)
def _patch_index_map(m, n, eta):
    """(tau^2, m*n) map from patch entry (offset s, center x) to the flat
    source pixel; offsets run row-major over {-eta..eta}^2, centers row-major
    over the image grid."""
    if eta > min(m, n):
        raise InvalidArgumentError(
            f"patch half-width {eta} must not exceed the image sides {m}x{n}"
        )
    tau = 2 * eta + 1
    rmap = _reflect_indices(m, eta)
    cmap = _reflect_indices(n, eta)
    offs = np.arange(tau)
    # source row for (center row xi, offset si): rmap[xi + si]
    rows = rmap[np.arange(m)[:, None] + offs[None, :]]  # (m, tau)
    cols = cmap[np.arange(n)[:, None] + offs[None, :]]  # (n, tau)
    flat = (
        rows[:, None, :, None] * n + cols[None, :, None, :]
    )  # (m, n, tau, tau) indexed [xi, xj, si, sj]
    return np.ascontiguousarray(
        flat.transpose(2, 3, 0, 1).reshape(tau * tau, m * n)
    )


def patch_index_map(m, n, cfg):
    return _patch_index_map(int(m), int(n), int(cfg.eta))


def patch_transform(f, cfg):
    """Stack every tau x tau patch of the symmetric extension as a column."""
    f = np.asarray(f, dtype=np.float64)
    if f.size == 0:
        raise InvalidArgumentError("image must be non-empty")
    m, n = f.shape
    pmap = patch_index_map(m, n, cfg)
    return PatchMatrix(values=f.ravel()[pmap], image_shape=(m, n), eta=cfg.eta)


def patch_adjoint(g, cfg, m, n):
    """Adjoint of patch_transform: scatter-add patch entries back through the
    same index map, so <P f, G> == <f, P^T G>."""
    g = np.asarray(g, dtype=np.float64)
    pmap = patch_index_map(m, n, cfg)
    if g.shape != pmap.shape:
        raise InvalidArgumentError(
            f"patch stack shape {g.shape} does not match expected {pmap.shape}"
        )
    out = np.bincount(pmap.ravel(), weights=g.ravel(), minlength=m * n)
    return out.reshape(m, n)


def transform_diagonal(m, n, cfg):
    """Diagonal of P^T P: how many patch entries read each pixel."""
    pmap = patch_index_map(m, n, cfg)
    return np.bincount(pmap.ravel(), minlength=m * n).astype(np.float64)


def pixel_occurrence_weights(m, n, cfg, column_counts):
    """Diagonal of sum_x P^T Q_x^T Q_x P: total appearances of each pixel
    across all localized blocks.

    ``column_counts[x]`` is the number of neighbor lists containing center x.
    """
    pmap = patch_index_map(m, n, cfg)
    tau2 = pmap.shape[0]
    w = np.bincount(
        pmap.ravel(),
        weights=np.tile(np.asarray(column_counts, dtype=np.float64), tau2),
        minlength=m * n,
    )
    return w
