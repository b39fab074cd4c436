"""Dense and sparse linear algebra primitives.

Thin SVD, singular value thresholding, nuclear norm, a matrix-free conjugate
gradient solver for SPD systems, and a CSR sparse operator with Matrix Market
import/export.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import (
    ConvergenceError,
    FormatError,
    IndefiniteSystemError,
    InvalidArgumentError,
    NumericalError,
)

# relative floor below which singular values count as zero for rank queries
RANK_TOL = 1e-12


def _as_matrix(x, name="matrix"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 1:
        raise InvalidArgumentError(f"{name} must be a non-empty 2-D array")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``u @ diag(s) @ vt`` with orthonormal u columns / vt rows and
    s sorted non-increasing."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.s) @ self.vt

    def rank(self, tol=RANK_TOL):
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.s > tol * self.s[0]))


def svd_thin(x):
    """Thin singular value decomposition of a dense matrix.

    Raises InvalidArgumentError for non-finite input and NumericalError if
    the underlying iteration fails to converge.
    """
    x = _as_matrix(x)
    u, s, vt, status = kernels.svd_factors(x)
    if status != 0:
        raise NumericalError("SVD iteration did not converge")
    return SvdFactors(u=u, s=s, vt=vt)


def svt(x, t):
    """Singular value thresholding: shrink all singular values by ``t``.

    The proximal operator of ``t * nuclear_norm`` at ``x``.
    """
    x = _as_matrix(x)
    if t < 0:
        raise InvalidArgumentError(f"threshold must be >= 0, got {t}")
    f = svd_thin(x)
    return (f.u * np.maximum(f.s - t, 0.0)) @ f.vt


def nuclear_norm(x):
    """Sum of singular values."""
    x = _as_matrix(x)
    return float(svd_thin(x).s.sum())


def cg_solve(apply, b, tol=1e-8, max_iter=1000):
    """Conjugate gradient for a symmetric positive definite linear map.

    Parameters
    ----------
    apply : callable
        Matrix-free operator, ``apply(x) -> A @ x``.
    b : array
        Right-hand side.
    tol : float
        Relative residual target ``|A x - b| <= tol * |b|``.
    max_iter : int
        Iteration cap.

    Raises
    ------
    IndefiniteSystemError
        If non-positive curvature ``p^T A p <= 0`` is detected.
    ConvergenceError
        If the cap is reached first; carries the best iterate.
    """
    if tol <= 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    b = np.asarray(b, dtype=np.float64)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    target = tol * b_norm
    for it in range(1, max_iter + 1):
        ap = apply(p)
        p_ap = float(p @ ap)
        if p_ap <= 0.0:
            raise IndefiniteSystemError(
                f"non-positive curvature p^T A p = {p_ap:.3e} at iteration {it}"
            )
        alpha = rs / p_ap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= target:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    res = float(np.linalg.norm(apply(x) - b))
    if res <= target:
        return x
    raise ConvergenceError(
        f"CG did not reach tolerance {tol:g} in {max_iter} iterations "
        f"(relative residual {res / b_norm:.3e})",
        iterate=x,
        residual=res / b_norm,
        iterations=max_iter,
    )


class SparseOperator:
    """Row-compressed sparse matrix (CSR).

    Column indices are strictly increasing within each row and explicit
    zeros are dropped at construction.
    """

    def __init__(self, shape, indptr, indices, data):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if self.indptr.shape != (self.shape[0] + 1,):
            raise InvalidArgumentError("indptr length must be rows + 1")
        if np.any(np.diff(self.indptr) < 0):
            raise InvalidArgumentError("indptr must be non-decreasing")
        if self.indices.size and (
            self.indices.min() < 0 or self.indices.max() >= self.shape[1]
        ):
            raise InvalidArgumentError("column index out of bounds")

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        """Build from coordinate triplets; duplicates are summed and explicit
        zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        n_rows, n_cols = int(shape[0]), int(shape[1])
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise InvalidArgumentError("row index out of bounds")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise InvalidArgumentError("column index out of bounds")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.r_[True, (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])]
            group = np.cumsum(first) - 1
            vals = np.bincount(group, weights=vals)
            rows = rows[first]
            cols = cols[first]
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls((n_rows, n_cols), indptr, cols, vals)

    @classmethod
    def from_dense(cls, m):
        m = np.asarray(m, dtype=np.float64)
        rows, cols = np.nonzero(m)
        return cls.from_coo(rows, cols, m[rows, cols], m.shape)

    @property
    def nnz(self):
        return int(self.data.size)

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.shape[1]:
            raise InvalidArgumentError(
                f"operand length {x.size} does not match {self.shape[1]} columns"
            )
        return kernels.spmv_csr(self.indptr, self.indices, self.data, x, self.shape[0])

    def rmatvec(self, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.shape[0]:
            raise InvalidArgumentError(
                f"operand length {x.size} does not match {self.shape[0]} rows"
            )
        return kernels.spmv_csr_t(
            self.indptr, self.indices, self.data, x, self.shape[0], self.shape[1]
        )

    def to_dense(self):
        out = np.zeros(self.shape)
        for r in range(self.shape[0]):
            sl = slice(self.indptr[r], self.indptr[r + 1])
            out[r, self.indices[sl]] = self.data[sl]
        return out

    def transpose(self):
        row_ids = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        return SparseOperator.from_coo(
            self.indices, row_ids, self.data, (self.shape[1], self.shape[0])
        )

    def row_sums(self):
        row_ids = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        return np.bincount(row_ids, weights=self.data, minlength=self.shape[0])


def spmv(a, x, transpose=False):
    """Sparse matrix-vector product ``A x`` or ``A^T x``."""
    return a.rmatvec(x) if transpose else a.matvec(x)


_MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def write_matrix_market(a, path):
    """Export a SparseOperator in Matrix Market coordinate format
    (1-based indices)."""
    row_ids = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    with open(path, "w") as fh:
        fh.write(_MM_HEADER + "\n")
        fh.write(f"{a.shape[0]} {a.shape[1]} {a.nnz}\n")
        for r, c, v in zip(row_ids, a.indices, a.data):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


def read_matrix_market(path):
    """Import a SparseOperator from Matrix Market coordinate format."""
    with open(path, "r") as fh:
        header = fh.readline()
        if not header:
            raise FormatError(f"{path}: empty file", offset=0)
        tokens = header.strip().lower().split()
        want = _MM_HEADER.lower().split()
        if tokens != want:
            raise FormatError(f"{path}: unsupported Matrix Market header {header!r}")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        try:
            n_rows, n_cols, nnz = (int(v) for v in line.split())
        except ValueError as exc:
            raise FormatError(f"{path}: bad size line {line!r}") from exc
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for i in range(nnz):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise FormatError(f"{path}: truncated entry list at record {i}")
            rows[i] = int(parts[0]) - 1
            cols[i] = int(parts[1]) - 1
            vals[i] = float(parts[2])
    return SparseOperator.from_coo(rows, cols, vals, (n_rows, n_cols))
