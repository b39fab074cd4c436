"""Semi-supervised label completion on a fixed data manifold.

Points are rows of the cluster matrix here: each localized block stacks the
one-hot label rows of a point and its K nearest neighbors, so its rank is
the number of distinct labels in the neighborhood. ADMM sweeps shrink those
blocks toward low rank while labeled rows stay pinned.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import InvalidArgumentError
from .graph import gather_all, knn_build, qtilde
from .synth import seeded_rng

_DIST_BLOCK_BUDGET = 4_000_000


@dataclass
class LabelAssignment:
    """Known labels on a subset of points."""

    indices: np.ndarray  # labeled point indices, kept sorted ascending
    labels: np.ndarray  # class of each labeled point
    n_classes: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.indices.size == 0:
            raise InvalidArgumentError("labeled set must be non-empty")
        if self.indices.size != self.labels.size:
            raise InvalidArgumentError("indices and labels differ in length")
        if np.unique(self.indices).size != self.indices.size:
            raise InvalidArgumentError("labeled indices must be unique")
        order = np.argsort(self.indices)
        self.indices = self.indices[order]
        self.labels = self.labels[order]
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise InvalidArgumentError(
                f"labels must lie in 0..{self.n_classes - 1}"
            )
        missing = np.setdiff1d(np.arange(self.n_classes), self.labels)
        if missing.size:
            warnings.warn(
                f"classes {missing.tolist()} have no labeled example",
                stacklevel=2,
            )

    def one_hot(self):
        rows = np.zeros((self.indices.size, self.n_classes))
        rows[np.arange(self.indices.size), self.labels] = 1.0
        return rows


def encode_labels(labels, n_classes):
    """One-hot n x classes cluster matrix of a full label array."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidArgumentError(f"labels must lie in 0..{n_classes - 1}")
    phi = np.zeros((labels.size, n_classes))
    phi[np.arange(labels.size), labels] = 1.0
    return phi


def decode_labels(phi):
    """Per-row argmax; ties go to the smaller class index."""
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise InvalidArgumentError("cluster matrix has non-finite entries")
    return np.argmax(phi, axis=1).astype(np.int64)


def nearest_label_init(points, lab):
    """Give every unlabeled point the label of its nearest labeled point
    (ties toward the smaller labeled index)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[1]
    labeled = points[:, lab.indices]
    out = np.empty(n, dtype=np.int64)
    block = max(1, _DIST_BLOCK_BUDGET // max(1, lab.indices.size * points.shape[0]))
    for s in range(0, n, block):
        e = min(n, s + block)
        diff = points[:, s:e, None] - labeled[:, None, :]
        d2 = np.einsum("dbs,dbs->bs", diff, diff)
        out[s:e] = lab.labels[np.argmin(d2, axis=1)]
    out[lab.indices] = lab.labels
    return out


def ssl_sweep(phi, nbr, duals, mu, lab):
    """One ADMM sweep on the cluster matrix.

    SVT of every gathered row block, left-inverse reassembly on the
    unlabeled rows, exact one-hot projection on the labeled rows, then the
    dual update. The SVT argument carries +duals: that is the stationary
    form for the split whose quadratic is |psi - Q(phi) - D|^2 (with -duals
    the dual feedback is unstable and every label collapses to class 0).
    """
    if mu <= 0:
        raise InvalidArgumentError(f"mu must be positive, got {mu}")
    psi, _ = kernels.svt_batch(gather_all(nbr, phi, axis=0) + duals, 1.0 / mu)
    phi_new = qtilde(nbr, psi - duals, axis=0)
    phi_new[lab.indices] = lab.one_hot()
    duals = duals + gather_all(nbr, phi_new, axis=0) - psi
    return phi_new, duals


def solve_ssl(points, lab, k, mu=1.0, outer_iters=3, inner_iters=30,
              smoothing=0.5):
    """Full label completion.

    Neighborhoods are built once from the points; each outer iteration
    re-encodes the cluster matrix from the current labels with fresh
    auxiliaries and duals, runs the inner sweeps, and decodes. Stops early
    when the decoded labels no longer change.

    ``smoothing`` softens the re-encoded unlabeled rows toward the uniform
    class distribution. With exact one-hot rows every localized block has
    class-disjoint column supports, so SVT only rescales classes and the
    decoded labels can never move; a soft encoding couples the columns and
    lets neighborhoods actually revise labels. Labeled rows stay one-hot.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[1]
    if k + 1 > n:
        raise InvalidArgumentError(f"need k + 1 <= {n} points, got k={k}")
    if not 0.0 <= smoothing < 1.0:
        raise InvalidArgumentError(f"smoothing must be in [0, 1), got {smoothing}")
    nbr = knn_build(points, k)
    labels = nearest_label_init(points, lab)
    for _ in range(outer_iters):
        phi = encode_labels(labels, lab.n_classes)
        if smoothing:
            phi = (1.0 - smoothing) * phi + smoothing / lab.n_classes
        phi[lab.indices] = lab.one_hot()
        duals = np.zeros((n, k + 1, lab.n_classes))
        for _ in range(inner_iters):
            phi, duals = ssl_sweep(phi, nbr, duals, mu, lab)
        new_labels = decode_labels(phi)
        new_labels[lab.indices] = lab.labels
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels


def random_labeled_subset(true_labels, count, n_classes, seed):
    """Seeded uniform choice of labeled points, retried until every class
    appears when the budget allows it."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    n = true_labels.size
    if not 1 <= count <= n:
        raise InvalidArgumentError(f"labeled count must be in 1..{n}")
    rng = seeded_rng(seed)
    for _ in range(200):
        chosen = rng.permutation(n)[:count]
        if count < n_classes or np.unique(true_labels[chosen]).size == n_classes:
            break
    return LabelAssignment(
        indices=chosen, labels=true_labels[chosen], n_classes=n_classes
    )
