"""Per-outer-iteration operator bundle shared by the image solvers.

Each outer iteration freezes the patch manifold of the current image:
neighbor lists, occurrence weights, and (when diffusion is active) the
affinity Laplacian are all rebuilt from scratch here.
"""

from dataclasses import dataclass

import numpy as np

from .graph import AffinityGraph, NeighborhoodSet, affinity_laplacian, knn_build
from .patches import PatchConfig, patch_index_map, pixel_occurrence_weights


@dataclass
class SweepOperators:
    """Operators frozen for the inner sweeps of one outer iteration."""

    cfg: PatchConfig
    image_shape: tuple
    pmap: np.ndarray  # (tau^2, m*n) patch index map
    nbr: NeighborhoodSet
    weights: np.ndarray  # (m*n,) diagonal of sum_x P^T Q_x^T Q_x P
    graph: AffinityGraph | None = None

    def patches_of(self, f):
        return f.ravel()[self.pmap]


def build_sweep_operators(f, cfg, need_graph=False):
    """Freeze the patch manifold of ``f``: KNN lists, occurrence weights and
    optionally the affinity Laplacian."""
    m, n = f.shape
    pmap = patch_index_map(m, n, cfg)
    p = f.ravel()[pmap]
    nbr = knn_build(p, cfg.knn_k)
    weights = pixel_occurrence_weights(m, n, cfg, nbr.counts)
    graph = affinity_laplacian(p, nbr) if need_graph else None
    return SweepOperators(
        cfg=cfg,
        image_shape=(m, n),
        pmap=pmap,
        nbr=nbr,
        weights=weights,
        graph=graph,
    )
