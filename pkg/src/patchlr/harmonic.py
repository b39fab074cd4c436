"""Harmonic extension on an affinity graph: the classical baseline that
fills unknown values by solving the graph Laplace equation with the known
values as Dirichlet data."""

import numpy as np

from .errors import InvalidArgumentError, SingularSystemError
from .linalg import cg_solve


def _check_anchored(graph, known):
    """Every unknown node must reach a known node through graph edges."""
    reach = known.astype(np.float64)
    for _ in range(graph.node_count):
        spread = graph.adjacency.matvec(reach)
        new = reach + (spread > 0.0)
        new = (new > 0.0).astype(np.float64)
        if np.array_equal(new, reach):
            break
        reach = new
    if not np.all(reach > 0.0):
        orphans = np.flatnonzero(reach == 0.0)
        raise SingularSystemError(
            f"{orphans.size} unknown nodes (first: {orphans[0]}) have no "
            "path to any known value"
        )


def harmonic_extension(h, known, graph, tol=1e-10):
    """Solve L f = 0 on the unknown set with f fixed to h on the known set.

    ``h`` and ``known`` may have any matching shape; graph nodes correspond
    to their flattened entries.
    """
    h = np.asarray(h, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    if h.shape != known.shape:
        raise InvalidArgumentError("data and mask shapes differ")
    if h.size != graph.node_count:
        raise InvalidArgumentError(
            f"{h.size} values for a graph with {graph.node_count} nodes"
        )
    kflat = known.ravel()
    if not kflat.any():
        raise InvalidArgumentError("known set must be non-empty")
    out = np.where(kflat, h.ravel(), 0.0)
    free = ~kflat
    if not free.any():
        return h.copy()
    _check_anchored(graph, kflat)
    lap = graph.laplacian
    rhs_free = lap.matvec(out)[free]

    def apply_free(u):
        v = np.zeros(h.size)
        v[free] = u
        return -lap.matvec(v)[free]

    out[free] = cg_solve(
        apply_free, rhs_free, tol=tol, max_iter=int(free.sum()) + 100
    )
    return out.reshape(h.shape)
