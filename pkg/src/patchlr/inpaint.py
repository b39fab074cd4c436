"""Image inpainting by local low-rank patch regularization.

Outer iterations freeze the patch manifold of the current estimate; inner
split-Bregman sweeps alternate singular value thresholding of every
localized patch block, a Dirichlet-constrained quadratic image update, and
a dual ascent step. Known pixels are enforced by projection after every
sweep, never by penalty.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import (
    IndefiniteSystemError,
    InvalidArgumentError,
    NumericalError,
)
from .graph import gather_all, nonlocal_gradient_energy, scatter
from .linalg import cg_solve
from .patches import PatchConfig
from .sweeps import build_sweep_operators
from .synth import seeded_rng
from .trace import ConvergenceTrace


@dataclass
class InpaintProblem:
    """Observed data, known-pixel mask, and patch configuration."""

    data: np.ndarray  # (m, n) observed image h
    known: np.ndarray  # (m, n) bool, True where h is trusted
    cfg: PatchConfig

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.known = np.asarray(self.known, dtype=bool)
        if self.data.shape != self.known.shape:
            raise InvalidArgumentError("data and mask shapes differ")
        if not self.known.any():
            raise InvalidArgumentError("known set must be non-empty")
        if not np.all(np.isfinite(self.data[self.known])):
            raise InvalidArgumentError("observed values must be finite")


@dataclass
class SolverParams:
    """Weights and iteration budget for the split-Bregman solver.

    ``lam`` is the diffusion weight (negative values sharpen instead of
    smooth), ``mu`` the augmented-Lagrangian weight.
    """

    lam: float = 0.0
    mu: float = 1.0
    outer_iters: int = 6
    inner_iters: int = 1
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.mu <= 0:
            raise InvalidArgumentError(f"mu must be positive, got {self.mu}")
        if self.inner_iters < 1:
            raise InvalidArgumentError("inner_iters must be >= 1")
        if self.outer_iters < 1:
            raise InvalidArgumentError("outer_iters must be >= 1")
        if self.tol <= 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")


@dataclass
class SweepState:
    """Image iterate plus per-center auxiliary blocks and duals."""

    f: np.ndarray
    beta: np.ndarray  # (centers, tau^2, K+1)
    duals: np.ndarray  # same shape as beta


def initialize_fill(prob, seed):
    """Keep known pixels, draw the rest uniformly from the observed range."""
    if not prob.known.any():
        raise InvalidArgumentError("known set must be non-empty")
    observed = prob.data[prob.known]
    lo, hi = float(observed.min()), float(observed.max())
    rng = seeded_rng(seed)
    fill = lo + (hi - lo) * rng.random(prob.data.shape)
    return np.where(prob.known, prob.data, fill)


def _solve_constrained(ops, prob, params, rhs):
    """Solve (-lam * L + mu * W) f = rhs on the unknown set with Dirichlet
    data on the known set; returns the full image."""
    m, n = ops.image_shape
    lam, mu = params.lam, params.mu
    known = prob.known.ravel()
    free = ~known
    w = ops.weights
    lap = ops.graph.laplacian if ops.graph is not None else None

    def apply_full(v):
        out = mu * w * v
        if lam != 0.0:
            out -= lam * lap.matvec(v)
        return out

    h_ext = np.zeros(m * n)
    h_ext[known] = prob.data.ravel()[known]
    out = h_ext.copy()
    if free.any():
        rhs_free = rhs[free] - apply_full(h_ext)[free]

        def apply_free(u):
            v = np.zeros(m * n)
            v[free] = u
            return apply_full(v)[free]

        try:
            out[free] = cg_solve(
                apply_free, rhs_free, tol=params.tol,
                max_iter=int(free.sum()) + 50,
            )
        except IndefiniteSystemError as exc:
            raise IndefiniteSystemError(
                f"image update system is indefinite for lam={lam}: "
                f"increase mu (currently {mu}) or use lam >= 0"
            ) from exc
    return out.reshape(m, n)


def _sweep(state, ops, prob, params):
    """One split-Bregman sweep. Returns (state, objective, raw residual)."""
    mu = params.mu
    blocks = gather_all(ops.nbr, ops.patches_of(state.f))
    beta, nn_sums = kernels.svt_batch(blocks + state.duals, 1.0 / mu)
    rhs = mu * np.bincount(
        ops.pmap.ravel(),
        weights=scatter(ops.nbr, beta - state.duals).ravel(),
        minlength=state.f.size,
    )
    f_new = _solve_constrained(ops, prob, params, rhs)
    diff = gather_all(ops.nbr, ops.patches_of(f_new)) - beta
    duals = state.duals + diff
    objective = float(nn_sums.sum())
    if params.lam != 0.0:
        objective += 0.5 * params.lam * nonlocal_gradient_energy(
            ops.graph, f_new.ravel()
        )
    residual = float(np.sqrt((diff * diff).sum(axis=(1, 2))).sum())
    return SweepState(f=f_new, beta=beta, duals=duals), objective, residual


def inner_sweep(state, ops, prob, params):
    """Public single-sweep entry point (SVT step, constrained image update,
    known-pixel projection, dual update)."""
    new_state, _, _ = _sweep(state, ops, prob, params)
    return new_state


def trace_metrics(state, ops, params):
    """Objective and raw constraint residual of the current state."""
    nuclear = float(kernels.svd_values_batch(state.beta).sum())
    objective = nuclear
    if params.lam != 0.0:
        objective += 0.5 * params.lam * nonlocal_gradient_energy(
            ops.graph, state.f.ravel()
        )
    diff = gather_all(ops.nbr, ops.patches_of(state.f)) - state.beta
    residual = float(np.sqrt((diff * diff).sum(axis=(1, 2))).sum())
    return objective, residual


def solve_inpaint(prob, params):
    """Run the full solver: random fill, then outer manifold updates with
    inner split-Bregman sweeps.

    Returns the restored image and the convergence trace (one row per inner
    sweep).
    """
    f = initialize_fill(prob, params.seed)
    trace = ConvergenceTrace()
    duals = None
    state = None
    for _ in range(params.outer_iters):
        ops = build_sweep_operators(f, prob.cfg, need_graph=params.lam != 0.0)
        beta = gather_all(ops.nbr, ops.patches_of(f))
        if duals is None:
            duals = np.zeros_like(beta)
        state = SweepState(f=f, beta=beta, duals=duals)
        for _ in range(params.inner_iters):
            state, objective, residual = _sweep(state, ops, prob, params)
            if not np.all(np.isfinite(state.f)):
                raise NumericalError(
                    f"non-finite image values after sweep {len(trace) + 1}; "
                    f"try a larger mu than {params.mu}"
                )
            trace.append(objective, residual)
        f = state.f
        duals = state.duals
    return f, trace
