"""Reconstruction under a general linear degradation A f = g (CT projection,
average-filter super-resolution, any linear fidelity).

Same outer/inner structure as the inpainting solver, but the image update
solves (mu1 * W + mu2 * A^T A) f = rhs, which is SPD for any admissible
weights, and the fidelity constraint gets its own dual variable.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .errors import InvalidArgumentError, NumericalError
from .graph import gather_all, scatter
from .linalg import cg_solve
from .patches import PatchConfig
from .sweeps import build_sweep_operators
from .synth import seeded_rng
from .trace import ConvergenceTrace

_ADJOINT_TOL = 1e-10


@dataclass
class LinearDegradation:
    """Linear map image -> measurement with its adjoint.

    ``apply`` takes an (m, n) image and returns a 1-D measurement; ``adjoint``
    does the reverse. ``matrix`` optionally holds an explicit sparse form.
    """

    apply: callable
    adjoint: callable
    image_shape: tuple
    measurement_size: int
    matrix: object = None

    @classmethod
    def from_sparse(cls, a, image_shape):
        m, n = image_shape
        if a.shape[1] != m * n:
            raise InvalidArgumentError(
                f"matrix has {a.shape[1]} columns, image has {m * n} pixels"
            )
        return cls(
            apply=lambda f: a.matvec(np.asarray(f).ravel()),
            adjoint=lambda g: a.rmatvec(g).reshape(m, n),
            image_shape=(m, n),
            measurement_size=a.shape[0],
            matrix=a,
        )

    def check_adjoint(self, probes=3, seed=1234):
        """Verify <A f, y> == <f, A^T y> on random probes."""
        rng = seeded_rng(seed)
        for _ in range(probes):
            f = rng.random(self.image_shape)
            y = rng.random(self.measurement_size)
            lhs = float(self.apply(f) @ y)
            rhs = float((f * self.adjoint(y)).sum())
            scale = max(abs(lhs), abs(rhs), 1.0)
            if abs(lhs - rhs) > _ADJOINT_TOL * scale:
                raise InvalidArgumentError(
                    f"adjoint identity violated: {lhs!r} vs {rhs!r}"
                )


def build_average_operator(m, n, s):
    """Block-mean downsampling by a factor of s in both directions."""
    if s < 1 or m % s or n % s:
        raise InvalidArgumentError(
            f"block size {s} must divide the image sides {m}x{n}"
        )
    ml, nl = m // s, n // s

    def apply(f):
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (m, n):
            raise InvalidArgumentError(f"expected a {m}x{n} image, got {f.shape}")
        return f.reshape(ml, s, nl, s).mean(axis=(1, 3)).ravel()

    def adjoint(g):
        g = np.asarray(g, dtype=np.float64).ravel()
        if g.size != ml * nl:
            raise InvalidArgumentError(
                f"expected {ml * nl} measurements, got {g.size}"
            )
        return np.repeat(np.repeat(g.reshape(ml, nl), s, axis=0), s, axis=1) / (s * s)

    return LinearDegradation(
        apply=apply,
        adjoint=adjoint,
        image_shape=(m, n),
        measurement_size=ml * nl,
    )


@dataclass
class LinopProblem:
    """Degradation operator, measurements, and solver weights."""

    op: LinearDegradation
    g: np.ndarray
    cfg: PatchConfig
    mu1: float = 1.0
    mu2: float = 1.0
    outer_iters: int = 6
    inner_iters: int = 1
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64).ravel()
        if self.g.size != self.op.measurement_size:
            raise InvalidArgumentError(
                f"{self.g.size} measurements for an operator producing "
                f"{self.op.measurement_size}"
            )
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise InvalidArgumentError("mu1 and mu2 must be positive")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise InvalidArgumentError("iteration counts must be >= 1")
        if self.tol <= 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")


@dataclass
class LinopState:
    f: np.ndarray
    beta: np.ndarray
    duals1: np.ndarray  # per-center blocks
    duals2: np.ndarray  # measurement-sized
    fidelity: float = field(default=np.nan)


def initialize_linop(prob, seed):
    """Random image drawn uniformly from the range of the normalized
    backprojection of the data.

    The normalizer A^T(A 1) makes the ratio a local mean of the true image
    (exact for the identity and block-average operators, the right scale
    for ray transforms)."""
    op = prob.op
    bp = op.adjoint(prob.g)
    unit_response = op.adjoint(op.apply(np.ones(op.image_shape)))
    ref = bp / np.maximum(unit_response, 1e-12)
    lo, hi = float(ref.min()), float(ref.max())
    rng = seeded_rng(seed)
    return lo + (hi - lo) * rng.random(op.image_shape)


def inner_sweep_linop(state, ops, prob):
    """One ADMM sweep: SVT of every localized block, SPD image update, and
    both dual updates."""
    mu1, mu2 = prob.mu1, prob.mu2
    op = prob.op
    m, n = op.image_shape
    blocks = gather_all(ops.nbr, ops.patches_of(state.f))
    beta, nn_sums = kernels.svt_batch(blocks + state.duals1, 1.0 / mu1)
    rhs = mu1 * np.bincount(
        ops.pmap.ravel(),
        weights=scatter(ops.nbr, beta - state.duals1).ravel(),
        minlength=m * n,
    )
    rhs += mu2 * op.adjoint(prob.g - state.duals2).ravel()
    w = ops.weights

    def apply(v):
        img = v.reshape(m, n)
        return mu1 * w * v + mu2 * op.adjoint(op.apply(img)).ravel()

    f_new = cg_solve(apply, rhs, tol=prob.tol, max_iter=m * n + 50).reshape(m, n)
    diff = gather_all(ops.nbr, ops.patches_of(f_new)) - beta
    duals1 = state.duals1 + diff
    misfit = op.apply(f_new) - prob.g
    duals2 = state.duals2 + misfit
    g_norm = float(np.linalg.norm(prob.g))
    fidelity = float(np.linalg.norm(misfit)) / g_norm if g_norm else float(
        np.linalg.norm(misfit)
    )
    return LinopState(
        f=f_new,
        beta=beta,
        duals1=duals1,
        duals2=duals2,
        fidelity=fidelity,
    ), float(nn_sums.sum())


def solve_linop(prob):
    """Outer manifold updates around inner_sweep_linop.

    Returns the reconstruction and a trace whose residual column is the
    relative fidelity misfit |A f - g| / |g|.
    """
    f = initialize_linop(prob, prob.seed)
    trace = ConvergenceTrace(normalize=False)
    duals1 = None
    duals2 = np.zeros(prob.op.measurement_size)
    for _ in range(prob.outer_iters):
        ops = build_sweep_operators(f, prob.cfg, need_graph=False)
        beta = gather_all(ops.nbr, ops.patches_of(f))
        if duals1 is None:
            duals1 = np.zeros_like(beta)
        state = LinopState(f=f, beta=beta, duals1=duals1, duals2=duals2)
        for _ in range(prob.inner_iters):
            state, objective = inner_sweep_linop(state, ops, prob)
            if not np.all(np.isfinite(state.f)):
                raise NumericalError(
                    f"non-finite image values after sweep {len(trace) + 1}"
                )
            trace.append(objective, state.fidelity)
        f = state.f
        duals1 = state.duals1
        duals2 = state.duals2
    return f, trace
