"""Patch-manifold local low-rank toolkit.

Restores images (inpainting, super-resolution, fan-beam CT) and completes
labels on point clouds by shrinking the nuclear norm of every local
K-nearest-neighbor block of the patch (or cluster) matrix.
"""

from .backend import active_backend
from .ct import FanBeamGeometry, Ray, build_system_matrix, forward_project, siddon_trace
from .errors import (
    ConvergenceError,
    FormatError,
    IndefiniteSystemError,
    InvalidArgumentError,
    NumericalError,
    PatchlrError,
    SingularSystemError,
)
from .graph import (
    AffinityGraph,
    NeighborhoodSet,
    affinity_laplacian,
    gather,
    gather_all,
    knn_build,
    local_rank_map,
    nonlocal_gradient_energy,
    qtilde,
    scatter,
)
from .harmonic import harmonic_extension
from .inpaint import (
    InpaintProblem,
    SolverParams,
    SweepState,
    initialize_fill,
    inner_sweep,
    solve_inpaint,
    trace_metrics,
)
from .linalg import (
    SparseOperator,
    SvdFactors,
    cg_solve,
    nuclear_norm,
    read_matrix_market,
    spmv,
    svd_thin,
    svt,
    write_matrix_market,
)
from .linop import (
    LinearDegradation,
    LinopProblem,
    build_average_operator,
    inner_sweep_linop,
    solve_linop,
)
from .metrics import psnr
from .patches import (
    PatchConfig,
    PatchMatrix,
    patch_adjoint,
    patch_transform,
    symmetric_extend,
)
from .ssl import (
    LabelAssignment,
    decode_labels,
    encode_labels,
    nearest_label_init,
    solve_ssl,
    ssl_sweep,
)
from .synth import MaskSpec, gen_mask, make_phantom
from .trace import ConvergenceTrace

__version__ = "0.1.0"
