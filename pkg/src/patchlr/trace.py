"""Convergence trace shared by the iterative solvers."""

import numpy as np

from .errors import InvalidArgumentError


class ConvergenceTrace:
    """Per-sweep objective values and residuals.

    With ``normalize=True`` (the inpainting solver) each residual is divided
    by the first nonzero recorded value: the raw constraint residual before
    any progress is exactly zero by construction, so the first sweep's value
    serves as the reference. With ``normalize=False`` residuals are stored
    as given (the linear-degradation solver records the already-relative
    fidelity ratio).
    """

    def __init__(self, normalize=True):
        self.objective = []
        self.residual = []
        self.normalize = normalize
        self._base = None

    def append(self, objective, raw_residual):
        if not np.isfinite(objective) or not np.isfinite(raw_residual):
            raise InvalidArgumentError("trace entries must be finite")
        if raw_residual < 0:
            raise InvalidArgumentError("residual must be non-negative")
        if self.normalize:
            if self._base is None and raw_residual > 0.0:
                self._base = raw_residual
            raw_residual = raw_residual / self._base if self._base else 0.0
        self.objective.append(float(objective))
        self.residual.append(float(raw_residual))

    def __len__(self):
        return len(self.objective)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,objective,residual\n")
            for i, (o, r) in enumerate(zip(self.objective, self.residual), start=1):
                fh.write(f"{i},{o!r},{r!r}\n")
