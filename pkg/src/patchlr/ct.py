"""Fan-beam CT geometry and the Siddon ray-traced system matrix.

Pixels have unit pitch and the grid is centered at the origin: row i covers
y in [-N/2 + i, -N/2 + i + 1), column j the same in x, flat index i*N + j.
The source moves on a circle of radius ``source_radius``; detector cells sit
on a virtual flat detector perpendicular to the central ray at distance
``source_radius + detector_radius`` from the source, spaced to cover the
image circumradius with a 10% margin.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import InvalidArgumentError
from .linalg import SparseOperator

_MARGIN = 1.1


@dataclass(frozen=True)
class Ray:
    """Directed segment from the source point to a detector cell."""

    source: tuple
    detector: tuple

    def __post_init__(self):
        if self.source == self.detector:
            raise InvalidArgumentError("ray endpoints must be distinct")


@dataclass(frozen=True)
class FanBeamGeometry:
    """Acquisition geometry; all lengths in pixel units."""

    n: int
    views: int
    detectors: int
    source_radius: float
    detector_radius: float

    def __post_init__(self):
        if self.n < 1 or self.views < 1 or self.detectors < 1:
            raise InvalidArgumentError("n, views, and detectors must be >= 1")
        if self.source_radius <= self.n * np.sqrt(2.0) / 2.0:
            raise InvalidArgumentError(
                f"source radius {self.source_radius} must exceed the image "
                f"circumradius {self.n * np.sqrt(2.0) / 2.0:.3f}"
            )
        if self.detector_radius <= 0:
            raise InvalidArgumentError("detector radius must be positive")

    @classmethod
    def standard(cls, n, views, detectors=None, source_radius=None,
                 detector_radius=None):
        """Defaults: radii of 2N; 512 detector cells at N >= 256, else 2N."""
        if detectors is None:
            detectors = 512 if n >= 256 else 2 * n
        return cls(
            n=int(n),
            views=int(views),
            detectors=int(detectors),
            source_radius=float(source_radius if source_radius is not None else 2.0 * n),
            detector_radius=float(detector_radius if detector_radius is not None else 2.0 * n),
        )

    @property
    def angles(self):
        """View angles, uniform over [0, 2*pi)."""
        return np.arange(self.views) * (2.0 * np.pi / self.views)

    @property
    def detector_half_width(self):
        """Half-width of the virtual flat detector (10% margin over the
        magnified image circumradius)."""
        dist = self.source_radius + self.detector_radius
        return _MARGIN * (self.n * np.sqrt(2.0) / 2.0) * dist / self.source_radius

    def ray_endpoints(self):
        """Source and detector points for every (view, detector) pair, in
        row order view-major."""
        theta = self.angles
        src = self.source_radius * np.stack(
            [np.cos(theta), np.sin(theta)], axis=1
        )  # (views, 2)
        toward = -src / self.source_radius
        perp = np.stack([-toward[:, 1], toward[:, 0]], axis=1)
        dist = self.source_radius + self.detector_radius
        w = self.detector_half_width
        offsets = ((np.arange(self.detectors) + 0.5) / self.detectors - 0.5) * 2.0 * w
        det = (
            src[:, None, :]
            + dist * toward[:, None, :]
            + offsets[None, :, None] * perp[:, None, :]
        )  # (views, detectors, 2)
        sources = np.repeat(src, self.detectors, axis=0)
        return sources, det.reshape(-1, 2)

    def metadata(self):
        """Geometry record for run sidecars."""
        return {
            "n": self.n,
            "views": self.views,
            "detectors": self.detectors,
            "source_radius": self.source_radius,
            "detector_radius": self.detector_radius,
            "detector_half_width": self.detector_half_width,
            "angle_step": 2.0 * np.pi / self.views,
        }


def siddon_trace(ray, n):
    """Exact pixel intersections of a ray with the n x n grid.

    Returns (flat pixel indices in traversal order, intersection lengths);
    both empty when the ray misses the image square.
    """
    if n < 1:
        raise InvalidArgumentError(f"grid size must be >= 1, got {n}")
    x0, y0 = (float(v) for v in ray.source)
    x1, y1 = (float(v) for v in ray.detector)
    return kernels.siddon_ray(x0, y0, x1, y1, n)


def build_system_matrix(geo):
    """Sparse forward projector: one row of intersection lengths per ray."""
    n = geo.n
    sources, dets = geo.ray_endpoints()
    n_rays = sources.shape[0]
    pix_parts = []
    len_parts = []
    counts = np.zeros(n_rays, dtype=np.int64)
    for r in range(n_rays):
        pix, lengths = kernels.siddon_ray(
            sources[r, 0], sources[r, 1], dets[r, 0], dets[r, 1], n
        )
        counts[r] = pix.size
        if pix.size:
            pix_parts.append(pix)
            len_parts.append(lengths)
    rows = np.repeat(np.arange(n_rays), counts)
    cols = np.concatenate(pix_parts) if pix_parts else np.empty(0, np.int64)
    vals = np.concatenate(len_parts) if len_parts else np.empty(0, np.float64)
    return SparseOperator.from_coo(rows, cols, vals, (n_rays, n * n))


def forward_project(a, f):
    """Sinogram A @ vec(f) of an image under a system matrix."""
    f = np.asarray(f, dtype=np.float64)
    if f.size != a.shape[1]:
        raise InvalidArgumentError(
            f"image has {f.size} pixels, matrix expects {a.shape[1]}"
        )
    return a.matvec(f.ravel())
