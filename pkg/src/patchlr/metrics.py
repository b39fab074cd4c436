"""Image quality metric."""

import math

import numpy as np

from .errors import InvalidArgumentError


def psnr(f, ref):
    """Peak signal-to-noise ratio in decibels.

    Uses the reference image's own intensity extremes as the peak:
    10 * log10(MN * (ref_max - ref_min)^2 / sum((f - ref)^2)) with MN the
    total pixel count. Identical images give +inf.
    """
    f = np.asarray(f, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if f.shape != ref.shape:
        raise InvalidArgumentError(
            f"image shapes differ: {f.shape} vs {ref.shape}"
        )
    peak = float(ref.max() - ref.min())
    if peak == 0.0:
        raise InvalidArgumentError("reference image is constant")
    err = float(((f - ref) ** 2).sum())
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(f.size * peak * peak / err)
