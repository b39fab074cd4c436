"""Synthetic inputs: analytic phantoms, sampling masks, and the seeded RNG
used everywhere randomness is required."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

PHANTOM_KINDS = ("disk", "shepp-like", "texture")

# (cx, cy, half-axis a, half-axis b, rotation in radians, additive value),
# normalized coordinates in [-1, 1]
_SHEPP_ELLIPSES = (
    (0.0, 0.0, 0.72, 0.92, 0.0, 180.0),
    (0.0, -0.02, 0.64, 0.84, 0.0, -60.0),
    (0.24, 0.0, 0.12, 0.3, -0.3, -45.0),
    (-0.24, 0.0, 0.16, 0.36, 0.3, -45.0),
    (0.0, 0.38, 0.2, 0.24, 0.0, 35.0),
    (0.0, -0.45, 0.06, 0.06, 0.0, 40.0),
    (-0.07, -0.62, 0.045, 0.045, 0.0, 40.0),
    (0.06, -0.62, 0.045, 0.045, 0.0, 40.0),
)


def seeded_rng(seed):
    """Counter-based (Philox) generator: identical streams across platforms
    for the same seed."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def make_phantom(kind, n):
    """Deterministic analytic test image with values in [0, 255].

    disk: uniform circle of radius n/3; texture: two oriented sinusoids plus
    a smooth ramp; shepp-like: a few additive ellipses.
    """
    if n < 8:
        raise InvalidArgumentError(f"phantom size must be >= 8, got {n}")
    if kind not in PHANTOM_KINDS:
        raise InvalidArgumentError(
            f"phantom kind must be one of {PHANTOM_KINDS}, got {kind!r}"
        )
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    if kind == "disk":
        cy = i + 0.5 - n / 2.0
        cx = j + 0.5 - n / 2.0
        return np.where(cy * cy + cx * cx < (n / 3.0) ** 2, 255.0, 0.0)
    if kind == "texture":
        return texture_value((i + 0.5) / n, (j + 0.5) / n)
    y = (i + 0.5 - n / 2.0) / (n / 2.0)
    x = (j + 0.5 - n / 2.0) / (n / 2.0)
    img = np.zeros((n, n))
    for cx, cy, a, b, rot, value in _SHEPP_ELLIPSES:
        xr = (x - cx) * np.cos(rot) + (y - cy) * np.sin(rot)
        yr = -(x - cx) * np.sin(rot) + (y - cy) * np.cos(rot)
        img += np.where((xr / a) ** 2 + (yr / b) ** 2 <= 1.0, value, 0.0)
    return np.clip(img, 0.0, 255.0)


def texture_value(v, u):
    """Closed form of the texture phantom at normalized coordinates
    (v = row fraction, u = column fraction)."""
    raw = (
        0.5 * np.sin(2.0 * np.pi * (6.0 * u + 2.0 * v))
        + 0.5 * np.sin(2.0 * np.pi * (-3.0 * u + 5.0 * v))
        + 0.5 * (u + v)
    )
    return 255.0 * (raw + 1.0) / 3.0


@dataclass(frozen=True)
class MaskSpec:
    """Sampling mask description: exact-count uniform random, grid
    subsampling, or a mask file."""

    kind: str  # "random" | "grid" | "file"
    rate: float | None = None
    stride: int | None = None
    seed: int = 0
    path: str | None = None


def gen_mask(spec, m, n):
    """Boolean known-pixel mask of shape (m, n).

    random: exactly round(rate * m * n) known pixels, sampled without
    replacement, deterministic in the seed. grid: known at rows/columns
    0, stride, 2*stride, ... file: nonzero pixels of a PGM file.
    """
    if spec.kind == "random":
        if spec.rate is None or not (0.0 < spec.rate <= 1.0):
            raise InvalidArgumentError(
                f"random mask needs a rate in (0, 1], got {spec.rate}"
            )
        count = int(round(spec.rate * m * n))
        if count < 1:
            raise InvalidArgumentError(
                f"mask rate {spec.rate} selects no pixels on a {m}x{n} grid"
            )
        rng = seeded_rng(spec.seed)
        chosen = rng.permutation(m * n)[:count]
        mask = np.zeros(m * n, dtype=bool)
        mask[chosen] = True
        return mask.reshape(m, n)
    if spec.kind == "grid":
        if spec.stride is None or spec.stride < 1:
            raise InvalidArgumentError(
                f"grid mask needs a stride >= 1, got {spec.stride}"
            )
        mask = np.zeros((m, n), dtype=bool)
        mask[:: spec.stride, :: spec.stride] = True
        return mask
    if spec.kind == "file":
        if not spec.path:
            raise InvalidArgumentError("file mask needs a path")
        from .formats import read_pgm

        img = read_pgm(spec.path)
        if img.shape != (m, n):
            raise InvalidArgumentError(
                f"mask file shape {img.shape} does not match image {(m, n)}"
            )
        mask = img > 0
        if not mask.any():
            raise InvalidArgumentError("mask file selects no pixels")
        return mask
    raise InvalidArgumentError(f"unknown mask kind {spec.kind!r}")
