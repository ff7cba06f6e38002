"""Handcrafted 29-dimensional image features and input standardization.

The layout (version "pinf-v1-29") is fixed:

  0   log(1 + Laplacian variance of luminance)      sharpness
  1   mean Sobel gradient magnitude (Tenengrad)     sharpness
  2   luminance mean                                exposure
  3   luminance standard deviation                  contrast
  4   fraction of pixels with luminance < 0.05      underexposure
  5   fraction of pixels with luminance > 0.95      overexposure
  6   border/center edge-energy ratio               framing (border = outer 15%)
  7   border minus center mean luminance            framing
  8   dominant gradient-orientation deviation from the nearest axis, /45 deg
  9   entropy of the 8-bin gradient-orientation histogram
  10  area fraction of the largest connected low-variance blob (8x8 block
      grid, block variance < 1e-4)                  occlusion
  11  mean luminance of that blob (0 if none)
  12  mean saturation (per-pixel max-min channel)
  13..28  luminance means of a 4x4 downsampled grid, row-major

Everything is a deterministic function of the pixels.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field

from ._backend import kernels
from .images import RasterImage

FEATURE_LAYOUT_VERSION = "pinf-v1-29"
FEATURE_COUNT = 29
MIN_SIDE = 8
BORDER_FRACTION = 0.15
BLOCK_GRID = 8
LOW_VARIANCE = 1e-4
STD_FLOOR = 1e-8

FEATURE_NAMES: tuple[str, ...] = (
    "log_laplacian_variance",
    "mean_sobel_magnitude",
    "luminance_mean",
    "luminance_std",
    "dark_fraction",
    "bright_fraction",
    "border_center_energy_ratio",
    "border_center_luminance_diff",
    "orientation_axis_deviation",
    "orientation_entropy",
    "flat_blob_area_fraction",
    "flat_blob_luminance",
    "saturation_mean",
) + tuple(f"grid4_mean_{i // 4}{i % 4}" for i in range(16))


class SizeError(ValueError):
    """Image too small for the requested operation."""


@dataclass(frozen=True)
class FeatureVector:
    values: array = field(repr=False)
    layout: str = FEATURE_LAYOUT_VERSION

    def __post_init__(self):
        if len(self.values) != FEATURE_COUNT:
            raise ValueError(f"feature vector must have {FEATURE_COUNT} entries")
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class Scaler:
    """Per-dimension standardization fitted on the training set."""

    mean: array
    std: array

    def apply(self, f: FeatureVector) -> array:
        out = array("d", bytes(8 * FEATURE_COUNT))
        for i in range(FEATURE_COUNT):
            out[i] = (f.values[i] - self.mean[i]) / self.std[i]
        return out


def luminance_plane(img: RasterImage) -> array:
    return img.luminance()


def laplacian_variance(gray: array, w: int, h: int) -> float:
    """Population variance of the valid-region 3x3 Laplacian response."""
    if w < 3 or h < 3:
        raise SizeError(f"laplacian variance needs at least 3x3, got {w}x{h}")
    return kernels.laplacian_variance(gray, w, h)


def _border_band(w: int, h: int) -> tuple[int, int]:
    return max(1, round(BORDER_FRACTION * h)), max(1, round(BORDER_FRACTION * w))


def _largest_flat_blob(means, variances, w: int, h: int) -> tuple[float, float]:
    """Area fraction and mean luminance of the largest 4-connected
    low-variance component on the block grid."""
    grid = BLOCK_GRID
    low = [variances[i] < LOW_VARIANCE for i in range(grid * grid)]
    counts = []
    for by in range(grid):
        y0, y1 = (by * h) // grid, ((by + 1) * h) // grid
        for bx in range(grid):
            x0, x1 = (bx * w) // grid, ((bx + 1) * w) // grid
            counts.append((y1 - y0) * (x1 - x0))
    seen = [False] * (grid * grid)
    best_cells: list[int] = []
    best_area = 0
    for start in range(grid * grid):
        if not low[start] or seen[start]:
            continue
        stack = [start]
        seen[start] = True
        cells = []
        while stack:
            cur = stack.pop()
            cells.append(cur)
            cy, cx = divmod(cur, grid)
            for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                if 0 <= ny < grid and 0 <= nx < grid:
                    idx = ny * grid + nx
                    if low[idx] and not seen[idx]:
                        seen[idx] = True
                        stack.append(idx)
        area = sum(counts[c] for c in cells)
        if area > best_area:
            best_area = area
            best_cells = cells
    if best_area == 0:
        return 0.0, 0.0
    lum = 0.0
    for c in sorted(best_cells):
        lum += means[c] * counts[c]
    return best_area / (w * h), lum / best_area


def extract_features(img: RasterImage) -> FeatureVector:
    """Compute the canonical 29 features for an image of at least 8x8."""
    w, h = img.width, img.height
    if w < MIN_SIDE or h < MIN_SIDE:
        raise SizeError(f"feature extraction needs at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}")
    gray = img.luminance()
    out = array("d", bytes(8 * FEATURE_COUNT))

    out[0] = math.log1p(kernels.laplacian_variance(gray, w, h))

    bh, bw = _border_band(w, h)
    sob = array("d", bytes(8 * 13))
    kernels.sobel_stats(gray, w, h, bh, bw, sob)
    out[1] = sob[0]
    out[6] = sob[1] / (sob[2] + 1e-8)

    mean, std, frac_lo, frac_hi = kernels.lum_stats(gray, w * h)
    out[2] = mean
    out[3] = std
    out[4] = frac_lo
    out[5] = frac_hi

    out[7] = kernels.border_lum_diff(gray, w, h, bh, bw)

    hist = [sob[5 + i] for i in range(8)]
    total = sum(hist)
    if total > 0.0:
        # fourth-harmonic mean orientation: both axes fold to 0, diagonals to 45
        theta = 0.25 * math.atan2(sob[4], sob[3])
        out[8] = abs(math.degrees(theta)) / 45.0
        entropy = 0.0
        for hv in hist:
            if hv > 0.0:
                p = hv / total
                entropy -= p * math.log(p)
        out[9] = entropy

    means8 = array("d", bytes(8 * BLOCK_GRID * BLOCK_GRID))
    vars8 = array("d", bytes(8 * BLOCK_GRID * BLOCK_GRID))
    kernels.block_stats(gray, w, h, BLOCK_GRID, means8, vars8)
    out[10], out[11] = _largest_flat_blob(means8, vars8, w, h)

    out[12] = kernels.saturation_mean(img.pixels, w, h)

    means4 = array("d", bytes(8 * 16))
    vars4 = array("d", bytes(8 * 16))
    kernels.block_stats(gray, w, h, 4, means4, vars4)
    for i in range(16):
        out[13 + i] = means4[i]

    return FeatureVector(out)


def fit_scaler(features: list[FeatureVector]) -> Scaler:
    """Per-dimension mean and population std (floored at 1e-8)."""
    if not features:
        raise ValueError("cannot fit a scaler on an empty feature list")
    n = len(features)
    mean = array("d", bytes(8 * FEATURE_COUNT))
    std = array("d", bytes(8 * FEATURE_COUNT))
    for i in range(FEATURE_COUNT):
        s = 0.0
        for f in features:
            s += f.values[i]
        mean[i] = s / n
    for i in range(FEATURE_COUNT):
        ss = 0.0
        for f in features:
            d = f.values[i] - mean[i]
            ss += d * d
        std[i] = max(math.sqrt(ss / n), STD_FLOOR)
    return Scaler(mean, std)
