"""Shadow-border weight maps.

Pipeline: box-smooth the binary mask, collect pixels whose smoothed value
sits strictly between two thresholds (the smeared border band), measure
four-directional local contrast there, accumulate per-border-pixel
Gaussian contributions over neighborhoods sized by contrast, and scale
the result so the maximum is exactly the cap (10).

Hard, high-contrast borders therefore receive both the largest weights
and the widest reweighted neighborhoods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ParameterError
from .imagecore import as_plane
from .shadow import ShadowMask

#: Step offsets for the four contrast directions (row, col):
#: horizontal, vertical, and the two diagonals.
_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))


@dataclass(frozen=True)
class BorderParams:
    """Knobs for the border-weight pipeline.

    ``sigma_max`` is in smoothed-mask units (the smoothed mask spans
    [0, 1]); ``r_max`` is the largest Chebyshev neighborhood radius in
    pixels. ``contrast_source`` selects the plane local contrast is
    measured on: the image luminance (default) or the smoothed mask.
    """

    window: int = 21
    tau1: float = 0.02
    tau2: float = 0.98
    sigma_max: float = 0.25
    r_max: int = 10
    w_cap: float = 10.0
    contrast_source: str = "luminance"

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ParameterError(f"window must be odd and >= 3, got {self.window}")
        if not (0.0 < self.tau1 < self.tau2 < 1.0):
            raise ParameterError(
                f"thresholds must satisfy 0 < tau1 < tau2 < 1, got "
                f"({self.tau1}, {self.tau2})")
        if self.sigma_max <= 0:
            raise ParameterError(f"sigma_max must be > 0, got {self.sigma_max}")
        if self.r_max < 1:
            raise ParameterError(f"r_max must be >= 1, got {self.r_max}")
        if self.w_cap <= 0:
            raise ParameterError(f"w_cap must be > 0, got {self.w_cap}")
        if self.contrast_source not in ("luminance", "mask"):
            raise ParameterError(
                f"contrast_source must be 'luminance' or 'mask', "
                f"got {self.contrast_source!r}")


@dataclass(frozen=True)
class BorderSet:
    """Border-band pixel coordinates with (optionally) their local contrast."""

    pixels: np.ndarray            # (K, 2) int64 rows of (row, col), row-major order
    contrast: np.ndarray | None = None   # (K,) >= 0
    t_max: float = 0.0

    def __len__(self) -> int:
        return len(self.pixels)


def smooth_mask(mask: ShadowMask, params: BorderParams | None = None) -> np.ndarray:
    """Box-filter the binary mask (replicate padding); values stay in [0, 1]."""
    params = params or BorderParams()
    plane = mask.plane
    if params.window > min(plane.shape):
        raise ParameterError(
            f"window {params.window} exceeds image size {plane.shape}")
    return uniform_filter(plane, size=params.window, mode="nearest")


def find_border(smoothed: np.ndarray, coverage, params: BorderParams | None = None) -> BorderSet:
    """Pixels with tau1 < c < tau2 inside coverage, in row-major order."""
    params = params or BorderParams()
    c = as_plane(smoothed, "smoothed mask")
    cov = as_plane(coverage, "coverage")
    band = (c > params.tau1) & (c < params.tau2) & (cov == 1.0)
    return BorderSet(np.argwhere(band).astype(np.int64))


def local_contrast(luminance, border: BorderSet,
                   params: BorderParams | None = None) -> BorderSet:
    """Per-border-pixel contrast: sum over four directions of the absolute
    difference between forward and backward half-window means.

    Half-windows have length window // 2, exclude the center pixel, and
    clamp coordinates at the image edge (replicate).
    """
    params = params or BorderParams()
    lum = as_plane(luminance, "luminance")
    if len(border) == 0:
        return BorderSet(border.pixels, np.zeros(0), 0.0)
    height, width = lum.shape
    rows = border.pixels[:, 0]
    cols = border.pixels[:, 1]
    half = params.window // 2
    total = np.zeros(len(border))
    for dr, dc in _DIRECTIONS:
        forward = np.zeros(len(border))
        backward = np.zeros(len(border))
        for k in range(1, half + 1):
            forward += lum[np.clip(rows + k * dr, 0, height - 1),
                           np.clip(cols + k * dc, 0, width - 1)]
            backward += lum[np.clip(rows - k * dr, 0, height - 1),
                            np.clip(cols - k * dc, 0, width - 1)]
        total += np.abs(forward - backward) / half
    t_max = float(total.max()) if len(total) else 0.0
    return BorderSet(border.pixels, total, t_max)


def accumulate_weights(smoothed: np.ndarray, coverage, border: BorderSet,
                       params: BorderParams | None = None) -> np.ndarray:
    """Sum Gaussian contributions from each border pixel over its neighborhood,
    zero the result off-coverage, and scale so the maximum is w_cap.

    Contribution of border pixel (u, v) at (x, y) within Chebyshev radius
    r(u,v) = max(1, round(t/t_max * r_max)):

        g = exp(-(c(x,y) - mu_c)^2 / (2 * sigma_t^2)) / (sigma_max * sqrt(2 pi))

    with sigma_t = (t/t_max) * sigma_max and mu_c the mean smoothed-mask
    value over the border set. Zero-contrast border pixels contribute
    nothing (their Gaussian is degenerate), so a flat-contrast image
    yields the documented all-zero map.
    """
    params = params or BorderParams()
    c = as_plane(smoothed, "smoothed mask")
    cov = as_plane(coverage, "coverage")
    weights = np.zeros_like(c)
    if len(border) == 0 or border.contrast is None or border.t_max == 0.0:
        return weights

    height, width = c.shape
    mu_c = float(c[border.pixels[:, 0], border.pixels[:, 1]].mean())
    amplitude = 1.0 / (params.sigma_max * math.sqrt(2.0 * math.pi))
    t_ratio = border.contrast / border.t_max

    # Row-major accumulation order; sequential, so the output is deterministic.
    for (row, col), ratio in zip(border.pixels, t_ratio):
        if ratio == 0.0:
            continue
        sigma_t = ratio * params.sigma_max
        radius = max(1, int(round(ratio * params.r_max)))
        y0, y1 = max(0, row - radius), min(height, row + radius + 1)
        x0, x1 = max(0, col - radius), min(width, col + radius + 1)
        block = c[y0:y1, x0:x1] - mu_c
        weights[y0:y1, x0:x1] += amplitude * np.exp(
            -(block * block) / (2.0 * sigma_t * sigma_t))

    weights *= cov
    peak = weights.max()
    if peak > 0.0:
        weights *= params.w_cap / peak
    return weights


def border_weights(mask: ShadowMask, luminance,
                   params: BorderParams | None = None) -> np.ndarray:
    """Full border-weight map for a shadow mask and its image's luminance.

    ``luminance`` should be the gamma-corrected Y channel of the image
    whose shadows are being analyzed (ignored when params select the
    smoothed mask as the contrast source).
    """
    params = params or BorderParams()
    c = smooth_mask(mask, params)
    border = find_border(c, mask.coverage, params)
    contrast_plane = c if params.contrast_source == "mask" else luminance
    border = local_contrast(contrast_plane, border, params)
    return accumulate_weights(c, mask.coverage, border, params)
