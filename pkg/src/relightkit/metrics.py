"""Losses and evaluation metrics over images, ratio images, and lightings.

All metrics are deterministic, nonnegative, and zero on identical inputs.
Ratio losses live in log10 space so a ratio r and its reciprocal 1/r
carry equal weight. Image metrics default to the luminance plane; an
RGB mode evaluates whole images and is reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import convolve2d

from .errors import DomainError, ParameterError, StructuralError
from .imagecore import ColorImage, as_plane, luminance
from .lighting import ShLighting, lighting_error
from .relight import RatioImage


def _ratio_plane(value, name: str) -> np.ndarray:
    if isinstance(value, RatioImage):
        return value.plane
    arr = as_plane(value, name)
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be strictly positive for log-space losses")
    return arr


def _matched(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise StructuralError(f"{what} shapes disagree: {a.shape} vs {b.shape}")


def l_ratio(pred, truth) -> float:
    """Mean absolute log10 difference between two ratio images."""
    p = _ratio_plane(pred, "pred")
    t = _ratio_plane(truth, "truth")
    _matched(p, t, "ratio")
    return float(np.abs(np.log10(p) - np.log10(t)).mean())


def l_border(pred, truth, weights) -> float:
    """Weighted L1 over log ratios, normalized by the count of nonzero weights.

    An all-zero weight map (empty border) yields 0 so batch evaluation over
    shadow-free images proceeds.
    """
    p = _ratio_plane(pred, "pred")
    t = _ratio_plane(truth, "truth")
    w = as_plane(weights, "weights")
    _matched(p, t, "ratio")
    _matched(p, w, "weight")
    nonzero = int(np.count_nonzero(w))
    if nonzero == 0:
        return 0.0
    return float(np.sum(w * np.abs(np.log10(p) - np.log10(t))) / nonzero)


def l_wratio(pred, truth, source_weights, target_weights) -> float:
    """Sum of the plain ratio loss and both border-weighted losses."""
    return (l_ratio(pred, truth)
            + l_border(pred, truth, source_weights)
            + l_border(pred, truth, target_weights))


def _forward_gradients(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Replicate edge: the last column/row difference is 0.
    gx = np.diff(plane, axis=1, append=plane[:, -1:])
    gy = np.diff(plane, axis=0, append=plane[-1:, :])
    return gx, gy


def l_gradient(pred, truth) -> float:
    """Mean L1 difference of forward-difference gradients (x and y)."""
    p = _ratio_plane(pred, "pred")
    t = _ratio_plane(truth, "truth")
    _matched(p, t, "ratio")
    pgx, pgy = _forward_gradients(p)
    tgx, tgy = _forward_gradients(t)
    return float(np.abs(pgx - tgx).mean() + np.abs(pgy - tgy).mean())


def _image_values(image) -> np.ndarray:
    if isinstance(image, ColorImage):
        return image.channels
    return np.asarray(image, dtype=np.float64)


def mse(a, b) -> float:
    """Mean squared error over all channels and pixels."""
    x = _image_values(a)
    y = _image_values(b)
    _matched(x, y, "image")
    return float(np.mean((x - y) ** 2))


class SiMse(NamedTuple):
    error: float
    scale: float


def si_mse(a, b) -> SiMse:
    """Scale-invariant MSE: error after the least-squares optimal scalar.

    The scale s* = sum(a*b) / sum(a*a) is solved jointly over all channels.
    """
    x = _image_values(a)
    y = _image_values(b)
    _matched(x, y, "image")
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise DomainError("si_mse is degenerate for an identically zero input")
    scale = float(np.sum(x * y)) / denom
    return SiMse(float(np.mean((scale * x - y) ** 2)), scale)


_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    offsets = np.arange(window) - (window - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a, b) -> float:
    """Mean local SSIM, 11x11 Gaussian window sigma=1.5, unit dynamic range.

    Local moments are Gaussian-weighted (no sample-covariance correction)
    and only full windows contribute (valid region). Inputs are expected
    in [0, 1].
    """
    x = as_plane(a, "a")
    y = as_plane(b, "b")
    _matched(x, y, "image")
    if min(x.shape) < _SSIM_WINDOW:
        raise ParameterError(
            f"ssim needs images at least {_SSIM_WINDOW}x{_SSIM_WINDOW}, "
            f"got {x.shape}")
    kernel = _gaussian_kernel(_SSIM_WINDOW, _SSIM_SIGMA)
    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2

    mu_x = convolve2d(x, kernel, mode="valid")
    mu_y = convolve2d(y, kernel, mode="valid")
    var_x = convolve2d(x * x, kernel, mode="valid") - mu_x ** 2
    var_y = convolve2d(y * y, kernel, mode="valid") - mu_y ** 2
    cov = convolve2d(x * y, kernel, mode="valid") - mu_x * mu_y

    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2))
    return float(ssim_map.mean())


def dssim(a, b) -> float:
    """Structural dissimilarity: (1 - SSIM) / 2, in [0, 1] for [0, 1] inputs."""
    return (1.0 - ssim(a, b)) / 2.0


@dataclass(frozen=True)
class MetricReport:
    """Named scalar results; fields stay None when their inputs were absent."""

    pixel_count: int
    mse: float | None = None
    si_mse: float | None = None
    si_scale: float | None = None
    dssim: float | None = None
    l_ratio: float | None = None
    l_sborder: float | None = None
    l_tborder: float | None = None
    l_wratio: float | None = None
    l_gradient: float | None = None
    l_lighting: float | None = None
    weighted_count_source: int | None = None
    weighted_count_target: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def evaluate(relit: ColorImage, target: ColorImage, *,
             pred_ratio: RatioImage | None = None,
             true_ratio: RatioImage | None = None,
             source_weights=None, target_weights=None,
             pred_lighting: ShLighting | None = None,
             true_lighting: ShLighting | None = None,
             mode: str = "luminance") -> MetricReport:
    """Fill every metric whose inputs were provided.

    ``mode`` selects the plane the image metrics run on: "luminance"
    (default) or "rgb" (per-channel DSSIM averaged).
    """
    if mode not in ("luminance", "rgb"):
        raise ParameterError(f"mode must be 'luminance' or 'rgb', got {mode!r}")
    if (relit.height, relit.width) != (target.height, target.width):
        raise StructuralError("relit and target sizes disagree")

    if mode == "luminance":
        a_vals = luminance(relit)
        b_vals = luminance(target)
        dssim_value = dssim(a_vals, b_vals)
    else:
        a_vals = relit.channels
        b_vals = target.channels
        dssim_value = float(np.mean([
            dssim(relit.channel(i), target.channel(i)) for i in range(3)]))

    error, scale = si_mse(a_vals, b_vals)
    report = {
        "pixel_count": relit.width * relit.height,
        "mse": mse(a_vals, b_vals),
        "si_mse": error,
        "si_scale": scale,
        "dssim": dssim_value,
    }

    if pred_ratio is not None and true_ratio is not None:
        report["l_ratio"] = l_ratio(pred_ratio, true_ratio)
        report["l_gradient"] = l_gradient(pred_ratio, true_ratio)
        if source_weights is not None:
            report["l_sborder"] = l_border(pred_ratio, true_ratio, source_weights)
            report["weighted_count_source"] = int(np.count_nonzero(source_weights))
        if target_weights is not None:
            report["l_tborder"] = l_border(pred_ratio, true_ratio, target_weights)
            report["weighted_count_target"] = int(np.count_nonzero(target_weights))
        if source_weights is not None and target_weights is not None:
            report["l_wratio"] = (report["l_ratio"] + report["l_sborder"]
                                  + report["l_tborder"])
    if pred_lighting is not None and true_lighting is not None:
        report["l_lighting"] = lighting_error(pred_lighting, true_lighting)
    return MetricReport(**report)
