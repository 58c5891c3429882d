"""Raster containers, RGB/YUV conversion, gamma correction, luminance.

Single-channel rasters ("planes") are plain 2-D float64 numpy arrays,
row-major, nominally in [0,1] for luminance and masks and unrestricted
for ratios and weights. Color images carry an explicit color-space tag.

The YUV matrix is full-range BT.601: Y = 0.299R + 0.587G + 0.114B,
U = 0.5(B-Y)/0.886, V = 0.5(R-Y)/0.701, so U and V span [-0.5, 0.5]
and the transform is exactly invertible. This constant set is part of
the external contract. All arithmetic is float64; 8-bit quantization
happens only at file I/O boundaries, and out-of-range values are
clamped only at the final RGB encode step.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, StructuralError

#: Default exponent for gamma correction of luminance.
DEFAULT_GAMMA = 1.0 / 2.2

# Full-range BT.601 luma weights.
KR = 0.299
KG = 0.587
KB = 0.114


class ColorSpace(Enum):
    RGB = "rgb"
    YUV = "yuv"


def as_plane(data, name: str = "plane") -> np.ndarray:
    """Coerce to a validated 2-D float64 plane."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise StructuralError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise StructuralError(f"{name} must be at least 1x1, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ColorImage:
    """Three-channel raster with a color-space tag.

    ``channels`` is (height, width, 3) float64. Instances are treated as
    immutable after construction; conversions return new tagged images.
    """

    space: ColorSpace
    channels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.channels, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise StructuralError(
                f"color image must be (H, W, 3), got shape {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise StructuralError(f"color image must be at least 1x1, got {arr.shape}")
        object.__setattr__(self, "channels", arr)

    @property
    def width(self) -> int:
        return self.channels.shape[1]

    @property
    def height(self) -> int:
        return self.channels.shape[0]

    def channel(self, index: int) -> np.ndarray:
        return self.channels[:, :, index]

    @classmethod
    def from_planes(cls, space: ColorSpace, c0, c1, c2) -> "ColorImage":
        p0, p1, p2 = (as_plane(c, f"channel {i}") for i, c in enumerate((c0, c1, c2)))
        if not (p0.shape == p1.shape == p2.shape):
            raise StructuralError(
                f"channel dimensions disagree: {p0.shape}, {p1.shape}, {p2.shape}"
            )
        return cls(space, np.stack([p0, p1, p2], axis=-1))


def _require_space(img: ColorImage, space: ColorSpace, op: str) -> None:
    if img.space is not space:
        raise StructuralError(f"{op} expects a {space.value} image, got {img.space.value}")


def rgb_to_yuv(img: ColorImage) -> ColorImage:
    """Convert full-range BT.601 RGB to YUV.

    The chroma channels are computed from channel differences so any
    gray pixel (g, g, g) maps to U = V = 0 exactly.
    """
    _require_space(img, ColorSpace.RGB, "rgb_to_yuv")
    r, g, b = img.channel(0), img.channel(1), img.channel(2)
    y = KR * r + KG * g + KB * b
    # B - Y == KR(B-R) + KG(B-G) and R - Y == KG(R-G) + KB(R-B), exact on grays.
    u = 0.5 * (KR * (b - r) + KG * (b - g)) / (1.0 - KB)
    v = 0.5 * (KG * (r - g) + KB * (r - b)) / (1.0 - KR)
    return ColorImage.from_planes(ColorSpace.YUV, y, u, v)


def yuv_to_rgb(img: ColorImage) -> ColorImage:
    """Invert :func:`rgb_to_yuv`; output clamped to [0, 1].

    This is the pipeline's final encode step, the only place clamping
    is allowed.
    """
    _require_space(img, ColorSpace.YUV, "yuv_to_rgb")
    y, u, v = img.channel(0), img.channel(1), img.channel(2)
    r = y + 2.0 * (1.0 - KR) * v
    b = y + 2.0 * (1.0 - KB) * u
    g = (y - KR * r - KB * b) / KG
    rgb = np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)
    return ColorImage(ColorSpace.RGB, rgb)


def _check_nonnegative(plane: np.ndarray, op: str) -> None:
    if np.any(plane < 0.0):
        i, j = np.argwhere(plane < 0.0)[0]
        raise DomainError(
            f"{op} requires nonnegative samples; "
            f"pixel (x={j}, y={i}) is {plane[i, j]!r}"
        )


def gamma_encode(plane, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Apply v -> v**gamma per sample (default gamma 1/2.2)."""
    arr = as_plane(plane)
    _check_nonnegative(arr, "gamma_encode")
    return np.power(arr, gamma)


def gamma_decode(plane, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Apply v -> v**(1/gamma) per sample, the inverse of :func:`gamma_encode`."""
    arr = as_plane(plane)
    _check_nonnegative(arr, "gamma_decode")
    return np.power(arr, 1.0 / gamma)


def luminance(img: ColorImage) -> np.ndarray:
    """Y channel of an image in either space (computed on the fly for RGB)."""
    if img.space is ColorSpace.YUV:
        return img.channel(0).copy()
    r, g, b = img.channel(0), img.channel(1), img.channel(2)
    return KR * r + KG * g + KB * b
