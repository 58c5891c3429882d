"""Ratio-image relighting.

A ratio image is the per-pixel quotient of target over source luminance,
formed and applied in gamma-corrected space. Multiplying it onto the
source's gamma-corrected Y channel relights the image while preserving
local detail; chrominance is taken untouched from the source decode and
reattached after the new Y is decoded back to display space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .borderweights import BorderParams, border_weights
from .errors import DomainError, NoShadowPixelsError, StructuralError
from .imagecore import (
    ColorImage,
    ColorSpace,
    as_plane,
    gamma_decode,
    gamma_encode,
    luminance,
    rgb_to_yuv,
    yuv_to_rgb,
)
from .lighting import (
    ShLighting,
    estimate_ambient,
    inject_ambient,
    project_light,
    shade,
)
from .mesh import GBuffer, TriMesh
from .shadow import Light, ShadowMask, shadow_mask

#: Division/log floor for ratio images; below any visually meaningful
#: luminance at 8-bit scale.
DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class RatioImage:
    """Strictly positive per-pixel luminance quotient."""

    plane: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        plane = as_plane(self.plane, "ratio")
        if self.epsilon <= 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not np.all(np.isfinite(plane)):
            raise DomainError("ratio image must be finite")
        if np.any(plane < self.epsilon):
            raise DomainError(
                f"ratio samples must be >= epsilon ({self.epsilon}); "
                f"min is {plane.min()}")
        object.__setattr__(self, "plane", plane)
        object.__setattr__(self, "epsilon", float(self.epsilon))


def reciprocal(ratio: RatioImage) -> RatioImage:
    """Pointwise 1/R, re-floored at the construction epsilon."""
    return RatioImage(np.maximum(1.0 / ratio.plane, ratio.epsilon), ratio.epsilon)


def ratio_from_shadings(source_shading, target_shading,
                        epsilon: float = DEFAULT_EPSILON) -> RatioImage:
    """R = max(gamma(target), eps) / max(gamma(source), eps).

    Both shadings are gamma-encoded first; the floor guards the division.
    """
    src = as_plane(source_shading, "source shading")
    tgt = as_plane(target_shading, "target shading")
    if src.shape != tgt.shape:
        raise StructuralError(f"shading shapes disagree: {src.shape} vs {tgt.shape}")
    if np.any(src < 0) or np.any(tgt < 0):
        raise DomainError("shadings must be nonnegative")
    num = np.maximum(gamma_encode(tgt), epsilon)
    den = np.maximum(gamma_encode(src), epsilon)
    return RatioImage(num / den, epsilon)


def apply_ratio(source: ColorImage, ratio: RatioImage) -> ColorImage:
    """Scale the source's gamma-corrected Y by R; keep U and V; back to RGB."""
    if source.space is not ColorSpace.RGB:
        raise StructuralError("apply_ratio expects an RGB source image")
    if ratio.plane.shape != (source.height, source.width):
        raise StructuralError(
            f"ratio shape {ratio.plane.shape} != image "
            f"{(source.height, source.width)}")
    yuv = rgb_to_yuv(source)
    y = yuv.channel(0)
    y_new = gamma_decode(gamma_encode(y) * ratio.plane)
    relit = ColorImage.from_planes(ColorSpace.YUV, y_new, yuv.channel(1), yuv.channel(2))
    return yuv_to_rgb(relit)


@dataclass(frozen=True)
class RelightResult:
    """Relit image plus every intermediate the training pipeline consumes."""

    relit: ColorImage
    ratio: RatioImage
    source_mask: ShadowMask
    target_mask: ShadowMask
    source_weights: np.ndarray
    target_weights: np.ndarray
    source_lighting: ShLighting
    target_lighting: ShLighting


#: A relightable light: the geometric spec, optionally paired with a
#: prebuilt ShLighting that overrides projection + ambient injection.
LightInput = Light | tuple[Light, ShLighting]


def _split_light(spec: LightInput) -> tuple[Light, ShLighting | None]:
    if isinstance(spec, tuple):
        light, lighting = spec
        return light, lighting
    return spec, None


def relight(source: ColorImage, gbuffer: GBuffer, mesh: TriMesh,
            source_light: LightInput, target_light: LightInput,
            *, params: BorderParams | None = None,
            epsilon: float = DEFAULT_EPSILON,
            ambient_default: float | None = None,
            target_ambient: float | None = None,
            feeler_eps: float | None = None) -> RelightResult:
    """Classical relighting: masks, ambient estimate, SH shadings, ratio, apply.

    The source ambient is estimated from the photo's shadow pixels (an
    explicit error if there are none and no ``ambient_default`` is given).
    The target ambient defaults to the source's so the exposure floor is
    consistent across the pair. Border weights for the target come from
    the relit image's luminance, the pipeline's realization of the target.
    """
    if (source.height, source.width) != gbuffer.hit_mask.shape:
        raise StructuralError("source image and gbuffer sizes disagree")
    light_s, prebuilt_s = _split_light(source_light)
    light_t, prebuilt_t = _split_light(target_light)
    mask_s = shadow_mask(gbuffer, mesh, light_s, feeler_eps)
    mask_t = shadow_mask(gbuffer, mesh, light_t, feeler_eps)

    y_source = luminance(source)
    ambient_s = None
    if prebuilt_s is None or (prebuilt_t is None and target_ambient is None):
        try:
            ambient_s = estimate_ambient(y_source, mask_s)
        except NoShadowPixelsError:
            if ambient_default is None:
                raise
            ambient_s = ambient_default

    lighting_s = prebuilt_s if prebuilt_s is not None else \
        inject_ambient(project_light(light_s, mesh.centroid), ambient_s)
    lighting_t = prebuilt_t if prebuilt_t is not None else \
        inject_ambient(project_light(light_t, mesh.centroid),
                       ambient_s if target_ambient is None else target_ambient)

    shading_s = shade(gbuffer, lighting_s, mask_s)
    shading_t = shade(gbuffer, lighting_t, mask_t)
    ratio = ratio_from_shadings(shading_s, shading_t, epsilon)
    relit_image = apply_ratio(source, ratio)

    weights_s = border_weights(mask_s, gamma_encode(y_source), params)
    weights_t = border_weights(mask_t, gamma_encode(luminance(relit_image)), params)

    return RelightResult(
        relit=relit_image,
        ratio=ratio,
        source_mask=mask_s,
        target_mask=mask_t,
        source_weights=weights_s,
        target_weights=weights_t,
        source_lighting=lighting_s,
        target_lighting=lighting_t,
    )
