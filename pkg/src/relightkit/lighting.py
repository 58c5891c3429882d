"""Order-2 spherical-harmonics lighting and Lambertian shading.

Nine real SH coefficients ordered (0,0), (1,-1), (1,0), (1,1), (2,-2),
(2,-1), (2,0), (2,1), (2,2). Ambient light is tracked as a separate
audit field: injecting adds it to the 0th coefficient once, and shading
removes it from the SH sum and re-adds it as a flat term, so shadowed
pixels receive exactly the ambient intensity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractError,
    DegenerateGeometryError,
    DomainError,
    NoShadowPixelsError,
    ParameterError,
    StructuralError,
)
from .imagecore import as_plane
from .mesh import GBuffer, TriMesh
from .shadow import DirectionalLight, Light, ShadowMask, light_from_json

# Real SH basis constants (Ramamoorthi convention).
_C0 = 0.5 * math.sqrt(1.0 / math.pi)          # 0.282095
_C1 = math.sqrt(3.0 / (4.0 * math.pi))        # 0.488603
_C2 = 0.5 * math.sqrt(15.0 / math.pi)         # 1.092548
_C20 = 0.25 * math.sqrt(5.0 / math.pi)        # 0.315392
_C22 = 0.25 * math.sqrt(15.0 / math.pi)       # 0.546274

# Lambertian band attenuation for irradiance from radiance coefficients.
_A_BAND = (math.pi, 2.0 * math.pi / 3.0, math.pi / 4.0)


@dataclass(frozen=True)
class ShLighting:
    """Nine SH coefficients plus the ambient component already folded in."""

    coeffs: np.ndarray
    ambient: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if c.shape != (9,):
            raise StructuralError(f"lighting needs exactly 9 coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("lighting coefficients must be finite")
        if self.ambient < 0:
            raise DomainError(f"ambient must be >= 0, got {self.ambient}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "ambient", float(self.ambient))

    @classmethod
    def zero(cls) -> "ShLighting":
        return cls(np.zeros(9))

    def to_json(self) -> dict:
        return {"sh": [float(x) for x in self.coeffs], "ambient": self.ambient}


def sh_basis(direction) -> np.ndarray:
    """Evaluate the 9 real SH basis functions at a unit direction."""
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-4:
        raise DomainError(f"sh_basis needs a unit direction, |d| = {norm}")
    x, y, z = d
    return np.array([
        _C0,
        _C1 * y,
        _C1 * z,
        _C1 * x,
        _C2 * x * y,
        _C2 * y * z,
        _C20 * (3.0 * z * z - 1.0),
        _C2 * x * z,
        _C22 * (x * x - y * y),
    ])


def project_light(light: Light, reference_point=None) -> ShLighting:
    """Project a light to SH as a delta light: coeffs = intensity * Y(dir).

    Point lights use the direction from ``reference_point`` (normally the
    mesh centroid) as the single representative direction.
    """
    if isinstance(light, DirectionalLight):
        direction = light.direction
    else:
        if reference_point is None:
            raise ParameterError("point-light projection needs a reference point")
        delta = light.position - np.asarray(reference_point, dtype=np.float64)
        dist = np.linalg.norm(delta)
        if dist == 0.0:
            raise DegenerateGeometryError("point light sits at the reference point")
        direction = delta / dist
    return ShLighting(light.intensity * sh_basis(direction))


def project_light_for_mesh(light: Light, mesh: TriMesh) -> ShLighting:
    return project_light(light, mesh.centroid)


def estimate_ambient(luminance, mask: ShadowMask) -> float:
    """Mean luminance over shadow pixels (coverage == 1 and mask == 0)."""
    lum = as_plane(luminance, "luminance")
    if lum.shape != mask.plane.shape:
        raise StructuralError(
            f"luminance shape {lum.shape} != mask shape {mask.plane.shape}")
    selected = (mask.coverage == 1.0) & (mask.plane == 0.0)
    if not np.any(selected):
        raise NoShadowPixelsError("no shadow pixels to estimate ambient light from")
    return float(lum[selected].mean())


def inject_ambient(lighting: ShLighting, ambient: float) -> ShLighting:
    """Add ambient intensity to the 0th coefficient, once.

    The ambient field is the audit trail; re-injecting is a contract error.
    """
    if ambient < 0:
        raise DomainError(f"ambient must be >= 0, got {ambient}")
    if lighting.ambient != 0.0:
        raise ContractError("lighting already carries an injected ambient component")
    coeffs = lighting.coeffs.copy()
    coeffs[0] += ambient
    return ShLighting(coeffs, ambient)


def sh_basis_array(normals: np.ndarray) -> np.ndarray:
    """Basis values for an (..., 3) array of directions; shape (..., 9)."""
    x = normals[..., 0]
    y = normals[..., 1]
    z = normals[..., 2]
    return np.stack([
        np.full_like(x, _C0),
        _C1 * y,
        _C1 * z,
        _C1 * x,
        _C2 * x * y,
        _C2 * y * z,
        _C20 * (3.0 * z * z - 1.0),
        _C2 * x * z,
        _C22 * (x * x - y * y),
    ], axis=-1)


def sh_irradiance(normals: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Unclamped Lambertian irradiance E(n) = sum_lm A_l c_lm Y_lm(n)."""
    c = np.asarray(coeffs, dtype=np.float64).reshape(9)
    band = np.array([_A_BAND[0]] + [_A_BAND[1]] * 3 + [_A_BAND[2]] * 5)
    return sh_basis_array(np.asarray(normals, dtype=np.float64)) @ (band * c)


def shade(gbuffer: GBuffer, lighting: ShLighting,
          mask: ShadowMask | None = None) -> np.ndarray:
    """Shade G-buffer normals under SH lighting.

    SH ringing is clamped at zero before the ambient term is added, so
    every covered pixel is at least ambient. With a mask, shadowed pixels
    lose the directional bands and keep only the ambient floor;
    background pixels are 0.
    """
    directional = lighting.coeffs.copy()
    directional[0] -= lighting.ambient
    radiance = np.clip(sh_irradiance(gbuffer.normals, directional), 0.0, None)
    if mask is not None:
        if mask.plane.shape != gbuffer.hit_mask.shape:
            raise StructuralError("mask and gbuffer dimensions disagree")
        radiance = radiance * mask.plane
    return (radiance + lighting.ambient) * gbuffer.hit_mask


def lighting_error(pred: ShLighting, truth: ShLighting) -> float:
    """Squared L2 distance between coefficient vectors."""
    diff = pred.coeffs - truth.coeffs
    return float(np.dot(diff, diff))


def lighting_from_json(obj: dict, reference_point=None) -> ShLighting:
    """Accept {"sh": [9], "ambient": a} or a light spec to auto-project."""
    if "sh" in obj:
        return ShLighting(np.asarray(obj["sh"], dtype=np.float64),
                          float(obj.get("ambient", 0.0)))
    return project_light(light_from_json(obj), reference_point)


def load_lighting(path, reference_point=None) -> ShLighting:
    with open(path, "r", encoding="utf-8") as f:
        return lighting_from_json(json.load(f), reference_point)
