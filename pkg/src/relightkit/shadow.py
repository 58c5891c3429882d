"""Binary shadow masks: cast shadows via feeler rays, self shadows via n.l.

A mask sample is exactly 0.0 (shadowed) or 1.0 (illuminated). Background
pixels are stored as 0 and excluded from downstream statistics through
the coverage plane. Grazing incidence (n.l == 0) counts as lit: cosine
shading is zero there anyway and the strict inequality keeps the test
stable under normal noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateGeometryError, DomainError, StructuralError
from .mesh import GBuffer, TriMesh

#: Feeler origins step this fraction of the bounding-box diagonal along the
#: light direction to avoid self-intersection acne.
FEELER_EPS_FRACTION = 1e-3


@dataclass(frozen=True)
class DirectionalLight:
    """Light at infinity; ``direction`` points from the surface toward it."""

    direction: np.ndarray
    intensity: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise DomainError("directional light direction must be nonzero")
        if self.intensity < 0:
            raise DomainError(f"light intensity must be >= 0, got {self.intensity}")
        object.__setattr__(self, "direction", d / norm)
        object.__setattr__(self, "intensity", float(self.intensity))


@dataclass(frozen=True)
class PointLight:
    position: np.ndarray
    intensity: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        if self.intensity < 0:
            raise DomainError(f"light intensity must be >= 0, got {self.intensity}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "intensity", float(self.intensity))


Light = DirectionalLight | PointLight


def light_from_json(obj: dict) -> Light:
    """Parse {"type": "directional", "direction": [...]} or point equivalent."""
    kind = obj.get("type")
    intensity = float(obj.get("intensity", 1.0))
    if kind == "directional":
        return DirectionalLight(np.asarray(obj["direction"], dtype=np.float64), intensity)
    if kind == "point":
        return PointLight(np.asarray(obj["position"], dtype=np.float64), intensity)
    raise StructuralError(f"unknown light type {kind!r}")


def light_to_json(light: Light) -> dict:
    if isinstance(light, DirectionalLight):
        return {"type": "directional",
                "direction": [float(x) for x in light.direction],
                "intensity": light.intensity}
    return {"type": "point",
            "position": [float(x) for x in light.position],
            "intensity": light.intensity}


def load_light(path) -> Light:
    with open(path, "r", encoding="utf-8") as f:
        return light_from_json(json.load(f))


@dataclass(frozen=True)
class ShadowMask:
    """Binary shadow map plus the coverage plane that scopes it to the face."""

    plane: np.ndarray
    coverage: np.ndarray

    def __post_init__(self):
        plane = np.asarray(self.plane, dtype=np.float64)
        coverage = np.asarray(self.coverage, dtype=np.float64)
        if plane.shape != coverage.shape:
            raise StructuralError(
                f"mask shape {plane.shape} != coverage shape {coverage.shape}")
        for name, arr in (("mask", plane), ("coverage", coverage)):
            if not np.all((arr == 0.0) | (arr == 1.0)):
                raise DomainError(f"{name} samples must be exactly 0.0 or 1.0")
        if np.any((plane == 1.0) & (coverage == 0.0)):
            raise DomainError("illuminated pixels must lie inside coverage")
        object.__setattr__(self, "plane", plane)
        object.__setattr__(self, "coverage", coverage)


def light_direction(light: Light, surface_point) -> np.ndarray:
    """Unit vector from the surface point toward the light."""
    if isinstance(light, DirectionalLight):
        return light.direction
    delta = light.position - np.asarray(surface_point, dtype=np.float64)
    dist = np.linalg.norm(delta)
    if dist == 0.0:
        raise DegenerateGeometryError("point light coincides with surface point")
    return delta / dist


def self_shadow_test(normal, light: Light, surface_point) -> bool:
    """True when the light comes from behind the surface (obtuse angle)."""
    n = np.asarray(normal, dtype=np.float64)
    return float(np.dot(n, light_direction(light, surface_point))) < 0.0


def feeler_epsilon(mesh: TriMesh, eps: float | None = None) -> float:
    return FEELER_EPS_FRACTION * mesh.bbox_diagonal if eps is None else float(eps)


def cast_shadow_test(surface_point, light: Light, mesh: TriMesh,
                     eps: float | None = None) -> bool:
    """True when geometry blocks the feeler ray from the point to the light.

    The feeler starts eps along the light direction to dodge acne; for
    point lights only hits closer than the light count.
    """
    p = np.asarray(surface_point, dtype=np.float64)
    d = light_direction(light, p)
    e = feeler_epsilon(mesh, eps)
    origin = p + e * d
    if isinstance(light, PointLight):
        t_max = float(np.linalg.norm(light.position - p)) - e
        if t_max <= 0.0:
            return False
    else:
        t_max = np.inf
    return bool(_kernels.ray_any(origin[0], origin[1], origin[2],
                                 d[0], d[1], d[2], 0.0, t_max,
                                 *mesh.bvh.traversal_args()))


def shadow_mask(gbuffer: GBuffer, mesh: TriMesh, light: Light,
                eps: float | None = None) -> ShadowMask:
    """Per-pixel shadow mask: 0 where self- or cast-shadowed, 1 where lit."""
    if gbuffer.hit_mask.shape != gbuffer.depth.shape:
        raise StructuralError("gbuffer planes disagree in shape")
    e = feeler_epsilon(mesh, eps)
    args = mesh.bvh.traversal_args()
    if isinstance(light, DirectionalLight):
        d = light.direction
        plane = _kernels.shadow_mask_directional(
            gbuffer.hit_mask, gbuffer.normals, gbuffer.position,
            d[0], d[1], d[2], e, *args)
    else:
        p = light.position
        plane, degenerate = _kernels.shadow_mask_point(
            gbuffer.hit_mask, gbuffer.normals, gbuffer.position,
            p[0], p[1], p[2], e, *args)
        if degenerate:
            raise DegenerateGeometryError(
                "point light coincides with a rasterized surface point")
    return ShadowMask(plane, gbuffer.hit_mask.copy())
