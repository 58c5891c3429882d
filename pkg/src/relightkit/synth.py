"""Synthetic scene fixtures: spheres, a box over a plane, and step images.

These deterministic generators back the CLI's fixture bundles and every
ray-casting oracle. Spheres carry exact radial normals and outward
winding; poles can be aligned with an axis so the terminator of an
axis-aligned light coincides with a vertex ring.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .mesh import TriMesh
from .shadow import DirectionalLight, Light, ShadowMask


def _orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    helper = np.array([0.0, 0.0, 1.0]) if abs(a[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2, a


def make_uv_sphere(center, radius: float, slices: int = 32, bands: int = 16,
                   axis=(0.0, 0.0, 1.0)) -> TriMesh:
    """UV sphere with poles along ``axis`` and exact radial vertex normals.

    Triangle count is 2 * slices * (bands - 1). With an even band count
    the equator (90 degrees from the pole axis) is a vertex ring.
    """
    if slices < 3 or bands < 2:
        raise ParameterError(f"need slices >= 3 and bands >= 2, got {slices}, {bands}")
    c = np.asarray(center, dtype=np.float64)
    e1, e2, a = _orthonormal_frame(axis)

    vertices = [c + radius * a]  # top pole
    for k in range(1, bands):
        theta = k * np.pi / bands
        for j in range(slices):
            phi = 2.0 * np.pi * j / slices
            direction = (np.sin(theta) * (np.cos(phi) * e1 + np.sin(phi) * e2)
                         + np.cos(theta) * a)
            vertices.append(c + radius * direction)
    vertices.append(c - radius * a)  # bottom pole
    verts = np.asarray(vertices)

    def ring(k: int, j: int) -> int:
        return 1 + (k - 1) * slices + (j % slices)

    top = 0
    bottom = len(verts) - 1
    triangles = []
    for j in range(slices):
        triangles.append((top, ring(1, j), ring(1, j + 1)))
    for k in range(1, bands - 1):
        for j in range(slices):
            a_idx, b_idx = ring(k, j), ring(k, j + 1)
            c_idx, d_idx = ring(k + 1, j), ring(k + 1, j + 1)
            triangles.append((a_idx, c_idx, d_idx))
            triangles.append((a_idx, d_idx, b_idx))
    for j in range(slices):
        triangles.append((bottom, ring(bands - 1, j + 1), ring(bands - 1, j)))

    normals = (verts - c) / radius
    return TriMesh(verts, normals, np.asarray(triangles, dtype=np.int64))


def make_plane_with_square(width: int, height: int, square: tuple[float, float, float, float],
                           square_z: float) -> TriMesh:
    """Ground plane at z=0 covering the frame plus a floating square occluder.

    ``square`` is (x0, y0, x1, y1) in pixel coordinates; all normals are +z.
    """
    x0, y0, x1, y1 = square
    verts = np.array([
        # ground plane corners
        [0.0, 0.0, 0.0], [width, 0.0, 0.0], [width, height, 0.0], [0.0, height, 0.0],
        # floating square corners
        [x0, y0, square_z], [x1, y0, square_z], [x1, y1, square_z], [x0, y1, square_z],
    ])
    triangles = np.array([
        [0, 1, 2], [0, 2, 3],
        [4, 5, 6], [4, 6, 7],
    ], dtype=np.int64)
    normals = np.tile(np.array([0.0, 0.0, 1.0]), (len(verts), 1))
    return TriMesh(verts, normals, triangles)


def box_on_plane_gt_mask(width: int, height: int,
                         square: tuple[float, float, float, float],
                         square_z: float, light: Light) -> ShadowMask:
    """Analytic shadow mask for the plane-plus-square scene.

    A plane pixel is cast-shadowed exactly when its center, shifted by
    square_z * (lx, ly) / lz, lands inside the square; pixels covered by
    the square itself are lit. Derived from pure projection arithmetic,
    no ray casting.
    """
    if not isinstance(light, DirectionalLight):
        raise ParameterError("analytic ground truth is defined for directional lights")
    lx, ly, lz = light.direction
    if lz <= 0:
        raise ParameterError("light must come from above the plane (lz > 0)")
    x0, y0, x1, y1 = square
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    px, py = np.meshgrid(xs, ys)

    on_square = (px >= x0) & (px <= x1) & (py >= y0) & (py <= y1)
    sx = px + square_z * lx / lz
    sy = py + square_z * ly / lz
    shadowed = (sx >= x0) & (sx <= x1) & (sy >= y0) & (sy <= y1) & ~on_square

    mask = np.where(shadowed, 0.0, 1.0)
    coverage = np.ones((height, width))
    return ShadowMask(mask, coverage)


def make_two_step(width: int = 192, height: int = 128, *, lit_level: float = 0.8,
                  step: float = 0.15, borders: tuple[int, int] = (64, 128),
                  noise: float = 0.0, seed: int = 0) -> tuple[np.ndarray, ShadowMask]:
    """Luminance image with two vertical step edges of heights h and 2h.

    Columns [0, b0) sit at lit_level - h (soft shadow), [b0, b1) at
    lit_level (lit), [b1, width) at lit_level - 2h (hard shadow). The
    matching shadow mask is 0 / 1 / 0 with full coverage. Optional
    uniform noise (seeded) roughens the luminance.
    """
    b0, b1 = borders
    if not 0 < b0 < b1 < width:
        raise ParameterError(f"borders must satisfy 0 < b0 < b1 < width, got {borders}")
    if not (0.0 < step and lit_level - 2 * step >= 0.0 and lit_level <= 1.0):
        raise ParameterError("levels must stay inside [0, 1]")
    luminance = np.empty((height, width))
    luminance[:, :b0] = lit_level - step
    luminance[:, b0:b1] = lit_level
    luminance[:, b1:] = lit_level - 2.0 * step
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        luminance = np.clip(luminance + rng.uniform(-noise, noise, luminance.shape),
                            0.0, 1.0)
    mask = np.zeros((height, width))
    mask[:, b0:b1] = 1.0
    return luminance, ShadowMask(mask, np.ones((height, width)))


def make_two_spheres(width: int = 128, height: int = 128, *, slices: int = 16,
                     bands: int = 8) -> TriMesh:
    """Two spheres side by side along x; a +x light makes one shadow the other."""
    cy = height * 0.5 + 0.25
    r = 0.2 * min(width, height)
    left = make_uv_sphere((width * 0.32 + 0.25, cy, 0.0), r, slices, bands, axis=(1, 0, 0))
    right = make_uv_sphere((width * 0.68 + 0.25, cy, 0.0), r, slices, bands, axis=(1, 0, 0))
    offset = len(left.vertices)
    return TriMesh(
        np.vstack([left.vertices, right.vertices]),
        np.vstack([left.normals, right.normals]),
        np.vstack([left.triangles, right.triangles + offset]),
    )


def make_centered_sphere(width: int, height: int, *, radius_frac: float = 0.375,
                         slices: int = 32, bands: int = 16,
                         axis=(1.0, 0.0, 0.0)) -> TriMesh:
    """Sphere centered in the frame, center offset 0.25 px off the pixel grid
    so no pixel center lands exactly on an axis-aligned vertex ring."""
    center = (width * 0.5 + 0.25, height * 0.5 + 0.25, 0.0)
    return make_uv_sphere(center, radius_frac * min(width, height),
                          slices, bands, axis)


def save_obj(path, mesh: TriMesh) -> None:
    """Write vertices, normals, and v//vn faces with full float precision."""
    with open(path, "w", encoding="ascii") as f:
        for v in mesh.vertices:
            f.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for n in mesh.normals:
            f.write(f"vn {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n")
        for t in mesh.triangles:
            f.write(f"f {t[0] + 1}//{t[0] + 1} {t[1] + 1}//{t[1] + 1} "
                    f"{t[2] + 1}//{t[2] + 1}\n")
