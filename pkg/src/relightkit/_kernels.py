"""Numba kernels: watertight ray-triangle tests, BVH traversal, rasterization.

All kernels are sequential and operate on flat float64/int64 arrays, so
results are bitwise deterministic across runs and thread counts. Triangle
vertices are pre-gathered in BVH leaf order; ``orig_id`` maps a slot back
to the original triangle index, and equal-t ties are broken by the lower
original id.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_STACK_SIZE = 128


@njit(cache=True)
def _intersect_slot(ox, oy, oz, dx, dy, dz, kx, ky, kz, sx, sy, sz,
                    va, vb, vc, slot, t_min, t_max):
    """Watertight ray-triangle test against one vertex slot.

    Returns (hit, t, u, v, w) with barycentrics ordered (a, b, c).
    The shear constants (kx, ky, kz, sx, sy, sz) are precomputed per ray.
    """
    o = (ox, oy, oz)
    ax = va[slot, kx] - o[kx]
    ay = va[slot, ky] - o[ky]
    az = va[slot, kz] - o[kz]
    bx = vb[slot, kx] - o[kx]
    by = vb[slot, ky] - o[ky]
    bz = vb[slot, kz] - o[kz]
    cx = vc[slot, kx] - o[kx]
    cy = vc[slot, ky] - o[ky]
    cz = vc[slot, kz] - o[kz]

    axs = ax - sx * az
    ays = ay - sy * az
    bxs = bx - sx * bz
    bys = by - sy * bz
    cxs = cx - sx * cz
    cys = cy - sy * cz

    u = cxs * bys - cys * bxs
    v = axs * cys - ays * cxs
    w = bxs * ays - bys * axs

    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return False, 0.0, 0.0, 0.0, 0.0
    det = u + v + w
    if det == 0.0:
        return False, 0.0, 0.0, 0.0, 0.0

    t_scaled = u * (sz * az) + v * (sz * bz) + w * (sz * cz)
    t = t_scaled / det
    if not (t_min < t < t_max):
        return False, 0.0, 0.0, 0.0, 0.0
    inv = 1.0 / det
    return True, t, u * inv, v * inv, w * inv


@njit(cache=True)
def _aabb_hit(ox, oy, oz, dx, dy, dz, bmin, bmax, node, t_min, t_max):
    """Slab test; division-free on zero-direction axes."""
    lo = t_min
    hi = t_max
    for axis in range(3):
        if axis == 0:
            o, d = ox, dx
        elif axis == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        mn = bmin[node, axis]
        mx = bmax[node, axis]
        if d == 0.0:
            if o < mn or o > mx:
                return False
        else:
            inv = 1.0 / d
            t0 = (mn - o) * inv
            t1 = (mx - o) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > lo:
                lo = t0
            if t1 < hi:
                hi = t1
            if lo > hi:
                return False
    return True


@njit(cache=True)
def _shear_constants(dx, dy, dz):
    adx = abs(dx)
    ady = abs(dy)
    adz = abs(dz)
    if adx >= ady and adx >= adz:
        kz = 0
    elif ady >= adz:
        kz = 1
    else:
        kz = 2
    kx = kz + 1
    if kx == 3:
        kx = 0
    ky = kx + 1
    if ky == 3:
        ky = 0
    d = (dx, dy, dz)
    if d[kz] < 0.0:
        kx, ky = ky, kx
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz
    return kx, ky, kz, sx, sy, sz


@njit(cache=True)
def ray_nearest(ox, oy, oz, dx, dy, dz, t_min, t_max,
                bmin, bmax, left, right, start, count,
                va, vb, vc, orig_id):
    """Nearest hit through the BVH.

    Returns (t, orig_triangle_id, u, v, w, slot); orig id is -1 on miss.
    """
    kx, ky, kz, sx, sy, sz = _shear_constants(dx, dy, dz)
    best_t = t_max
    best_id = np.int64(-1)
    best_slot = np.int64(-1)
    bu = 0.0
    bv = 0.0
    bw = 0.0
    stack = np.empty(_STACK_SIZE, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _aabb_hit(ox, oy, oz, dx, dy, dz, bmin, bmax, node, t_min, best_t):
            continue
        if left[node] < 0:
            for slot in range(start[node], start[node] + count[node]):
                # Upper bound stays t_max so equal-t hits survive for the
                # lower-id tie-break; node pruning still uses best_t.
                hit, t, u, v, w = _intersect_slot(
                    ox, oy, oz, dx, dy, dz, kx, ky, kz, sx, sy, sz,
                    va, vb, vc, slot, t_min, t_max)
                if hit:
                    if t < best_t or (t == best_t and (best_id < 0 or orig_id[slot] < best_id)):
                        best_t = t
                        best_id = orig_id[slot]
                        best_slot = slot
                        bu, bv, bw = u, v, w
        else:
            stack[top] = right[node]
            top += 1
            stack[top] = left[node]
            top += 1
    return best_t, best_id, bu, bv, bw, best_slot


@njit(cache=True)
def ray_any(ox, oy, oz, dx, dy, dz, t_min, t_max,
            bmin, bmax, left, right, start, count, va, vb, vc):
    """True if any triangle is hit with t in (t_min, t_max)."""
    kx, ky, kz, sx, sy, sz = _shear_constants(dx, dy, dz)
    stack = np.empty(_STACK_SIZE, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _aabb_hit(ox, oy, oz, dx, dy, dz, bmin, bmax, node, t_min, t_max):
            continue
        if left[node] < 0:
            for slot in range(start[node], start[node] + count[node]):
                hit, t, u, v, w = _intersect_slot(
                    ox, oy, oz, dx, dy, dz, kx, ky, kz, sx, sy, sz,
                    va, vb, vc, slot, t_min, t_max)
                if hit:
                    return True
        else:
            stack[top] = right[node]
            top += 1
            stack[top] = left[node]
            top += 1
    return False


@njit(cache=True)
def rasterize(width, height, z_origin,
              bmin, bmax, left, right, start, count,
              va, vb, vc, orig_id, na, nb, nc,
              hit_mask, normals, depth, position):
    """Orthographic rasterization: one ray per pixel center, cast along -z."""
    inf = np.inf
    for i in range(height):
        for j in range(width):
            ox = j + 0.5
            oy = i + 0.5
            t, tid, u, v, w, slot = ray_nearest(
                ox, oy, z_origin, 0.0, 0.0, -1.0, 0.0, inf,
                bmin, bmax, left, right, start, count, va, vb, vc, orig_id)
            if tid < 0:
                continue
            hit_mask[i, j] = 1.0
            nx = u * na[slot, 0] + v * nb[slot, 0] + w * nc[slot, 0]
            ny = u * na[slot, 1] + v * nb[slot, 1] + w * nc[slot, 1]
            nz = u * na[slot, 2] + v * nb[slot, 2] + w * nc[slot, 2]
            norm = np.sqrt(nx * nx + ny * ny + nz * nz)
            if norm > 0.0:
                nx /= norm
                ny /= norm
                nz /= norm
            normals[i, j, 0] = nx
            normals[i, j, 1] = ny
            normals[i, j, 2] = nz
            pz = z_origin - t
            depth[i, j] = pz
            position[i, j, 0] = ox
            position[i, j, 1] = oy
            position[i, j, 2] = pz


@njit(cache=True)
def shadow_mask_directional(hit_mask, normals, position, lx, ly, lz, eps,
                            bmin, bmax, left, right, start, count, va, vb, vc):
    """Shadow mask for a directional light (lx, ly, lz = unit toward light).

    Per covered pixel: 0 when self-shadowed (n.l < 0) or when the feeler
    ray from the surface point (offset eps along the light) hits the mesh.
    """
    height, width = hit_mask.shape
    mask = np.zeros((height, width), dtype=np.float64)
    inf = np.inf
    for i in range(height):
        for j in range(width):
            if hit_mask[i, j] == 0.0:
                continue
            ndotl = (normals[i, j, 0] * lx + normals[i, j, 1] * ly
                     + normals[i, j, 2] * lz)
            if ndotl < 0.0:
                continue
            ox = position[i, j, 0] + eps * lx
            oy = position[i, j, 1] + eps * ly
            oz = position[i, j, 2] + eps * lz
            if not ray_any(ox, oy, oz, lx, ly, lz, 0.0, inf,
                           bmin, bmax, left, right, start, count, va, vb, vc):
                mask[i, j] = 1.0
    return mask


@njit(cache=True)
def shadow_mask_point(hit_mask, normals, position, px, py, pz, eps,
                      bmin, bmax, left, right, start, count, va, vb, vc):
    """Shadow mask for a point light; occluders beyond the light don't count.

    Returns (mask, degenerate) where degenerate flags a pixel whose surface
    point coincides with the light position.
    """
    height, width = hit_mask.shape
    mask = np.zeros((height, width), dtype=np.float64)
    degenerate = False
    for i in range(height):
        for j in range(width):
            if hit_mask[i, j] == 0.0:
                continue
            lx = px - position[i, j, 0]
            ly = py - position[i, j, 1]
            lz = pz - position[i, j, 2]
            dist = np.sqrt(lx * lx + ly * ly + lz * lz)
            if dist == 0.0:
                degenerate = True
                continue
            lx /= dist
            ly /= dist
            lz /= dist
            ndotl = (normals[i, j, 0] * lx + normals[i, j, 1] * ly
                     + normals[i, j, 2] * lz)
            if ndotl < 0.0:
                continue
            ox = position[i, j, 0] + eps * lx
            oy = position[i, j, 1] + eps * ly
            oz = position[i, j, 2] + eps * lz
            if not ray_any(ox, oy, oz, lx, ly, lz, 0.0, dist - eps,
                           bmin, bmax, left, right, start, count, va, vb, vc):
                mask[i, j] = 1.0
    return mask, degenerate
