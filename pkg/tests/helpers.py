"""Independent oracles used by the test suite.

Everything here is deliberately implemented differently from the library:
classic Moller-Trumbore instead of the watertight shear test, exhaustive
per-triangle loops instead of BVH traversal, naive window loops instead
of separable filters.
"""

from __future__ import annotations

import numpy as np


def triangle_arrays(mesh):
    tv = mesh.vertices[mesh.triangles]
    return tv[:, 0], tv[:, 1], tv[:, 2]


def mt_nearest(origin, direction, mesh, t_min=0.0, t_max=np.inf):
    """Nearest hit by exhaustive Moller-Trumbore over all triangles.

    Returns (t, triangle_id) or None. Equal-t ties break to the lower id.
    """
    va, vb, vc = triangle_arrays(mesh)
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    e1 = vb - va
    e2 = vc - va
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = det != 0.0
    safe_det = np.where(ok, det, 1.0)
    s = o - va
    u = np.einsum("ij,ij->i", s, p) / safe_det
    q = np.cross(s, e1)
    v = np.einsum("ij,j->i", q, d) / safe_det
    t = np.einsum("ij,ij->i", q, e2) / safe_det
    valid = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > t_min) & (t < t_max)
    if not np.any(valid):
        return None
    ids = np.flatnonzero(valid)
    order = np.lexsort((ids, t[ids]))
    best = ids[order[0]]
    return float(t[best]), int(best)


def mt_occluded(origins, directions, mesh, t_min=0.0, t_max=np.inf):
    """Exhaustive occlusion test for N rays; loops triangles, vectorizes rays.

    ``directions`` may be a single (3,) vector or (N, 3); ``t_max`` a scalar
    or (N,) array.
    """
    va, vb, vc = triangle_arrays(mesh)
    o = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    d = np.asarray(directions, dtype=np.float64)
    if d.ndim == 1:
        d = np.broadcast_to(d, o.shape)
    upper = np.broadcast_to(np.asarray(t_max, dtype=np.float64), (len(o),))
    blocked = np.zeros(len(o), dtype=bool)
    for i in range(len(va)):
        e1 = vb[i] - va[i]
        e2 = vc[i] - va[i]
        p = np.cross(d, e2)
        det = p @ e1
        ok = det != 0.0
        safe_det = np.where(ok, det, 1.0)
        s = o - va[i]
        u = np.einsum("ij,ij->i", s, p) / safe_det
        q = np.cross(s, e1)
        v = np.einsum("ij,ij->i", q, d) / safe_det
        t = (q @ e2) / safe_det
        blocked |= ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > t_min) & (t < upper)
    return blocked


def brute_force_shadow_mask(gbuffer, mesh, light, eps=None):
    """Shadow mask with the same semantics as the library but exhaustive
    per-triangle occlusion instead of BVH traversal."""
    from relightkit.shadow import DirectionalLight, feeler_epsilon

    e = feeler_epsilon(mesh, eps)
    cover = gbuffer.hit_mask == 1.0
    positions = gbuffer.position[cover]
    normals = gbuffer.normals[cover]
    if isinstance(light, DirectionalLight):
        d = light.direction
        ndotl = normals @ d
        dirs = np.broadcast_to(d, positions.shape)
        t_max = np.full(len(positions), np.inf)
    else:
        delta = light.position - positions
        dist = np.linalg.norm(delta, axis=1)
        dirs = delta / dist[:, None]
        ndotl = np.einsum("ij,ij->i", normals, dirs)
        t_max = dist - e
    candidates = ndotl >= 0.0
    lit = np.zeros(len(positions), dtype=bool)
    if np.any(candidates):
        origins = positions[candidates] + e * dirs[candidates]
        blocked = mt_occluded(origins, dirs[candidates], mesh,
                              t_min=0.0, t_max=t_max[candidates])
        lit[candidates] = ~blocked
    mask = np.zeros_like(gbuffer.hit_mask)
    mask[cover] = lit.astype(np.float64)
    return mask


def box_mean_naive(plane, window):
    """Replicate-padded window mean by explicit loops (small images only)."""
    half = window // 2
    height, width = plane.shape
    out = np.empty_like(plane)
    for i in range(height):
        for j in range(width):
            total = 0.0
            for di in range(-half, half + 1):
                for dj in range(-half, half + 1):
                    ii = min(max(i + di, 0), height - 1)
                    jj = min(max(j + dj, 0), width - 1)
                    total += plane[ii, jj]
            out[i, j] = total / (window * window)
    return out


def ssim_naive(a, b, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Direct per-window SSIM with Gaussian weights over the valid region."""
    offsets = np.arange(window) - (window - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    kernel = np.outer(g, g)
    kernel /= kernel.sum()
    c1 = k1 ** 2
    c2 = k2 ** 2
    height, width = a.shape
    values = []
    for i in range(height - window + 1):
        for j in range(width - window + 1):
            wa = a[i:i + window, j:j + window]
            wb = b[i:i + window, j:j + window]
            mu_a = float(np.sum(kernel * wa))
            mu_b = float(np.sum(kernel * wb))
            var_a = float(np.sum(kernel * wa * wa)) - mu_a ** 2
            var_b = float(np.sum(kernel * wb * wb)) - mu_b ** 2
            cov = float(np.sum(kernel * wa * wb)) - mu_a * mu_b
            values.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                          / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(np.mean(values))


def random_unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sh_basis_oracle(directions):
    """Real SH basis for (N, 3) directions, typed independently from
    literature constants; returns (N, 9)."""
    d = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    x, y, z = d[:, 0], d[:, 1], d[:, 2]
    return np.stack([
        np.full_like(x, 0.28209479177387814),
        0.4886025119029199 * y,
        0.4886025119029199 * z,
        0.4886025119029199 * x,
        1.0925484305920792 * x * y,
        1.0925484305920792 * y * z,
        0.31539156525252005 * (3.0 * z * z - 1.0),
        1.0925484305920792 * x * z,
        0.5462742152960396 * (x * x - y * y),
    ], axis=1)


def clamped_cosine_irradiance(normal, coeffs, n_theta=24, n_phi=32):
    """Quadrature oracle: integrate the order-2 SH radiance against the
    clamped cosine over the hemisphere around ``normal``.

    Gauss-Legendre in the polar angle, uniform in azimuth; both are exact
    for the band-limited trig-polynomial integrand.
    """
    n = np.asarray(normal, dtype=np.float64)
    helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)

    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    thetas = (nodes + 1.0) * (np.pi / 4.0)        # map [-1,1] -> [0, pi/2]
    w_theta = weights * (np.pi / 4.0)
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sin(thetas)[:, None]
    cos_t = np.cos(thetas)[:, None]
    directions = (sin_t[..., None] * (np.cos(phis)[None, :, None] * e1
                                      + np.sin(phis)[None, :, None] * e2)
                  + cos_t[..., None] * n)
    radiance = (sh_basis_oracle(directions.reshape(-1, 3)) @ coeffs
                ).reshape(n_theta, n_phi)
    weights_grid = cos_t * sin_t * w_theta[:, None] * (2.0 * np.pi / n_phi)
    return float(np.sum(radiance * weights_grid))
