"""Posed triangle meshes, OBJ ingestion, BVH ray casting, rasterization.

Coordinate convention: after posing, x and y are pixel coordinates
(x = column, y = row) and +z points toward the camera. Rasterization
casts one orthographic ray per pixel center from above the mesh along
-z. Meshes with the opposite depth convention need a z-flip in the pose.

Meshes are immutable after posing and safe for concurrent reads; all
ray casting is sequential and bitwise deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateGeometryError,
    EmptyMeshError,
    MeshParseError,
    ParameterError,
    StructuralError,
)

_LEAF_SIZE = 4


@dataclass(frozen=True)
class Bvh:
    """Flat median-split BVH plus triangle data gathered in leaf order."""

    bmin: np.ndarray
    bmax: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    va: np.ndarray
    vb: np.ndarray
    vc: np.ndarray
    na: np.ndarray
    nb: np.ndarray
    nc: np.ndarray
    orig_id: np.ndarray

    def traversal_args(self):
        return (self.bmin, self.bmax, self.left, self.right, self.start,
                self.count, self.va, self.vb, self.vc)


def _build_bvh(vertices: np.ndarray, normals: np.ndarray,
               triangles: np.ndarray) -> Bvh:
    m = len(triangles)
    tv = vertices[triangles]            # (M, 3, 3)
    tri_min = tv.min(axis=1)
    tri_max = tv.max(axis=1)
    centroids = tv.mean(axis=1)

    order = np.arange(m, dtype=np.int64)
    bmin_list: list[np.ndarray] = []
    bmax_list: list[np.ndarray] = []
    left_list: list[int] = []
    right_list: list[int] = []
    start_list: list[int] = []
    count_list: list[int] = []

    # Iterative build; each stack entry owns order[lo:hi].
    stack = [(0, m, -1, False)]  # (lo, hi, parent, is_right)
    while stack:
        lo, hi, parent, is_right = stack.pop()
        node = len(bmin_list)
        if parent >= 0:
            if is_right:
                right_list[parent] = node
            else:
                left_list[parent] = node
        span = order[lo:hi]
        bmin_list.append(tri_min[span].min(axis=0))
        bmax_list.append(tri_max[span].max(axis=0))
        if hi - lo <= _LEAF_SIZE:
            left_list.append(-1)
            right_list.append(-1)
            start_list.append(lo)
            count_list.append(hi - lo)
            continue
        cent = centroids[span]
        axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
        # Stable sort keyed by (centroid, triangle id) for determinism.
        perm = np.lexsort((span, cent[:, axis]))
        order[lo:hi] = span[perm]
        mid = (lo + hi) // 2
        left_list.append(-2)   # patched when children are emitted
        right_list.append(-2)
        start_list.append(lo)
        count_list.append(hi - lo)
        stack.append((mid, hi, node, True))
        stack.append((lo, mid, node, False))

    gathered = triangles[order]
    return Bvh(
        bmin=np.asarray(bmin_list, dtype=np.float64),
        bmax=np.asarray(bmax_list, dtype=np.float64),
        left=np.asarray(left_list, dtype=np.int64),
        right=np.asarray(right_list, dtype=np.int64),
        start=np.asarray(start_list, dtype=np.int64),
        count=np.asarray(count_list, dtype=np.int64),
        va=np.ascontiguousarray(vertices[gathered[:, 0]]),
        vb=np.ascontiguousarray(vertices[gathered[:, 1]]),
        vc=np.ascontiguousarray(vertices[gathered[:, 2]]),
        na=np.ascontiguousarray(normals[gathered[:, 0]]),
        nb=np.ascontiguousarray(normals[gathered[:, 1]]),
        nc=np.ascontiguousarray(normals[gathered[:, 2]]),
        orig_id=order,
    )


@dataclass(frozen=True)
class TriMesh:
    """Triangle mesh with per-vertex unit normals and a ray-acceleration index."""

    vertices: np.ndarray    # (N, 3) float64
    normals: np.ndarray     # (N, 3) float64, unit length
    triangles: np.ndarray   # (M, 3) int64
    bvh: Bvh = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        n = np.ascontiguousarray(np.asarray(self.normals, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise StructuralError(f"vertices must be (N, 3), got {v.shape}")
        if n.shape != v.shape:
            raise StructuralError(f"normals shape {n.shape} != vertices {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise StructuralError(f"triangles must be (M, 3), got {t.shape}")
        if len(t) == 0:
            raise EmptyMeshError("mesh has zero triangles")
        if t.min() < 0 or t.max() >= len(v):
            raise StructuralError("triangle index out of vertex range")
        lengths = np.linalg.norm(n, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-4):
            raise StructuralError("vertex normals must be unit length within 1e-4")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "triangles", t)
        if self.bvh is None:
            object.__setattr__(self, "bvh", _build_bvh(v, n, t))
        # Index sanity: every triangle appears exactly once in the BVH order.
        assert np.array_equal(np.sort(self.bvh.orig_id), np.arange(len(t)))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class Pose:
    """Similarity transform: v -> scale * rotation @ v + translation."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-5):
            raise ParameterError("pose rotation is not orthonormal within 1e-5")
        if not self.scale > 0:
            raise ParameterError(f"pose scale must be positive, got {self.scale}")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3), 1.0)

    @classmethod
    def from_json(cls, obj: dict) -> "Pose":
        """Accepts {"rotation": 9, "translation": 3, "scale": s} or {"matrix": 16}."""
        if "matrix" in obj:
            m = np.asarray(obj["matrix"], dtype=np.float64).reshape(4, 4)
            a = m[:3, :3]
            det = float(np.linalg.det(a))
            if det <= 0:
                raise ParameterError("pose matrix must have positive determinant")
            scale = det ** (1.0 / 3.0)
            return cls(a / scale, m[:3, 3], scale)
        try:
            return cls(np.asarray(obj["rotation"], dtype=np.float64).reshape(3, 3),
                       np.asarray(obj["translation"], dtype=np.float64),
                       float(obj.get("scale", 1.0)))
        except KeyError as exc:
            raise ParameterError(f"pose JSON missing field {exc}") from exc

    def to_json(self) -> dict:
        return {
            "rotation": [float(x) for x in self.rotation.reshape(-1)],
            "translation": [float(x) for x in self.translation],
            "scale": self.scale,
        }

    @classmethod
    def load(cls, path) -> "Pose":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


@dataclass(frozen=True)
class Ray:
    """Origin plus unit direction; the constructor normalizes."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise DegenerateGeometryError("ray direction must be nonzero")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d / norm)


@dataclass(frozen=True)
class Hit:
    t: float
    triangle_id: int
    barycentric: np.ndarray          # (3,) weights for the triangle's vertices
    interpolated_normal: np.ndarray  # unit


@dataclass(frozen=True)
class GBuffer:
    """Per-pixel geometry from orthographic rasterization.

    Background pixels hold zeros in every buffer; ``hit_mask`` is the
    coverage plane separating them from the face.
    """

    hit_mask: np.ndarray   # (H, W) in {0, 1}
    normals: np.ndarray    # (H, W, 3), unit where covered
    depth: np.ndarray      # (H, W), z coordinate of the hit point
    position: np.ndarray   # (H, W, 3)

    @property
    def width(self) -> int:
        return self.hit_mask.shape[1]

    @property
    def height(self) -> int:
        return self.hit_mask.shape[0]


def load_obj(path) -> TriMesh:
    """Load a Wavefront OBJ (v/vn/f records; f as v, v//vn, v/vt, or v/vt/vn).

    Polygon faces are fan-triangulated. Missing normals are synthesized as
    area-weighted vertex normals; per-corner normals are averaged per vertex.
    """
    vertices: list[list[float]] = []
    vn: list[list[float]] = []
    faces: list[tuple[list[int], list[int] | None]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            key = parts[0]
            try:
                if key == "v":
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                elif key == "vn":
                    vn.append([float(parts[1]), float(parts[2]), float(parts[3])])
                elif key == "f":
                    vi, ni = _parse_face(parts[1:], len(vertices), len(vn))
                    faces.append((vi, ni))
            except (ValueError, IndexError) as exc:
                raise MeshParseError(f"{path}: line {lineno}: {line!r}: {exc}") from exc

    if not faces:
        raise EmptyMeshError(f"{path}: no faces found")
    verts = np.asarray(vertices, dtype=np.float64)

    triangles = []
    corner_normals = []
    for vi, ni in faces:
        for k in range(1, len(vi) - 1):  # fan split
            triangles.append((vi[0], vi[k], vi[k + 1]))
            if ni is not None:
                corner_normals.append((ni[0], ni[k], ni[k + 1]))
    tris = np.asarray(triangles, dtype=np.int64)

    if corner_normals and len(corner_normals) == len(triangles) and len(vn) > 0:
        file_normals = np.asarray(vn, dtype=np.float64)
        normals = np.zeros_like(verts)
        for tri, nid in zip(tris, np.asarray(corner_normals, dtype=np.int64)):
            for corner in range(3):
                normals[tri[corner]] += file_normals[nid[corner]]
        normals = _normalize_rows(normals)
    else:
        normals = _synthesize_normals(verts, tris)
    return TriMesh(verts, normals, tris)


def _parse_face(tokens: list[str], n_vertices: int, n_normals: int):
    if len(tokens) < 3:
        raise ValueError("face needs at least 3 vertices")
    vi: list[int] = []
    ni: list[int] | None = [] if all("//" in t or t.count("/") == 2 for t in tokens) else None
    for token in tokens:
        fields = token.split("/")
        v = int(fields[0])
        vi.append(_resolve_index(v, n_vertices))
        if ni is not None:
            n = int(fields[2]) if len(fields) >= 3 and fields[2] else None
            if n is None:
                ni = None
            else:
                ni.append(_resolve_index(n, n_normals))
    return vi, ni


def _resolve_index(idx: int, length: int) -> int:
    resolved = idx - 1 if idx > 0 else length + idx
    if resolved < 0 or resolved >= length:
        raise ValueError(f"index {idx} out of range (have {length})")
    return resolved


def _normalize_rows(arr: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    out = arr / safe
    # Degenerate rows fall back to +z so the unit invariant holds.
    out[norms[:, 0] == 0.0] = (0.0, 0.0, 1.0)
    return out


def _synthesize_normals(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    normals = np.zeros_like(verts)
    e1 = verts[tris[:, 1]] - verts[tris[:, 0]]
    e2 = verts[tris[:, 2]] - verts[tris[:, 0]]
    face = np.cross(e1, e2)  # magnitude = 2 * area, so this is area weighting
    for corner in range(3):
        np.add.at(normals, tris[:, corner], face)
    return _normalize_rows(normals)


def apply_pose(mesh: TriMesh, pose: Pose) -> TriMesh:
    """Similarity-transform positions, rotate normals, rebuild the BVH.

    Scale is uniform, so normals need no inverse-transpose correction.
    """
    verts = mesh.vertices @ (pose.scale * pose.rotation).T + pose.translation
    normals = mesh.normals @ pose.rotation.T
    return TriMesh(verts, normals, mesh.triangles)


def intersect(ray: Ray, mesh: TriMesh, t_min: float = 0.0,
              t_max: float = np.inf) -> Hit | None:
    """Nearest BVH hit with t strictly inside (t_min, t_max), or None.

    Watertight ray-triangle test; equal-t ties resolve to the lower
    triangle id for determinism.
    """
    if not t_min < t_max:
        raise ParameterError(f"t_min ({t_min}) must be < t_max ({t_max})")
    bvh = mesh.bvh
    t, tid, u, v, w, slot = _kernels.ray_nearest(
        ray.origin[0], ray.origin[1], ray.origin[2],
        ray.direction[0], ray.direction[1], ray.direction[2],
        t_min, t_max, *bvh.traversal_args(), bvh.orig_id)
    if tid < 0:
        return None
    normal = u * bvh.na[slot] + v * bvh.nb[slot] + w * bvh.nc[slot]
    norm = np.linalg.norm(normal)
    if norm > 0:
        normal = normal / norm
    return Hit(float(t), int(tid), np.array([u, v, w]), normal)


def occluded(origin: np.ndarray, direction: np.ndarray, mesh: TriMesh,
             t_min: float = 0.0, t_max: float = np.inf) -> bool:
    """True if any triangle lies along the ray with t in (t_min, t_max)."""
    d = np.asarray(direction, dtype=np.float64)
    o = np.asarray(origin, dtype=np.float64)
    return bool(_kernels.ray_any(o[0], o[1], o[2], d[0], d[1], d[2],
                                 t_min, t_max, *mesh.bvh.traversal_args()))


def rasterize_geometry(mesh: TriMesh, width: int, height: int) -> GBuffer:
    """Orthographic G-buffer: one ray per pixel center from +z looking along -z.

    Pixel (row i, column j) gets the ray origin (j + 0.5, i + 0.5, z_far).
    """
    if width < 1 or height < 1:
        raise ParameterError(f"raster size must be positive, got {width}x{height}")
    lo, hi = mesh.bounds
    z_far = float(hi[2]) + max(1.0, 1e-3 * mesh.bbox_diagonal)
    hit_mask = np.zeros((height, width), dtype=np.float64)
    normals = np.zeros((height, width, 3), dtype=np.float64)
    depth = np.zeros((height, width), dtype=np.float64)
    position = np.zeros((height, width, 3), dtype=np.float64)
    bvh = mesh.bvh
    _kernels.rasterize(width, height, z_far, *bvh.traversal_args(),
                       bvh.orig_id, bvh.na, bvh.nb, bvh.nc,
                       hit_mask, normals, depth, position)
    return GBuffer(hit_mask, normals, depth, position)
