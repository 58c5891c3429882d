"""PNG and PFM file I/O.

PNG is the 8-bit visualization format; PFM (Portable FloatMap) is the
lossless inter-stage format so masks, weights, and ratio images survive
without quantization. Only grayscale "Pf" PFM is supported, written
little-endian (scale -1.0) with rows bottom-to-top per the format's
convention.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import StructuralError
from .imagecore import ColorImage, ColorSpace, as_plane


def read_png(path) -> ColorImage:
    """Load an 8-bit PNG as an RGB ColorImage with values in [0, 1]."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return ColorImage(ColorSpace.RGB, arr)


def read_png_plane(path) -> np.ndarray:
    """Load a PNG as a single grayscale plane in [0, 1]."""
    with Image.open(path) as im:
        gray = im.convert("L")
        return np.asarray(gray, dtype=np.float64) / 255.0


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.clip(values, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)


def write_png(path, image) -> None:
    """Write a ColorImage (RGB) or a plane as an 8-bit PNG.

    Values are clamped to [0, 1] and rounded; this is the only
    quantization point in the pipeline.
    """
    if isinstance(image, ColorImage):
        if image.space is not ColorSpace.RGB:
            raise StructuralError("write_png expects an RGB image; convert first")
        Image.fromarray(_quantize(image.channels), mode="RGB").save(path)
    else:
        plane = as_plane(image)
        Image.fromarray(_quantize(plane), mode="L").save(path)


def write_pfm(path, plane) -> None:
    """Write a plane as grayscale little-endian PFM (float32)."""
    arr = as_plane(plane).astype(np.float32)
    height, width = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        # PFM stores the bottom row first.
        f.write(np.ascontiguousarray(arr[::-1, :]).tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a grayscale PFM back into a float64 plane."""
    data = Path(path).read_bytes()
    header, body = _split_pfm_header(data, path)
    kind, width, height, scale = header
    if kind == b"PF":
        raise StructuralError(f"{path}: color PFM not supported, expected grayscale Pf")
    if kind != b"Pf":
        raise StructuralError(f"{path}: not a PFM file (magic {kind!r})")
    count = width * height
    dtype = "<f4" if scale < 0 else ">f4"
    expected = count * 4
    if len(body) < expected:
        raise StructuralError(
            f"{path}: truncated PFM, expected {expected} data bytes, got {len(body)}"
        )
    flat = np.frombuffer(body[:expected], dtype=dtype)
    return flat.reshape(height, width)[::-1, :].astype(np.float64)


def _split_pfm_header(data: bytes, path) -> tuple[tuple, bytes]:
    # Header: magic, "width height", scale — three whitespace-terminated tokens.
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            break
        tokens.append(data[start:pos])
    if len(tokens) < 4:
        raise StructuralError(f"{path}: malformed PFM header")
    pos += 1  # single whitespace byte separates header from raster data
    try:
        width = int(tokens[1])
        height = int(tokens[2])
        scale = float(tokens[3])
    except ValueError as exc:
        raise StructuralError(f"{path}: malformed PFM header: {exc}") from exc
    if width < 1 or height < 1 or scale == 0:
        raise StructuralError(f"{path}: invalid PFM dimensions or scale")
    return (tokens[0], width, height, scale), data[pos:]
