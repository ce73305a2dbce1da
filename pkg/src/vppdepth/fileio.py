"""Raster file I/O: PFM floats, 16-bit depth PNGs, 8-bit RGB PNGs.

PFM files use the "Pf" (grayscale) / "PF" (color) header with a negative
scale marking little-endian data; rows are stored bottom-up. Depth PNGs
follow the raw/256 convention with zero meaning missing.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import FormatError
from .geometry import SparseDepthMap

DEPTH_PNG_SCALE = 256.0


def write_pfm(path: str | Path, data: np.ndarray) -> None:
    """Write a float32 PFM (little-endian, scale -1.0, rows bottom-up)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf\n"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF\n"
    else:
        raise FormatError(f"PFM expects HxW or HxWx3 data, got shape {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as f:
        f.write(header)
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a PFM file; returns float32 (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        tag = f.readline().rstrip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise FormatError(f"{path}: not a PFM file (tag {tag!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise FormatError(f"{path}: malformed PFM dimensions line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().rstrip())
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise FormatError(f"{path}: truncated PFM payload")
    data = np.frombuffer(raw, dtype=endian + "f4").reshape(h, w, channels)
    data = np.flipud(data)
    if channels == 1:
        data = data[:, :, 0]
    return np.ascontiguousarray(data.astype(np.float32))


def write_depth_png16(path: str | Path, depth: SparseDepthMap, scale: float = DEPTH_PNG_SCALE) -> None:
    """Write depth as 16-bit PNG (value = round(depth * scale), 0 = invalid)."""
    raw = np.zeros((depth.height, depth.width), dtype=np.uint16)
    quant = np.round(depth.depth[depth.valid] * scale)
    if quant.size and (quant.max() > 65535 or quant.min() < 1):
        raise FormatError("depth out of 16-bit PNG range for the given scale")
    raw[depth.valid] = quant.astype(np.uint16)
    PILImage.fromarray(raw).save(path)


def read_depth_png16(path: str | Path, scale: float = DEPTH_PNG_SCALE) -> SparseDepthMap:
    """Read a 16-bit depth PNG; zero pixels are invalid."""
    img = PILImage.open(path)
    if img.mode not in ("I;16", "I", "I;16B"):
        raise FormatError(f"{path}: expected 16-bit grayscale PNG, got mode {img.mode!r}")
    raw = np.asarray(img, dtype=np.uint32)
    if raw.max(initial=0) > 65535:
        raise FormatError(f"{path}: sample values exceed 16 bits")
    valid = raw > 0
    depth = raw.astype(np.float64) / scale
    depth[~valid] = 0.0
    return SparseDepthMap(depth, valid)


def write_image_png(path: str | Path, image: np.ndarray) -> None:
    """Write an RGB image with float channels in [0, 1] as 8-bit PNG."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"expected HxWx3 image, got shape {image.shape}")
    if image.size and (image.min() < 0.0 or image.max() > 1.0):
        raise FormatError("image samples must lie in [0, 1]")
    quant = np.floor(image * 255.0 + 0.5).astype(np.uint8)
    PILImage.fromarray(quant, mode="RGB").save(path)


def read_image_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit RGB PNG into float64 channels in [0, 1]."""
    img = PILImage.open(path).convert("RGB")
    return np.asarray(img, dtype=np.float64) / 255.0
