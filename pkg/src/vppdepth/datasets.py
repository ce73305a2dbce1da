"""Sample ingestion: manifests, crops, LiDAR pre-filtering, subsampling.

A manifest is a text file with one sample per line:

    <id> <rgb_path> <sparse_path> <gt_path>

Paths are resolved relative to the manifest's directory. RGB rasters are
8-bit PNG; depth rasters are 16-bit PNG (raw/256, zero missing) or float
PFM, chosen by extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError
from .fileio import read_depth_png16, read_image_png, read_pfm
from .geometry import SparseDepthMap


@dataclass(frozen=True)
class Sample:
    rgb: np.ndarray  # (H, W, 3) in [0, 1]
    sparse: SparseDepthMap
    gt: SparseDepthMap
    id: str

    def __post_init__(self):
        shape = self.rgb.shape[:2]
        if self.sparse.depth.shape != shape or self.gt.depth.shape != shape:
            raise ConfigurationError(f"sample {self.id!r}: raster dimensions differ")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    rgb_path: Path
    sparse_path: Path
    gt_path: Path


def load_manifest(path: str | Path) -> list[SampleRecord]:
    path = Path(path)
    base = path.parent
    records = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"{path}:{lineno}: expected '<id> <rgb> <sparse> <gt>'")
        records.append(
            SampleRecord(parts[0], base / parts[1], base / parts[2], base / parts[3])
        )
    return records


def load_depth_raster(path: str | Path) -> SparseDepthMap:
    """Load a depth raster, dispatching on extension (.pfm or 16-bit .png)."""
    path = Path(path)
    if path.suffix == ".pfm":
        raster = read_pfm(path).astype(np.float64)
        if raster.ndim != 2:
            raise FormatError(f"{path}: depth PFM must be grayscale")
        valid = np.isfinite(raster) & (raster > 0)
        return SparseDepthMap(np.where(valid, raster, 0.0), valid)
    return read_depth_png16(path)


def load_depth_png16(path: str | Path, scale: float = 256.0) -> SparseDepthMap:
    """KITTI-convention 16-bit depth PNG: depth = raw / scale, zero missing."""
    return read_depth_png16(path, scale)


def load_sample(record: SampleRecord) -> Sample:
    return Sample(
        rgb=read_image_png(record.rgb_path),
        sparse=load_depth_raster(record.sparse_path),
        gt=load_depth_raster(record.gt_path),
        id=record.id,
    )


def kitti_crop(sample: Sample, top: int = 100, out_w: int = 1216, out_h: int = 240) -> Sample:
    """Top-crop then center-crop all rasters of a sample."""
    h, w = sample.rgb.shape[:2]
    if h - top < out_h or w < out_w:
        raise ConfigurationError(
            f"sample {sample.id!r} ({w}x{h}) too small for top {top} + {out_w}x{out_h} crop"
        )
    y0 = top + (h - top - out_h) // 2
    x0 = (w - out_w) // 2

    def crop2(a):
        return a[y0 : y0 + out_h, x0 : x0 + out_w].copy()

    return Sample(
        rgb=crop2(sample.rgb),
        sparse=SparseDepthMap(crop2(sample.sparse.depth), crop2(sample.sparse.valid)),
        gt=SparseDepthMap(crop2(sample.gt.depth), crop2(sample.gt.valid)),
        id=sample.id,
    )


def _window_min(values: np.ndarray, radius: int) -> np.ndarray:
    """Separable sliding minimum with +inf outside the raster."""
    out = values
    for axis in (0, 1):
        padded = np.pad(out, [(radius, radius) if a == axis else (0, 0) for a in (0, 1)],
                        constant_values=np.inf)
        view = np.lib.stride_tricks.sliding_window_view(padded, 2 * radius + 1, axis=axis)
        out = view.min(axis=-1)
    return out


def lidar_min_filter(z: SparseDepthMap, window: int = 7, tau: float = 1.0) -> SparseDepthMap:
    """Drop points farther than tau above the local window minimum.

    Standard pre-filter for raw LiDAR projected through a camera: points
    that are much deeper than their neighborhood belong to occluded
    surfaces bleeding through the foreground.
    """
    if window % 2 == 0 or window < 1:
        raise ConfigurationError("window must be odd and >= 1")
    masked = np.where(z.valid, z.depth, np.inf)
    local_min = _window_min(masked, window // 2)
    keep = z.valid & (z.depth - local_min <= tau)
    return SparseDepthMap(np.where(keep, z.depth, 0.0), keep)


def subsample_points(
    z: SparseDepthMap,
    n: int | None = None,
    seed: int = 0,
    fraction: float | None = None,
) -> SparseDepthMap:
    """Uniformly keep min(n, available) valid points without replacement."""
    if (n is None) == (fraction is None):
        raise ConfigurationError("pass exactly one of n or fraction")
    flat = np.nonzero(z.valid.reshape(-1))[0]
    if fraction is not None:
        if not 0.0 < fraction <= 1.0:
            raise ConfigurationError("fraction must lie in (0, 1]")
        n = int(round(fraction * flat.size))
    count = min(int(n), flat.size)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(flat, size=count, replace=False) if count < flat.size else flat
    valid = np.zeros(z.valid.size, dtype=bool)
    valid[chosen] = True
    valid = valid.reshape(z.valid.shape)
    return SparseDepthMap(np.where(valid, z.depth, 0.0), valid)
