"""Desk-scale synthetic scenes: layered fronto-parallel rectangles over a
slanted background plane, textured with seeded per-pixel noise."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .datasets import Sample, subsample_points
from .errors import ConfigurationError
from .geometry import CameraModel, DisparityMap, SparseDepthMap, VirtualRig, depth_to_disparity

# Defaults chosen so that with the default baseline the scene disparities
# stay below 48 px (volume auto-sizes to 64).
DESK_WIDTH = 320
DESK_HEIGHT = 240
DESK_FOCAL = 300.0
DESK_BASELINE = 0.235
DESK_DEPTH_RANGE = (1.5, 6.0)


@dataclass(frozen=True)
class RectLayer:
    """Fronto-parallel rectangle: pixel bounds [x0, x1) x [y0, y1), constant depth."""

    x0: int
    y0: int
    x1: int
    y1: int
    depth: float


@dataclass(frozen=True)
class SyntheticScene:
    width: int
    height: int
    background_depth: float  # slanted plane depth at the image center
    slant_x: float  # meters per pixel along +x
    slant_y: float  # meters per pixel along +y
    layers: tuple[RectLayer, ...]  # ordered far to near
    texture_seed: int

    def __post_init__(self):
        depths = [l.depth for l in self.layers]
        if any(d2 > d1 for d1, d2 in zip(depths, depths[1:])):
            raise ConfigurationError("layers must be ordered far to near")
        corners = [
            self.background_depth + self.slant_x * dx + self.slant_y * dy
            for dx in (-self.width / 2, self.width / 2)
            for dy in (-self.height / 2, self.height / 2)
        ]
        if min([*depths, *corners]) <= 0:
            raise ConfigurationError("scene depths must stay positive")

    def depth_raster(self) -> np.ndarray:
        xs = np.arange(self.width) - self.width / 2.0
        ys = np.arange(self.height) - self.height / 2.0
        depth = self.background_depth + self.slant_x * xs[None, :] + self.slant_y * ys[:, None]
        for layer in self.layers:
            depth[layer.y0 : layer.y1, layer.x0 : layer.x1] = layer.depth
        return depth


def default_camera(width: int = DESK_WIDTH, height: int = DESK_HEIGHT, focal: float = DESK_FOCAL) -> CameraModel:
    return CameraModel(fx=focal, fy=focal, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                       width=width, height=height)


def sample_seed(global_seed: int, sample_id: str) -> int:
    """Stable per-sample seed fan-out (sha256, not process-salted hash())."""
    digest = hashlib.sha256(f"{global_seed}:{sample_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


def make_scene(seed: int, width: int = DESK_WIDTH, height: int = DESK_HEIGHT,
               depth_range: tuple[float, float] = DESK_DEPTH_RANGE) -> SyntheticScene:
    rng = np.random.default_rng(seed)
    z_near, z_far = depth_range
    background = rng.uniform(0.75 * z_far, z_far)
    # Slants bounded so corner depths stay well inside the range.
    slant_x = rng.uniform(-0.2, 0.2) * z_far / (2 * width)
    slant_y = rng.uniform(-0.2, 0.2) * z_far / (2 * height)
    n_layers = int(rng.integers(2, 5))
    depths = np.sort(rng.uniform(z_near, 0.7 * z_far, size=n_layers))[::-1]
    layers = []
    for depth in depths:
        lw = int(rng.integers(width // 6, width // 3))
        lh = int(rng.integers(height // 6, height // 3))
        x0 = int(rng.integers(0, width - lw))
        y0 = int(rng.integers(0, height - lh))
        layers.append(RectLayer(x0, y0, x0 + lw, y0 + lh, float(depth)))
    return SyntheticScene(width, height, float(background), float(slant_x), float(slant_y),
                          tuple(layers), texture_seed=int(rng.integers(0, 2**31)))


def render_synthetic(scene: SyntheticScene, cam: CameraModel, *, points: int = 500,
                     point_seed: int = 0, sample_id: str = "synth") -> Sample:
    """Rasterize a scene into a Sample with dense ground truth."""
    if (scene.width, scene.height) != (cam.width, cam.height):
        raise ConfigurationError("scene and camera dimensions differ")
    depth = scene.depth_raster()
    gt = SparseDepthMap(depth, np.ones_like(depth, dtype=bool))
    rgb = np.random.default_rng(scene.texture_seed).random((scene.height, scene.width, 3))
    sparse = subsample_points(gt, n=points, seed=point_seed)
    return Sample(rgb=rgb, sparse=sparse, gt=gt, id=sample_id)


def snap_to_disparity_grid(depth: SparseDepthMap, rig: VirtualRig) -> SparseDepthMap:
    """Re-quantize depth through the float32 disparity exchange grid.

    Ground truth snapped this way survives the matcher file contract
    (float32 PFM) and triangulation without any residual, which makes
    exact-closure oracles possible.
    """
    d = depth_to_disparity(depth, rig)
    d32 = d.disp.astype(np.float32).astype(np.float64)
    snapped = np.zeros_like(depth.depth)
    snapped[d.valid] = rig.bf / d32[d.valid]
    return SparseDepthMap(snapped, d.valid.copy())


def dense_disparity(scene: SyntheticScene, rig: VirtualRig) -> DisparityMap:
    """Analytic dense disparity of a scene under the given rig (float32 grid)."""
    depth = SparseDepthMap(scene.depth_raster(), np.ones((scene.height, scene.width), dtype=bool))
    d = depth_to_disparity(depth, rig)
    return DisparityMap(d.disp.astype(np.float32).astype(np.float64), d.valid)
