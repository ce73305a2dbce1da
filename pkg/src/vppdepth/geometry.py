"""Camera models, sparse-point projection, and depth/disparity conversion.

Conventions: image arrays are indexed (row, col) = (y, x); x grows to the
right, y grows downward. Depths are meters, disparities are pixels. The
virtual target camera sits at horizontal distance ``baseline_b`` from the
reference camera and shares its intrinsics, so disparity and depth relate
through d = b * fx / z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Disparities below this are treated as unresolvable (infinite depth).
DISPARITY_EPS = 1e-3

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics of the reference camera."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigurationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigurationError(
                f"principal point ({self.cx}, {self.cy}) outside image {self.width}x{self.height}"
            )
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError("image dimensions must be positive")


@dataclass(frozen=True)
class RigidTransform:
    """Depth-sensor-to-camera extrinsics: p_cam = rotation @ p + translation."""

    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ConfigurationError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), rtol=0.0, atol=_ORTHO_TOL):
            raise ConfigurationError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ConfigurationError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class VirtualRig:
    """Reference camera plus the virtual horizontal baseline (meters)."""

    camera: CameraModel
    baseline_b: float

    def __post_init__(self):
        if not self.baseline_b > 0:
            raise ConfigurationError(f"baseline_b must be > 0, got {self.baseline_b}")

    @property
    def bf(self) -> float:
        """baseline * fx, the depth/disparity conversion constant."""
        return self.baseline_b * self.camera.fx


def _validate_raster(values: np.ndarray, valid: np.ndarray, kind: str) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    if values.ndim != 2 or values.shape != valid.shape:
        raise ConfigurationError(f"{kind} raster and mask must share a 2D shape")
    picked = values[valid]
    if picked.size and (not np.all(np.isfinite(picked)) or not np.all(picked > 0)):
        raise ConfigurationError(f"valid {kind} values must be finite and > 0")
    return values, valid


@dataclass(frozen=True)
class SparseDepthMap:
    """Per-pixel metric depth with a validity mask. Invalid pixels carry no value."""

    depth: np.ndarray  # (H, W) float64, meters
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        depth, valid = _validate_raster(self.depth, self.valid, "depth")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def count(self) -> int:
        return int(self.valid.sum())


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel real-valued disparity with a validity mask."""

    disp: np.ndarray  # (H, W) float64, pixels
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        disp, valid = _validate_raster(self.disp, self.valid, "disparity")
        object.__setattr__(self, "disp", disp)
        object.__setattr__(self, "valid", valid)

    @property
    def width(self) -> int:
        return self.disp.shape[1]

    @property
    def height(self) -> int:
        return self.disp.shape[0]

    @property
    def count(self) -> int:
        return int(self.valid.sum())


def project_points(
    cloud: np.ndarray,
    cam: CameraModel,
    xform: RigidTransform,
    diagnostics: dict | None = None,
) -> SparseDepthMap:
    """Project 3D points (meters, sensor frame) into the reference image plane.

    Points are transformed by the extrinsics, perspective-projected, and
    rasterized to the nearest pixel center (half-up rounding). Points behind
    the camera or landing outside the image are dropped; collisions on a
    pixel keep the smallest depth (z-buffer). If ``diagnostics`` is given,
    drop counters are stored under ``behind_camera`` and ``out_of_image``.
    """
    cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if cloud.size and not np.all(np.isfinite(cloud)):
        raise ConfigurationError("point cloud contains non-finite coordinates")

    depth = np.zeros((cam.height, cam.width), dtype=np.float64)
    valid = np.zeros((cam.height, cam.width), dtype=bool)

    if cloud.shape[0] == 0:
        if diagnostics is not None:
            diagnostics.update(behind_camera=0, out_of_image=0)
        return SparseDepthMap(depth, valid)

    # Explicit per-component arithmetic (not matmul): keeps the evaluation
    # order identical to scalar math, so results are bit-reproducible
    # against per-point reference computations.
    r, t = xform.rotation, xform.translation
    px, py, pz = cloud[:, 0], cloud[:, 1], cloud[:, 2]
    x = r[0, 0] * px + r[0, 1] * py + r[0, 2] * pz + t[0]
    y = r[1, 0] * px + r[1, 1] * py + r[1, 2] * pz + t[1]
    z = r[2, 0] * px + r[2, 1] * py + r[2, 2] * pz + t[2]
    front = z > 0
    u = np.empty_like(z)
    v = np.empty_like(z)
    u[front] = cam.fx * x[front] / z[front] + cam.cx
    v[front] = cam.fy * y[front] / z[front] + cam.cy

    col = np.floor(u + 0.5).astype(np.int64)
    row = np.floor(v + 0.5).astype(np.int64)
    inside = front & (col >= 0) & (col < cam.width) & (row >= 0) & (row < cam.height)

    if diagnostics is not None:
        diagnostics["behind_camera"] = int((~front).sum())
        diagnostics["out_of_image"] = int((front & ~inside).sum())

    zi = z[inside]
    pix = row[inside] * cam.width + col[inside]
    # Nearest depth wins per pixel: sort by (pixel, depth) and keep the first.
    order = np.lexsort((zi, pix))
    pix, zi = pix[order], zi[order]
    first = np.ones(pix.shape[0], dtype=bool)
    first[1:] = pix[1:] != pix[:-1]
    depth.flat[pix[first]] = zi[first]
    valid.flat[pix[first]] = True
    return SparseDepthMap(depth, valid)


def depth_to_disparity(z: SparseDepthMap, rig: VirtualRig) -> DisparityMap:
    """Convert depth to disparity: d = b * fx / z on valid pixels."""
    disp = np.zeros_like(z.depth)
    disp[z.valid] = rig.bf / z.depth[z.valid]
    return DisparityMap(disp, z.valid.copy())


def disparity_to_depth(d: DisparityMap, rig: VirtualRig, eps: float = DISPARITY_EPS) -> SparseDepthMap:
    """Triangulate disparity back to depth: z = b * fx / d.

    Pixels with disparity <= eps are marked invalid (unresolvable range).
    """
    keep = d.valid & (d.disp > eps)
    depth = np.zeros_like(d.disp)
    depth[keep] = rig.bf / d.disp[keep]
    return SparseDepthMap(depth, keep)
