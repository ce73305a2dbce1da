import numpy as np
import pytest

from vppdepth.geometry import CameraModel, DisparityMap, SparseDepthMap, VirtualRig


@pytest.fixture
def small_camera():
    return CameraModel(fx=100.0, fy=100.0, cx=31.5, cy=23.5, width=64, height=48)


@pytest.fixture
def small_rig(small_camera):
    return VirtualRig(camera=small_camera, baseline_b=0.15)


def random_depth_map(rng, height, width, n_points, z_range=(0.5, 8.0)):
    depth = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    flat = rng.choice(height * width, size=min(n_points, height * width), replace=False)
    depth.flat[flat] = rng.uniform(*z_range, size=flat.size)
    valid.flat[flat] = True
    return SparseDepthMap(depth, valid)


def random_disparity_map(rng, height, width, n_points, d_range=(1.0, 24.0), integer=False):
    disp = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    flat = rng.choice(height * width, size=min(n_points, height * width), replace=False)
    values = rng.uniform(*d_range, size=flat.size)
    if integer:
        values = np.maximum(1, np.round(values))
    disp.flat[flat] = values
    valid.flat[flat] = True
    return DisparityMap(disp, valid)
