"""Depth completion through virtually patterned stereo pairs.

Sparse metric depth plus an RGB image become a fictitious, coherently
patterned stereo pair; any stereo matcher (the built-in semi-global one or
an external executable behind a file protocol) solves the pair, and the
resulting disparity is triangulated back into a dense depth map.
"""

__version__ = "0.1.0"

from .datasets import Sample, kitti_crop, lidar_min_filter, load_manifest, load_sample, subsample_points
from .errors import ConfigurationError, FormatError, MatcherError, PipelineError, VppError
from .evaluate import Metrics, evaluate
from .external import ExternalMatcher, MatcherBoundary, run_external
from .geometry import (
    CameraModel,
    DisparityMap,
    RigidTransform,
    SparseDepthMap,
    VirtualRig,
    depth_to_disparity,
    disparity_to_depth,
    project_points,
)
from .pattern import (
    PatternConfig,
    PatternedStereoPair,
    ScoreBuffer,
    adaptive_weights,
    build_patterned_pair,
    compute_left_padding,
    crop_output,
    project_random,
    project_rgb,
    splat_target,
)
from .pipeline import CompletionResult, complete
from .sgm import MatcherConfig, SgmMatcher, auto_max_disparity
from .sweep import SweepReport, sweep_baseline, sweep_patches
from .synthetic import SyntheticScene, make_scene, render_synthetic

__all__ = [
    "CameraModel",
    "CompletionResult",
    "ConfigurationError",
    "DisparityMap",
    "ExternalMatcher",
    "FormatError",
    "MatcherBoundary",
    "MatcherConfig",
    "MatcherError",
    "Metrics",
    "PatternConfig",
    "PatternedStereoPair",
    "PipelineError",
    "RigidTransform",
    "Sample",
    "ScoreBuffer",
    "SgmMatcher",
    "SparseDepthMap",
    "SweepReport",
    "SyntheticScene",
    "VirtualRig",
    "VppError",
    "adaptive_weights",
    "auto_max_disparity",
    "build_patterned_pair",
    "complete",
    "compute_left_padding",
    "crop_output",
    "depth_to_disparity",
    "disparity_to_depth",
    "evaluate",
    "kitti_crop",
    "lidar_min_filter",
    "load_manifest",
    "load_sample",
    "make_scene",
    "project_points",
    "project_random",
    "project_rgb",
    "render_synthetic",
    "run_external",
    "splat_target",
    "subsample_points",
    "sweep_baseline",
    "sweep_patches",
]
