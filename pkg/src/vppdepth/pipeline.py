"""End-to-end completion: sparse depth -> patterned pair -> matcher -> depth."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

from .datasets import Sample
from .errors import PipelineError, VppError
from .evaluate import Metrics, evaluate
from .geometry import DisparityMap, SparseDepthMap, VirtualRig, depth_to_disparity, disparity_to_depth
from .pattern import PatternConfig, PatternDiagnostics, PatternedStereoPair, build_patterned_pair, crop_output
from .sgm import auto_max_disparity


@dataclass
class CompletionResult:
    depth: SparseDepthMap  # dense completed depth, original dimensions
    disparity: DisparityMap  # cropped dense disparity
    metrics: Metrics
    pad_left: int
    pair: PatternedStereoPair | None = None
    pattern_diag: PatternDiagnostics | None = None
    sparse_disparity: DisparityMap | None = None


@contextmanager
def _stage(name: str):
    """Tag package-level failures with the pipeline stage they came from."""
    try:
        yield
    except PipelineError:
        raise
    except VppError as exc:
        raise PipelineError(name, str(exc)) from exc


def complete(
    sample: Sample,
    rig: VirtualRig,
    pat_cfg: PatternConfig,
    matcher,
    *,
    invalid_policy: str = "exclude",
    penalty: float | None = None,
    keep_intermediates: bool = False,
) -> CompletionResult:
    """Run the full pipeline on one sample and score it against its gt.

    ``matcher`` must expose ``match(pair, max_disparity) -> DisparityMap``.
    Stage failures surface as PipelineError tagged with the stage name.
    """
    with _stage("disparity"):
        sparse_d = depth_to_disparity(sample.sparse, rig)

    with _stage("pattern"):
        pair, diag = build_patterned_pair(sample.rgb, sparse_d, pat_cfg)

    with _stage("match"):
        dense = matcher.match(pair, auto_max_disparity(sparse_d))
        if dense.disp.shape != (pair.height, pair.width):
            raise PipelineError(
                "match", f"matcher returned {dense.disp.shape}, expected {(pair.height, pair.width)}"
            )

    with _stage("crop"):
        cropped = crop_output(dense, pair.pad_left, expected_width=sample.sparse.width)

    with _stage("triangulate"):
        depth = disparity_to_depth(cropped, rig)

    with _stage("evaluate"):
        metrics = evaluate(depth, sample.gt, invalid_policy=invalid_policy, penalty=penalty)

    metrics = Metrics(
        mae=metrics.mae,
        rmse=metrics.rmse,
        valid_count=metrics.valid_count,
        dropped_warps=diag.dropped_warps,
        invalid_pred=metrics.invalid_pred,
    )
    result = CompletionResult(depth=depth, disparity=cropped, metrics=metrics, pad_left=pair.pad_left)
    if keep_intermediates:
        result.pair = pair
        result.pattern_diag = diag
        result.sparse_disparity = sparse_d
    return result
