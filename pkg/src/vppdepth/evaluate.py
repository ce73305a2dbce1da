"""Depth error metrics over pixels with valid ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import SparseDepthMap

INVALID_POLICIES = ("exclude", "penalize")


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    valid_count: int
    dropped_warps: int = 0
    invalid_pred: int = 0

    def as_dict(self) -> dict:
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "valid_count": self.valid_count,
            "dropped_warps": self.dropped_warps,
            "invalid_pred": self.invalid_pred,
        }


def evaluate(
    pred: SparseDepthMap,
    gt: SparseDepthMap,
    invalid_policy: str = "exclude",
    penalty: float | None = None,
) -> Metrics:
    """MAE and RMSE of pred against gt over gt-valid pixels.

    Ground-truth pixels the prediction left invalid are counted and, under
    the default "exclude" policy, left out of the means; under "penalize"
    each contributes the fixed ``penalty`` error (meters) instead.
    """
    if invalid_policy not in INVALID_POLICIES:
        raise ConfigurationError(f"invalid_policy must be one of {INVALID_POLICIES}")
    if pred.depth.shape != gt.depth.shape:
        raise ConfigurationError("prediction and ground truth dimensions differ")

    covered = gt.valid & pred.valid
    missing = int((gt.valid & ~pred.valid).sum())
    err = np.abs(pred.depth[covered] - gt.depth[covered])

    if invalid_policy == "penalize":
        if penalty is None or penalty < 0:
            raise ConfigurationError("penalize policy needs a non-negative penalty")
        err = np.concatenate([err, np.full(missing, float(penalty))])

    count = err.size
    if count == 0:
        return Metrics(mae=0.0, rmse=0.0, valid_count=0, invalid_pred=missing)
    mae = float(err.mean())
    rmse = float(math.sqrt(np.mean(err**2)))
    return Metrics(mae=mae, rmse=rmse, valid_count=count, invalid_pred=missing)
