"""Hyper-parameter sweeps over the completion pipeline, reported as CSV."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .datasets import Sample
from .evaluate import Metrics
from .geometry import CameraModel, VirtualRig
from .pattern import PatternConfig
from .pipeline import complete
from .synthetic import sample_seed

PATCH_SIZES = (1, 3, 5, 7, 9)


@dataclass(frozen=True)
class SweepReport:
    axes: tuple[str, ...]
    metrics: tuple[str, ...]
    rows: tuple[tuple, ...]
    meta: tuple[tuple[str, str], ...] = ()

    def column(self, name: str) -> list:
        idx = (self.axes + self.metrics).index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self) -> str:
        lines = [f"# {key}={value}" for key, value in self.meta]
        lines.append(",".join(self.axes + self.metrics))
        for row in self.rows:
            lines.append(",".join(_format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def max_workers() -> int:
    """Parallelism cap from VPP_THREADS (default: serial)."""
    try:
        return max(1, int(os.environ.get("VPP_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    workers = min(max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _as_factory(matcher):
    """Matchers may be passed directly or as a factory(sample, rig).

    The factory form matters for file-protocol matchers, whose sidecar must
    carry the rig actually used for the row (baseline sweeps change it).
    """
    if callable(matcher) and not hasattr(matcher, "match"):
        return matcher
    return lambda sample, rig: matcher


def _run_cell(samples, rig, cfg, matcher_factory, seed, invalid_policy) -> Metrics:
    """Aggregate pixel-weighted metrics of one grid cell across samples."""

    def run(sample: Sample) -> Metrics:
        cell_cfg = replace(cfg, rng_seed=sample_seed(seed, sample.id))
        return complete(sample, rig, cell_cfg, matcher_factory(sample, rig),
                        invalid_policy=invalid_policy).metrics

    parts = _map_ordered(run, list(samples))
    count = sum(m.valid_count for m in parts)
    abs_sum = sum(m.mae * m.valid_count for m in parts)
    sq_sum = sum(m.rmse**2 * m.valid_count for m in parts)
    return Metrics(
        mae=abs_sum / count if count else 0.0,
        rmse=math.sqrt(sq_sum / count) if count else 0.0,
        valid_count=count,
        dropped_warps=sum(m.dropped_warps for m in parts),
        invalid_pred=sum(m.invalid_pred for m in parts),
    )


def patch_grid() -> list[tuple[int, bool, bool]]:
    """(patch_size, adaptive, padding) cells; adaptivity only where defined."""
    cells = []
    for size in PATCH_SIZES:
        adaptives = (False,) if size == 1 else (False, True)
        for adaptive in adaptives:
            for padding in (False, True):
                cells.append((size, adaptive, padding))
    return cells


def sweep_patches(
    samples: list[Sample],
    rig: VirtualRig,
    matcher,
    base_cfg: PatternConfig,
    seed: int = 0,
    invalid_policy: str = "exclude",
    sizes: tuple[int, ...] | None = None,
) -> SweepReport:
    """One row per (patch size, adaptive, padding) cell of the study grid."""
    factory = _as_factory(matcher)
    cells = [c for c in patch_grid() if sizes is None or c[0] in sizes]
    rows = []
    for size, adaptive, padding in cells:
        cfg = replace(base_cfg, patch_size=size, adaptive=adaptive, left_padding=padding)
        m = _run_cell(samples, rig, cfg, factory, seed, invalid_policy)
        rows.append((size, adaptive, padding, m.mae, m.rmse, m.valid_count, m.dropped_warps))
    meta = (
        ("axis", "patch"),
        ("seed", str(seed)),
        ("samples", " ".join(s.id for s in samples)),
        ("mode", base_cfg.mode),
        ("baseline_b", f"{rig.baseline_b:.6g}"),
    )
    return SweepReport(
        axes=("patch_size", "adaptive", "padding"),
        metrics=("mae", "rmse", "valid_count", "dropped_warps"),
        rows=tuple(rows),
        meta=meta,
    )


def sweep_baseline(
    samples: list[Sample],
    camera: CameraModel,
    baselines: list[float],
    matcher,
    base_cfg: PatternConfig,
    seed: int = 0,
    invalid_policy: str = "exclude",
) -> SweepReport:
    """One row per virtual baseline, with relative accuracy min_MAE / MAE(b)."""
    factory = _as_factory(matcher)
    cell_metrics = []
    for b in baselines:
        rig = VirtualRig(camera=camera, baseline_b=float(b))
        cell_metrics.append(_run_cell(samples, rig, base_cfg, factory, seed, invalid_policy))
    min_mae = min(m.mae for m in cell_metrics) if cell_metrics else 0.0
    rows = []
    for b, m in zip(baselines, cell_metrics):
        rel = 1.0 if m.mae == min_mae else min_mae / m.mae
        rows.append((float(b), m.mae, m.rmse, rel, m.valid_count, m.dropped_warps))
    meta = (
        ("axis", "baseline"),
        ("seed", str(seed)),
        ("samples", " ".join(s.id for s in samples)),
        ("mode", base_cfg.mode),
        ("patch_size", str(base_cfg.patch_size)),
        ("adaptive", "1" if base_cfg.adaptive else "0"),
        ("padding", "1" if base_cfg.left_padding else "0"),
    )
    return SweepReport(
        axes=("baseline_b",),
        metrics=("mae", "rmse", "relative_accuracy", "valid_count", "dropped_warps"),
        rows=tuple(rows),
        meta=meta,
    )
