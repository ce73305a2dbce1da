import sys

import numpy as np
import pytest

from vppdepth.datasets import Sample
from vppdepth.external import ExternalMatcher, MatcherBoundary
from vppdepth.fileio import write_pfm
from vppdepth.geometry import VirtualRig, depth_to_disparity
from vppdepth.pattern import PatternConfig
from vppdepth.sgm import SgmMatcher
from vppdepth.sweep import patch_grid, sweep_baseline, sweep_patches
from vppdepth.synthetic import default_camera, make_scene, render_synthetic, snap_to_disparity_grid


@pytest.fixture(scope="module")
def tiny_samples():
    cam = default_camera(48, 36)
    rig = VirtualRig(camera=cam, baseline_b=0.15)
    samples = []
    for seed in range(2):
        scene = make_scene(seed + 20, 48, 36)
        s = render_synthetic(scene, cam, points=80, point_seed=seed, sample_id=f"t{seed}")
        samples.append(Sample(s.rgb, snap_to_disparity_grid(s.sparse, rig),
                              snap_to_disparity_grid(s.gt, rig), s.id))
    return cam, rig, samples


def echo_factory(samples, rig, tmp_path):
    """Disparity-echo factory; only valid while the rig stays fixed."""
    paths = {}
    for s in samples:
        p = tmp_path / f"{s.id}_gtdisp.pfm"
        write_pfm(p, depth_to_disparity(s.gt, rig).disp.astype(np.float32))
        paths[s.id] = p

    def factory(sample, row_rig):
        boundary = MatcherBoundary(
            command=(sys.executable, "-m", "vppdepth.echo_matcher", str(paths[sample.id])))
        return ExternalMatcher(boundary, row_rig.baseline_b, row_rig.camera.fx)

    return factory


def test_patch_grid_is_18_rows():
    grid = patch_grid()
    assert len(grid) == 18
    assert grid[0] == (1, False, False)
    assert grid[1] == (1, False, True)
    assert (3, True, True) in grid and (9, True, False) in grid


def test_single_cell_grid(tiny_samples):
    cam, rig, samples = tiny_samples
    report = sweep_patches(samples, rig, SgmMatcher(), PatternConfig(), sizes=(1,))
    assert len(report.rows) == 2  # 1x1 has no adaptive variant


def test_full_grid_structure_with_echo(tiny_samples, tmp_path):
    cam, rig, samples = tiny_samples
    factory = echo_factory(samples[:1], rig, tmp_path)
    report = sweep_patches(samples[:1], rig, factory, PatternConfig())
    assert len(report.rows) == 18
    assert report.axes == ("patch_size", "adaptive", "padding")
    # Echo closure holds for every cell.
    for row in report.rows:
        assert row[3] == 0.0 and row[4] == 0.0


def test_rerun_same_seed_identical_csv(tiny_samples):
    cam, rig, samples = tiny_samples
    a = sweep_patches(samples, rig, SgmMatcher(), PatternConfig(), seed=3, sizes=(1, 3)).to_csv()
    b = sweep_patches(samples, rig, SgmMatcher(), PatternConfig(), seed=3, sizes=(1, 3)).to_csv()
    assert a == b


def test_baseline_sweep_relative_accuracy(tiny_samples):
    cam, rig, samples = tiny_samples
    report = sweep_baseline(samples, cam, [0.05, 0.1, 0.15], SgmMatcher(),
                            PatternConfig(mode="random", patch_size=3, adaptive=True,
                                          left_padding=True))
    assert len(report.rows) == 3
    rel = report.column("relative_accuracy")
    mae = report.column("mae")
    assert max(rel) == 1.0
    assert rel[mae.index(min(mae))] == 1.0
    assert all(0.0 < r <= 1.0 for r in rel)


def test_single_baseline_relative_accuracy_is_one(tiny_samples):
    cam, rig, samples = tiny_samples
    report = sweep_baseline(samples, cam, [0.1], SgmMatcher(), PatternConfig())
    assert report.rows[0][3] == 1.0


def test_csv_formatting(tiny_samples):
    cam, rig, samples = tiny_samples
    report = sweep_patches(samples, rig, SgmMatcher(), PatternConfig(), sizes=(1,))
    csv = report.to_csv()
    lines = csv.strip().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    assert any("seed=" in l for l in meta)
    header = next(l for l in lines if not l.startswith("#"))
    assert header == "patch_size,adaptive,padding,mae,rmse,valid_count,dropped_warps"
    data = [l for l in lines if not l.startswith("#")][1:]
    assert len(data) == 2
    for line in data:
        cells = line.split(",")
        # Floats carry at most 6 significant digits.
        for cell in cells[3:5]:
            mantissa = cell.replace("-", "").replace(".", "").lstrip("0")
            mantissa = mantissa.split("e")[0]
            assert len(mantissa) <= 6


def test_rmse_at_least_mae_on_every_row(tiny_samples):
    cam, rig, samples = tiny_samples
    report = sweep_patches(samples, rig, SgmMatcher(), PatternConfig(), sizes=(1, 3))
    for row in report.rows:
        assert row[4] >= row[3]


def test_baseline_sweep_passes_row_rig_to_file_matchers(tiny_samples, tmp_path):
    # Depth-mode echo derives disparity from the sidecar geometry, so a
    # stale baseline in the exchange files would blow the error up by the
    # baseline ratio; every row must stay at the storage-precision floor.
    cam, rig, samples = tiny_samples
    gt_paths = {}
    for s in samples:
        p = tmp_path / f"{s.id}_gt.pfm"
        write_pfm(p, s.gt.depth.astype(np.float32))
        gt_paths[s.id] = p

    def factory(sample, row_rig):
        boundary = MatcherBoundary(command=(
            sys.executable, "-m", "vppdepth.echo_matcher", "--kind", "depth",
            str(gt_paths[sample.id])))
        return ExternalMatcher(boundary, row_rig.baseline_b, row_rig.camera.fx)

    report = sweep_baseline(samples, cam, [0.1, 0.2], factory, PatternConfig())
    for row in report.rows:
        assert row[1] <= 1e-5  # mae


def test_vpp_threads_does_not_change_results(tiny_samples, monkeypatch):
    cam, rig, samples = tiny_samples
    cfg = PatternConfig(mode="random", patch_size=3, adaptive=True, left_padding=True)
    monkeypatch.delenv("VPP_THREADS", raising=False)
    serial = sweep_patches(samples, rig, SgmMatcher(), cfg, seed=1, sizes=(3,)).to_csv()
    monkeypatch.setenv("VPP_THREADS", "4")
    threaded = sweep_patches(samples, rig, SgmMatcher(), cfg, seed=1, sizes=(3,)).to_csv()
    assert serial == threaded
