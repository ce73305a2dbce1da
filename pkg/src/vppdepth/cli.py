"""Command-line interface.

Commands: project, match, complete, eval, sweep, synth. Exit codes:
0 success, 2 usage/configuration, 3 I/O or format, 4 matcher failure.
Flag values override config-file entries, which override built-in
defaults; the effective configuration is echoed into every output
directory as run_config.json. VPP_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import load_calibration, save_calibration
from .datasets import (Sample, SampleRecord, kitti_crop, lidar_min_filter, load_depth_raster,
                       load_manifest, load_sample, subsample_points)
from .errors import ConfigurationError, FormatError, MatcherError, PipelineError, VppError
from .evaluate import evaluate
from .external import ExternalMatcher, MatcherBoundary, read_sidecar, write_sidecar
from .fileio import read_image_png, write_depth_png16, write_image_png, write_pfm
from .geometry import VirtualRig, depth_to_disparity
from .pattern import PatternConfig, PatternedStereoPair, build_patterned_pair
from .pipeline import complete as run_complete
from .sgm import MatcherConfig, SgmMatcher
from .sweep import sweep_baseline, sweep_patches
from .synthetic import DESK_BASELINE, default_camera, make_scene, render_synthetic, sample_seed

DEFAULTS = {
    "mode": "random",
    "patch_size": 1,
    "adaptive": False,
    "left_padding": False,
    "sigma_xy": 1.0,
    "sigma_i": 1.0,
    "t_adpt": 0.001,
    "seed": 0,
    "matcher": "sgm",
    "matcher_cmd": None,
    "max_disparity": None,
    "census_window": 5,
    "p1": None,
    "p2": None,
    "num_paths": 8,
    "lr_check": False,
    "lr_threshold": 1.0,
    "subpixel": True,
    "invalid_policy": "exclude",
    "penalty": None,
}

_ARG_TO_KEY = {
    "mode": "mode",
    "patch": "patch_size",
    "adaptive": "adaptive",
    "pad": "left_padding",
    "sigma_xy": "sigma_xy",
    "sigma_i": "sigma_i",
    "t_adpt": "t_adpt",
    "seed": "seed",
    "matcher": "matcher",
    "matcher_cmd": "matcher_cmd",
    "max_disparity": "max_disparity",
    "census_window": "census_window",
    "p1": "p1",
    "p2": "p2",
    "paths": "num_paths",
    "lr_check": "lr_check",
    "lr_threshold": "lr_threshold",
    "subpixel": "subpixel",
    "invalid_policy": "invalid_policy",
    "penalty": "penalty",
}


def _add_pattern_args(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("rgb", "random"), default=None)
    p.add_argument("--patch", type=int, default=None, help="odd patch size (1 = point-wise)")
    p.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--pad", action=argparse.BooleanOptionalAction, default=None,
                   help="left-pad the pair so no warp leaves the image")
    p.add_argument("--sigma-xy", dest="sigma_xy", type=float, default=None)
    p.add_argument("--sigma-i", dest="sigma_i", type=float, default=None)
    p.add_argument("--t-adpt", dest="t_adpt", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)


def _add_matcher_args(p: argparse.ArgumentParser):
    p.add_argument("--matcher", choices=("sgm", "external", "echo"), default=None)
    p.add_argument("--matcher-cmd", dest="matcher_cmd", default=None,
                   help="external matcher command; gets REF TGT SIDECAR OUT appended")
    p.add_argument("--max-disparity", dest="max_disparity", type=int, default=None)
    p.add_argument("--census-window", dest="census_window", type=int, default=None)
    p.add_argument("--p1", type=int, default=None)
    p.add_argument("--p2", type=int, default=None)
    p.add_argument("--paths", type=int, default=None, choices=(4, 8))
    p.add_argument("--lr-check", dest="lr_check", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--lr-threshold", dest="lr_threshold", type=float, default=None)
    p.add_argument("--subpixel", action=argparse.BooleanOptionalAction, default=None)


def _add_eval_args(p: argparse.ArgumentParser):
    p.add_argument("--invalid-policy", dest="invalid_policy", choices=("exclude", "penalize"),
                   default=None)
    p.add_argument("--penalty", type=float, default=None)


def _add_preproc_args(p: argparse.ArgumentParser):
    p.add_argument("--kitti-crop", action="store_true", help="top-crop 100 px, center-crop 1216x240")
    p.add_argument("--min-filter-tau", type=float, default=None,
                   help="apply the 7x7 local-minimum LiDAR filter with this threshold (m)")
    p.add_argument("--points", type=int, default=None, help="subsample the sparse input to N points")


def effective_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{config_path}: invalid JSON: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"{config_path}: unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for arg_name, key in _ARG_TO_KEY.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            cfg[key] = value
    return cfg


def pattern_config(cfg: dict) -> PatternConfig:
    return PatternConfig(
        mode=cfg["mode"],
        patch_size=cfg["patch_size"],
        adaptive=cfg["adaptive"],
        sigma_xy=cfg["sigma_xy"],
        sigma_i=cfg["sigma_i"],
        t_adpt=cfg["t_adpt"],
        left_padding=cfg["left_padding"],
        rng_seed=cfg["seed"],
    )


def matcher_config(cfg: dict) -> MatcherConfig:
    return MatcherConfig(
        max_disparity=cfg["max_disparity"],
        census_window=cfg["census_window"],
        p1=cfg["p1"],
        p2=cfg["p2"],
        num_paths=cfg["num_paths"],
        lr_check=cfg["lr_check"],
        lr_threshold=cfg["lr_threshold"],
        subpixel=cfg["subpixel"],
    )


def _check_matcher_choice(cfg: dict):
    if cfg["matcher"] == "external" and not cfg["matcher_cmd"]:
        raise ConfigurationError("--matcher external requires --matcher-cmd")
    if cfg["matcher"] != "external" and cfg["matcher_cmd"]:
        raise ConfigurationError("--matcher-cmd only applies to --matcher external")


def _matcher_for(cfg: dict, rig: VirtualRig, record: SampleRecord | None):
    if cfg["matcher"] == "sgm":
        return SgmMatcher(matcher_config(cfg))
    if cfg["matcher"] == "external":
        boundary = MatcherBoundary(command=tuple(shlex.split(cfg["matcher_cmd"])))
        return ExternalMatcher(boundary, rig.baseline_b, rig.camera.fx, cfg["seed"])
    # echo: answer with the sample's own ground-truth depth through the file contract
    if record is None:
        raise ConfigurationError("echo matcher needs manifest samples with ground truth")
    boundary = MatcherBoundary(command=(
        sys.executable, "-m", "vppdepth.echo_matcher", "--kind", "depth", str(record.gt_path),
    ))
    return ExternalMatcher(boundary, rig.baseline_b, rig.camera.fx, cfg["seed"])


def _prepare_outdir(path: str, force: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"output directory {out} is not empty (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_config(out: Path, command: str, cfg: dict, extra: dict | None = None) -> None:
    payload = {"command": command, "version": __version__, **cfg}
    if extra:
        payload.update(extra)
    (out / "run_config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _preprocess(sample: Sample, args, seed: int) -> Sample:
    if getattr(args, "kitti_crop", False):
        sample = kitti_crop(sample)
    tau = getattr(args, "min_filter_tau", None)
    if tau is not None:
        sample = Sample(sample.rgb, lidar_min_filter(sample.sparse, tau=tau), sample.gt, sample.id)
    points = getattr(args, "points", None)
    if points is not None:
        sparse = subsample_points(sample.sparse, n=points,
                                  seed=sample_seed(seed, sample.id + ":points"))
        sample = Sample(sample.rgb, sparse, sample.gt, sample.id)
    return sample


def _load_samples(args, seed: int = 0) -> tuple[list[SampleRecord], list[Sample]]:
    records = load_manifest(args.manifest)
    if not records:
        raise ConfigurationError(f"manifest {args.manifest} lists no samples")
    if getattr(args, "limit", None):
        records = records[: args.limit]
    samples = [_preprocess(load_sample(r), args, seed) for r in records]
    return records, samples


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = _prepare_outdir(args.out, args.force)
    cam = default_camera(args.width, args.height, args.focal)
    rig = VirtualRig(camera=cam, baseline_b=args.baseline)
    save_calibration(out / "calibration.txt", rig)
    lines = []
    for i in range(args.scenes):
        sid = f"scene{i:03d}"
        scene = make_scene(sample_seed(args.seed, sid), args.width, args.height)
        sample = render_synthetic(scene, cam, points=args.points,
                                  point_seed=sample_seed(args.seed, sid + ":points"),
                                  sample_id=sid)
        write_image_png(out / f"{sid}_rgb.png", sample.rgb)
        write_depth_png16(out / f"{sid}_sparse.png", sample.sparse)
        write_pfm(out / f"{sid}_gt.pfm", sample.gt.depth.astype(np.float32))
        lines.append(f"{sid} {sid}_rgb.png {sid}_sparse.png {sid}_gt.pfm")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    _write_run_config(out, "synth", {}, {
        "scenes": args.scenes, "seed": args.seed, "points": args.points,
        "width": args.width, "height": args.height, "focal": args.focal,
        "baseline_b": args.baseline,
    })
    print(f"wrote {args.scenes} scenes to {out}")
    return 0


def cmd_project(args) -> int:
    cfg = effective_config(args)
    out = _prepare_outdir(args.out, args.force)
    rig, _ = load_calibration(args.calib)
    records, samples = _load_samples(args, cfg["seed"])
    if args.id is not None:
        matches = [s for s in samples if s.id == args.id]
        if not matches:
            raise ConfigurationError(f"sample id {args.id!r} not in manifest")
        samples = matches
    else:
        samples = samples[args.index : args.index + 1]
        if not samples:
            raise ConfigurationError(f"sample index {args.index} out of range")
    sample = samples[0]
    pcfg = pattern_config(cfg)
    sparse_d = depth_to_disparity(sample.sparse, rig)
    pair, diag = build_patterned_pair(sample.rgb, sparse_d, pcfg)
    write_image_png(out / f"{sample.id}_reference.png", pair.reference)
    write_image_png(out / f"{sample.id}_target.png", pair.target)
    write_sidecar(out / f"{sample.id}_pair.txt", pair.pad_left, rig.baseline_b,
                  rig.camera.fx, pcfg.rng_seed)
    _write_run_config(out, "project", cfg, {"sample": sample.id, "pad_left": pair.pad_left,
                                            "dropped_warps": diag.dropped_warps})
    print(f"patterned pair for {sample.id}: pad_left={pair.pad_left}, "
          f"dropped_warps={diag.dropped_warps}")
    return 0


def cmd_match(args) -> int:
    cfg = effective_config(args)
    _check_matcher_choice(cfg)
    if cfg["matcher"] == "echo":
        raise ConfigurationError("echo matcher is only available through 'complete'")
    ref = read_image_png(args.ref)
    tgt = read_image_png(args.tgt)
    meta = read_sidecar(args.sidecar)
    pair = PatternedStereoPair(reference=ref, target=tgt, pad_left=meta["pad_left"])
    if cfg["matcher"] == "sgm":
        if cfg["max_disparity"] is None:
            raise ConfigurationError("--max-disparity is required for the built-in matcher here")
        result = SgmMatcher(matcher_config(cfg)).match(pair, cfg["max_disparity"])
    else:
        boundary = MatcherBoundary(command=tuple(shlex.split(cfg["matcher_cmd"])))
        result = ExternalMatcher(boundary, meta["baseline_b"], meta["f"], meta["seed"]).match(pair)
    write_pfm(args.out, result.disp.astype(np.float32))
    print(f"disparity written to {args.out}")
    return 0


def cmd_complete(args) -> int:
    cfg = effective_config(args)
    _check_matcher_choice(cfg)
    out = _prepare_outdir(args.out, args.force)
    rig, _ = load_calibration(args.calib)
    records, samples = _load_samples(args, cfg["seed"])
    _write_run_config(out, "complete", cfg, {"manifest": str(args.manifest),
                                             "calibration": str(args.calib)})
    pcfg = pattern_config(cfg)
    totals = {"abs": 0.0, "sq": 0.0, "count": 0, "dropped": 0, "invalid": 0}
    metrics_path = out / "metrics.jsonl"
    status = 0
    with open(metrics_path, "w") as sink:
        for record, sample in zip(records, samples):
            run_cfg = replace(pcfg, rng_seed=sample_seed(cfg["seed"], sample.id))
            matcher = _matcher_for(cfg, rig, record)
            try:
                result = run_complete(sample, rig, run_cfg, matcher,
                                      invalid_policy=cfg["invalid_policy"],
                                      penalty=cfg["penalty"])
            except (PipelineError, MatcherError) as exc:
                sink.write(json.dumps({"id": sample.id, "error": str(exc)}) + "\n")
                sink.flush()
                print(f"sample {sample.id} failed: {exc}", file=sys.stderr)
                status = 4 if _is_matcher_failure(exc) else 3
                break
            write_pfm(out / f"{sample.id}_depth.pfm", result.depth.depth.astype(np.float32))
            if args.save_disparity:
                write_pfm(out / f"{sample.id}_disp.pfm", result.disparity.disp.astype(np.float32))
            m = result.metrics
            sink.write(json.dumps({"id": sample.id, **m.as_dict(), "pad_left": result.pad_left}) + "\n")
            sink.flush()
            totals["abs"] += m.mae * m.valid_count
            totals["sq"] += m.rmse**2 * m.valid_count
            totals["count"] += m.valid_count
            totals["dropped"] += m.dropped_warps
            totals["invalid"] += m.invalid_pred
        if status == 0:
            count = totals["count"]
            summary = {
                "id": "__summary__",
                "samples": len(samples),
                "mae": totals["abs"] / count if count else 0.0,
                "rmse": (totals["sq"] / count) ** 0.5 if count else 0.0,
                "valid_count": count,
                "dropped_warps": totals["dropped"],
                "invalid_pred": totals["invalid"],
            }
            sink.write(json.dumps(summary) + "\n")
    if status == 0:
        print(f"completed {len(samples)} samples; metrics in {metrics_path}")
    return status


def _is_matcher_failure(exc: Exception) -> bool:
    if isinstance(exc, MatcherError):
        return True
    if isinstance(exc, PipelineError):
        return exc.stage == "match"
    return False


def cmd_eval(args) -> int:
    pred = load_depth_raster(args.pred)
    gt = load_depth_raster(args.gt)
    cfg = effective_config(args)
    metrics = evaluate(pred, gt, invalid_policy=cfg["invalid_policy"], penalty=cfg["penalty"])
    print(json.dumps(metrics.as_dict(), sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = effective_config(args)
    _check_matcher_choice(cfg)
    out = _prepare_outdir(args.out, args.force)
    rig, _ = load_calibration(args.calib)
    records, samples = _load_samples(args, cfg["seed"])
    pcfg = pattern_config(cfg)
    by_id = {r.id: r for r in records}

    if cfg["matcher"] == "sgm":
        matcher = _matcher_for(cfg, rig, None)
    else:
        # File-protocol matchers get a sidecar with the row's actual rig.
        def matcher(sample: Sample, row_rig: VirtualRig):
            record = by_id[sample.id] if cfg["matcher"] == "echo" else None
            return _matcher_for(cfg, row_rig, record)

    if args.axis == "patch":
        sizes = tuple(int(v) for v in args.values.split(",")) if args.values else None
        report = sweep_patches(samples, rig, matcher, pcfg, seed=cfg["seed"],
                               invalid_policy=cfg["invalid_policy"], sizes=sizes)
    else:
        if not args.values:
            raise ConfigurationError("baseline sweep needs --values, e.g. 0.05,0.1,0.15")
        baselines = [float(v) for v in args.values.split(",")]
        report = sweep_baseline(samples, rig.camera, baselines, matcher, pcfg,
                                seed=cfg["seed"], invalid_policy=cfg["invalid_policy"])
    csv_path = out / "sweep.csv"
    report.save(csv_path)
    if not args.no_plot:
        from . import plots

        png_path = out / "sweep.png"
        if args.axis == "patch":
            plots.plot_patch_sweep(report, png_path)
        else:
            plots.plot_baseline_sweep(report, png_path)
    _write_run_config(out, "sweep", cfg, {"axis": args.axis, "values": args.values,
                                          "manifest": str(args.manifest)})
    print(f"sweep written to {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vppdepth",
        description="Depth completion through virtually patterned stereo pairs.",
    )
    parser.add_argument("--version", action="version", version=f"vppdepth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic desk-scale dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--focal", type=float, default=300.0)
    p.add_argument("--baseline", type=float, default=DESK_BASELINE)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("project", help="emit the patterned stereo pair for one sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--limit", type=int, default=None)
    _add_pattern_args(p)
    _add_preproc_args(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("match", help="run a matcher on an existing patterned pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_matcher_args(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("complete", help="densify every manifest sample and score it")
    p.add_argument("--manifest", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--save-disparity", action="store_true")
    _add_pattern_args(p)
    _add_matcher_args(p)
    _add_eval_args(p)
    _add_preproc_args(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("eval", help="score a predicted depth raster against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--config", default=None)
    _add_eval_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="hyper-parameter sweep with CSV + figure output")
    p.add_argument("--manifest", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--axis", choices=("patch", "baseline"), required=True)
    p.add_argument("--values", default=None,
                   help="comma list: baselines in meters, or patch sizes to restrict to")
    p.add_argument("--force", action="store_true")
    p.add_argument("--config", default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--no-plot", action="store_true")
    _add_pattern_args(p)
    _add_matcher_args(p)
    _add_eval_args(p)
    _add_preproc_args(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MatcherError as exc:
        print(f"matcher failure: {exc}", file=sys.stderr)
        return 4
    except PipelineError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 4 if exc.stage == "match" else 3
    except VppError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, FileExistsError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
