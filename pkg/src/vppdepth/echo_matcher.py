"""Ground-truth echo matcher honoring the external exchange contract.

Usage:
    python -m vppdepth.echo_matcher [--kind disparity|depth] GT REF TGT SIDECAR OUT

Ignores the image pair and answers with the ground truth: a disparity PFM
is returned as-is, a depth raster (PFM or 16-bit PNG) is converted using
the baseline and focal length recorded in the sidecar. The result is
left-padded with zeros to the padded pair width and written as PFM.
Useful as a pipeline closure oracle and as a reference implementation of
the exchange contract.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .external import read_sidecar
from .fileio import read_depth_png16, read_pfm, write_pfm


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vppdepth.echo_matcher", description=__doc__)
    parser.add_argument("--kind", choices=("disparity", "depth"), default="disparity")
    parser.add_argument("gt")
    parser.add_argument("reference")
    parser.add_argument("target")
    parser.add_argument("sidecar")
    parser.add_argument("output")
    args = parser.parse_args(argv)

    meta = read_sidecar(args.sidecar)
    if args.gt.endswith(".png"):
        gt = read_depth_png16(args.gt)
        raster = gt.depth
        valid = gt.valid
    else:
        raster = read_pfm(args.gt).astype(np.float64)
        valid = np.isfinite(raster) & (raster > 0)

    if args.kind == "depth":
        disp = np.zeros_like(raster)
        disp[valid] = meta["baseline_b"] * meta["f"] / raster[valid]
    else:
        disp = np.where(valid, raster, 0.0)

    padded = np.pad(disp, ((0, 0), (meta["pad_left"], 0)))
    write_pfm(args.output, padded.astype(np.float32))
    return 0


if __name__ == "__main__":
    sys.exit(main())
