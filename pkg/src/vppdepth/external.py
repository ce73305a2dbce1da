"""Out-of-process matcher boundary.

Exchange contract: the command is invoked as

    <command...> <reference.png> <target.png> <sidecar.txt> <output.pfm>

with the pair stored as 8-bit PNGs, a sidecar text file carrying pad_left,
baseline_b, f, and seed, and the result expected as a grayscale
little-endian float PFM of the padded pair's dimensions. A nonzero exit
status signals failure. Non-finite or non-positive output entries are
masked invalid.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, MatcherError
from .fileio import read_pfm, write_image_png
from .geometry import DisparityMap
from .pattern import PatternedStereoPair

SIDECAR_KEYS = ("pad_left", "baseline_b", "f", "seed")


def write_sidecar(path: str | Path, pad_left: int, baseline_b: float, f: float, seed: int) -> None:
    Path(path).write_text(
        f"pad_left {int(pad_left)}\nbaseline_b {baseline_b!r}\nf {f!r}\nseed {int(seed)}\n"
    )


def read_sidecar(path: str | Path) -> dict:
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        values[key] = value.strip()
    missing = [k for k in SIDECAR_KEYS if k not in values]
    if missing:
        raise FormatError(f"{path}: sidecar missing keys: {', '.join(missing)}")
    return {
        "pad_left": int(values["pad_left"]),
        "baseline_b": float(values["baseline_b"]),
        "f": float(values["f"]),
        "seed": int(values["seed"]),
    }


@dataclass(frozen=True)
class MatcherBoundary:
    """Descriptor of an external matcher executable."""

    command: tuple[str, ...]
    workdir: str | None = None  # exchange-file directory; temp dir if None
    timeout: float | None = None


def run_external(
    boundary: MatcherBoundary,
    pair: PatternedStereoPair,
    baseline_b: float,
    focal: float,
    seed: int,
) -> DisparityMap:
    """Write the exchange files, run the matcher, read back its disparity."""
    with tempfile.TemporaryDirectory(prefix="vpp_matcher_") as tmp:
        root = Path(boundary.workdir) if boundary.workdir else Path(tmp)
        root.mkdir(parents=True, exist_ok=True)
        ref_path = root / "reference.png"
        tgt_path = root / "target.png"
        sidecar_path = root / "pair.txt"
        out_path = root / "disparity.pfm"
        write_image_png(ref_path, pair.reference)
        write_image_png(tgt_path, pair.target)
        write_sidecar(sidecar_path, pair.pad_left, baseline_b, focal, seed)
        out_path.unlink(missing_ok=True)

        cmd = list(boundary.command) + [str(ref_path), str(tgt_path), str(sidecar_path), str(out_path)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=boundary.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise MatcherError(f"external matcher failed to run: {exc}") from exc
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-5:]
            raise MatcherError(
                f"external matcher exited with {proc.returncode}: " + " | ".join(tail)
            )
        if not out_path.exists():
            raise MatcherError(f"external matcher produced no output file {out_path}")
        try:
            data = read_pfm(out_path)
        except FormatError as exc:
            raise MatcherError(f"ill-formed matcher output: {exc}") from exc

    if data.ndim != 2:
        raise MatcherError("matcher output must be a grayscale PFM")
    if data.shape != (pair.height, pair.width):
        raise MatcherError(
            f"matcher output {data.shape[::-1]} does not match pair {(pair.width, pair.height)}"
        )
    disp = data.astype(np.float64)
    valid = np.isfinite(disp) & (disp > 0.0)
    disp = np.where(valid, disp, 0.0)
    return DisparityMap(disp, valid)


class ExternalMatcher:
    """Pluggable matcher running through the file exchange contract."""

    def __init__(self, boundary: MatcherBoundary, baseline_b: float, focal: float, seed: int = 0):
        self.boundary = boundary
        self.baseline_b = baseline_b
        self.focal = focal
        self.seed = seed

    def match(self, pair: PatternedStereoPair, max_disparity: int | None = None) -> DisparityMap:
        return run_external(self.boundary, pair, self.baseline_b, self.focal, self.seed)
