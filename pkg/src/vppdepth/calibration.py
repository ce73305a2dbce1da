"""Plain-text calibration file for the depth-sensor-to-camera rig.

Format: one ``key value...`` entry per line, ``#`` starts a comment.
Required keys: fx, fy, cx, cy, width, height, baseline_b, and extrinsics
(12 numbers, the 3x4 [R|T] matrix row-major). Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError
from .geometry import CameraModel, RigidTransform, VirtualRig

_SCALAR_KEYS = ("fx", "fy", "cx", "cy", "width", "height", "baseline_b")
_ALL_KEYS = _SCALAR_KEYS + ("extrinsics",)


def load_calibration(path: str | Path) -> tuple[VirtualRig, RigidTransform]:
    path = Path(path)
    entries: dict[str, list[float]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, values = parts[0], parts[1:]
        if key not in _ALL_KEYS:
            raise FormatError(f"{path}:{lineno}: unknown calibration key {key!r}")
        if key in entries:
            raise FormatError(f"{path}:{lineno}: duplicate calibration key {key!r}")
        try:
            entries[key] = [float(v) for v in values]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric value for {key!r}") from exc

    missing = [k for k in _ALL_KEYS if k not in entries]
    if missing:
        raise FormatError(f"{path}: missing calibration keys: {', '.join(missing)}")
    for key in _SCALAR_KEYS:
        if len(entries[key]) != 1:
            raise FormatError(f"{path}: key {key!r} expects exactly one value")
    if len(entries["extrinsics"]) != 12:
        raise FormatError(f"{path}: extrinsics expects 12 values, got {len(entries['extrinsics'])}")

    cam = CameraModel(
        fx=entries["fx"][0],
        fy=entries["fy"][0],
        cx=entries["cx"][0],
        cy=entries["cy"][0],
        width=int(entries["width"][0]),
        height=int(entries["height"][0]),
    )
    rig = VirtualRig(camera=cam, baseline_b=entries["baseline_b"][0])
    rt = np.array(entries["extrinsics"], dtype=np.float64).reshape(3, 4)
    xform = RigidTransform(rotation=rt[:, :3], translation=rt[:, 3])
    return rig, xform


def save_calibration(path: str | Path, rig: VirtualRig, xform: RigidTransform | None = None) -> None:
    if xform is None:
        xform = RigidTransform.identity()
    cam = rig.camera
    rt = np.hstack([xform.rotation, xform.translation.reshape(3, 1)])
    lines = [
        f"fx {float(cam.fx)!r}",
        f"fy {float(cam.fy)!r}",
        f"cx {float(cam.cx)!r}",
        f"cy {float(cam.cy)!r}",
        f"width {int(cam.width)}",
        f"height {int(cam.height)}",
        f"baseline_b {float(rig.baseline_b)!r}",
        "extrinsics " + " ".join(repr(float(v)) for v in rt.reshape(-1)),
    ]
    Path(path).write_text("\n".join(lines) + "\n")
