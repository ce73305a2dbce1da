"""Synthesis of the fictitious patterned stereo pair.

Each valid disparity point stamps a pattern (its own patch of RGB content,
or freshly drawn random colors) into the reference image and, warped by its
disparity, into the target image. Overlaps on the reference side are
resolved through a score buffer: the consistency weight when adaptive
patches are on, the disparity (foreground wins) otherwise. The winning set
is then committed to both images, with a disparity z-buffer arbitrating
target pixels and occluded reference pixels adopting the occluder's pattern
so that corresponding pixels stay identical. Unpatterned pixels are black.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, PipelineError
from .geometry import DisparityMap

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_MODES = ("rgb", "random")


@dataclass(frozen=True)
class PatternConfig:
    mode: str = "random"
    patch_size: int = 1
    adaptive: bool = False
    sigma_xy: float = 1.0
    sigma_i: float = 1.0
    t_adpt: float = 0.001
    left_padding: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigurationError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ConfigurationError(f"patch_size must be odd and >= 1, got {self.patch_size}")
        if not (self.sigma_xy > 0 and self.sigma_i > 0):
            raise ConfigurationError("sigma_xy and sigma_i must be positive")
        if not (0.0 < self.t_adpt < 1.0):
            raise ConfigurationError(f"t_adpt must lie in (0, 1), got {self.t_adpt}")


@dataclass(frozen=True)
class PatternedStereoPair:
    reference: np.ndarray  # (H, W + pad_left, 3) in [0, 1]
    target: np.ndarray  # same shape
    pad_left: int

    def __post_init__(self):
        if self.reference.shape != self.target.shape:
            raise ConfigurationError("reference and target must share dimensions")
        if self.pad_left < 0:
            raise ConfigurationError("pad_left must be >= 0")

    @property
    def width(self) -> int:
        return self.reference.shape[1]

    @property
    def height(self) -> int:
        return self.reference.shape[0]


@dataclass
class PatternDiagnostics:
    """Bookkeeping emitted alongside a patterned pair."""

    pad_left: int
    dropped_warps: int
    patterned_count: int
    # Winning disparity per reference pixel (unpadded coords); 0 where unpatterned.
    ref_disparity: np.ndarray
    ref_patterned: np.ndarray  # bool mask, unpadded coords


class ScoreBuffer:
    """Image-sized max-score buffer resolving overlapping patch writes.

    Scores start at zero; an insert claims a pixel only with a strictly
    higher score, so earlier writers win ties and stored scores never
    decrease. The owner id of the winning insert is kept per pixel.
    """

    def __init__(self, height: int, width: int):
        self.height = height
        self.width = width
        self.score = np.zeros((height, width), dtype=np.float64)
        self.owner = np.full((height, width), -1, dtype=np.int64)

    def insert_many(self, rows: np.ndarray, cols: np.ndarray, scores: np.ndarray, owner_ids: np.ndarray) -> None:
        """Bulk insert; within the call, ties go to the lowest owner id."""
        if rows.size == 0:
            return
        pix = rows.astype(np.int64) * self.width + cols.astype(np.int64)
        order = np.lexsort((owner_ids, -scores, pix))
        pix = pix[order]
        first = np.ones(pix.shape[0], dtype=bool)
        first[1:] = pix[1:] != pix[:-1]
        pix = pix[first]
        best_score = scores[order][first]
        best_owner = owner_ids[order][first]
        take = best_score > self.score.flat[pix]
        self.score.flat[pix[take]] = best_score[take]
        self.owner.flat[pix[take]] = best_owner[take]


def compute_left_padding(d: DisparityMap) -> int:
    """Columns to prepend so every warped point stays inside the target."""
    if d.count == 0:
        return 0
    ys, xs = np.nonzero(d.valid)
    overshoot = (d.disp[ys, xs] - xs).max()
    return max(0, int(math.ceil(overshoot)))


def splat_target(
    target: np.ndarray,
    x_cont: float,
    y: int,
    color: np.ndarray,
    disparity: float,
    zbuf: np.ndarray,
) -> bool:
    """Deposit ``color`` at the two pixels bracketing ``x_cont`` on row ``y``.

    Weights are bilinear (1 - frac, frac); at each touched pixel the largest
    disparity seen so far wins and losers leave no trace. Returns False when
    every weighted tap falls outside the image (the caller counts drops).
    """
    width = target.shape[1]
    t0 = math.floor(x_cont)
    frac = x_cont - t0
    touched = False
    for tcol, w in ((t0, 1.0 - frac), (t0 + 1, frac)):
        if w <= 0.0 or not 0 <= tcol < width:
            continue
        touched = True
        if disparity > zbuf[y, tcol]:
            target[y, tcol] = w * np.asarray(color, dtype=np.float64)
            zbuf[y, tcol] = disparity
    return touched


@dataclass(frozen=True)
class PatchWeights:
    """Consistency weights of a clipped patch; values[r, c] belongs to pixel
    (y0 + r, x0 + c)."""

    x0: int
    y0: int
    values: np.ndarray


def adaptive_weights(image: np.ndarray, x: int, y: int, cfg: PatternConfig) -> PatchWeights:
    """Bilateral-style consistency of each patch pixel with the center.

    W = exp(-[(dx^2 + dy^2) / (2 sigma_xy^2) + dI^2 / (2 sigma_i^2)]) with
    dI the luma difference to the center. Pixels with W > t_adpt are
    eligible for patterning.
    """
    h, w = image.shape[:2]
    r = cfg.patch_size // 2
    x0, x1 = max(0, x - r), min(w - 1, x + r)
    y0, y1 = max(0, y - r), min(h - 1, y + r)
    luma = image[y0 : y1 + 1, x0 : x1 + 1] @ LUMA_WEIGHTS
    center = float(image[y, x] @ LUMA_WEIGHTS)
    dys, dxs = np.meshgrid(np.arange(y0, y1 + 1) - y, np.arange(x0, x1 + 1) - x, indexing="ij")
    spatial = (dxs**2 + dys**2) / (2.0 * cfg.sigma_xy**2)
    intensity = (luma - center) ** 2 / (2.0 * cfg.sigma_i**2)
    return PatchWeights(x0=x0, y0=y0, values=np.exp(-(spatial + intensity)))


def _check_image(image: np.ndarray, d: DisparityMap) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ConfigurationError(f"expected HxWx3 image, got shape {image.shape}")
    if image.shape[:2] != d.disp.shape:
        raise ConfigurationError(
            f"image {image.shape[:2]} and disparity map {d.disp.shape} dimensions differ"
        )
    if image.size and (image.min() < 0.0 or image.max() > 1.0):
        raise ConfigurationError("image samples must lie in [0, 1]")
    return image


def build_patterned_pair(
    image: np.ndarray, d: DisparityMap, cfg: PatternConfig
) -> tuple[PatternedStereoPair, PatternDiagnostics]:
    """Full pattern synthesis; returns the pair plus diagnostics."""
    image = _check_image(image, d)
    h, w = image.shape[:2]

    ys, xs = np.nonzero(d.valid)  # row-major point order
    n = ys.shape[0]
    if n == 0:
        empty = np.zeros((h, w, 3), dtype=np.float64)
        diag = PatternDiagnostics(0, 0, 0, np.zeros((h, w)), np.zeros((h, w), dtype=bool))
        return PatternedStereoPair(empty, empty.copy(), 0), diag

    dvals = d.disp[ys, xs]
    p = cfg.patch_size
    r = p // 2
    area = p * p
    if cfg.mode == "random":
        # One color per (point, patch cell), drawn in a fixed layout so the
        # stream does not depend on clipping or eligibility.
        palette = np.random.default_rng(cfg.rng_seed).random((n, area, 3))
    use_scores = cfg.adaptive and p > 1
    if use_scores:
        luma = image @ LUMA_WEIGHTS
        center_luma = luma[ys, xs]

    # Contribution arrays, one block per patch offset.
    rows_parts, cols_parts, disp_parts, seq_parts, score_parts, color_parts = [], [], [], [], [], []
    point_index = np.arange(n, dtype=np.int64)
    for k in range(area):
        dy, dx = k // p - r, k % p - r
        py = ys + dy
        px = xs + dx
        keep = (py >= 0) & (py < h) & (px >= 0) & (px < w)
        if use_scores:
            spatial = (dx * dx + dy * dy) / (2.0 * cfg.sigma_xy**2)
            delta = np.zeros(n)
            delta[keep] = luma[py[keep], px[keep]] - center_luma[keep]
            weight = np.exp(-(spatial + delta**2 / (2.0 * cfg.sigma_i**2)))
            keep &= weight > cfg.t_adpt
        if not keep.any():
            continue
        rows_parts.append(py[keep])
        cols_parts.append(px[keep])
        disp_parts.append(dvals[keep])
        seq_parts.append(point_index[keep] * area + k)
        score_parts.append(weight[keep] if use_scores else dvals[keep])
        if cfg.mode == "random":
            color_parts.append(palette[keep, k])
        else:
            color_parts.append(image[py[keep], px[keep]])

    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    disps = np.concatenate(disp_parts)
    seqs = np.concatenate(seq_parts)
    scores = np.concatenate(score_parts)
    colors = np.concatenate(color_parts)

    # The padding must cover the largest warped pixel, which with patches can
    # sit patch-radius columns left of its source point; size it from the
    # actual contributions (identical to compute_left_padding for 1x1).
    pad = 0
    if cfg.left_padding:
        pad = max(0, int(math.ceil((disps - cols).max())))
    wp = w + pad
    reference = np.zeros((h, wp, 3), dtype=np.float64)
    target = np.zeros((h, wp, 3), dtype=np.float64)

    # Reference-side winner per pixel: highest score, earliest writer on ties.
    buf = ScoreBuffer(h, w)
    buf.insert_many(rows, cols, scores, seqs)
    win = np.nonzero(buf.owner.reshape(-1) >= 0)[0]
    owner_seq = buf.owner.reshape(-1)[win]
    # Map winning sequence ids back to contribution rows.
    seq_order = np.argsort(seqs, kind="stable")
    idx = seq_order[np.searchsorted(seqs[seq_order], owner_seq)]

    wrow = rows[idx]
    wcol = cols[idx]
    wdisp = disps[idx]
    wseq = seqs[idx]
    wcolor = colors[idx]
    m = wrow.shape[0]

    # Target taps with bilinear weights along the row.
    tx = wcol + pad - wdisp
    t0 = np.floor(tx).astype(np.int64)
    frac = tx - t0
    tap_cols = np.stack([t0, t0 + 1], axis=1)
    tap_w = np.stack([1.0 - frac, frac], axis=1)
    tap_ok = (tap_w > 0.0) & (tap_cols >= 0) & (tap_cols < wp)
    dropped = int((~tap_ok.any(axis=1)).sum())

    flat_ok = tap_ok.reshape(-1)
    src = np.repeat(np.arange(m), 2)[flat_ok]
    tpix = (np.repeat(wrow, 2).astype(np.int64) * wp + tap_cols.reshape(-1))[flat_ok]
    tw = tap_w.reshape(-1)[flat_ok]

    # Per target pixel: largest disparity wins, earliest writer on ties.
    order = np.lexsort((wseq[src], -wdisp[src], tpix))
    tpix_o = tpix[order]
    first = np.ones(tpix_o.shape[0], dtype=bool)
    first[1:] = tpix_o[1:] != tpix_o[:-1]
    tap_winner_src = src[order][first]
    tap_winner_pix = tpix_o[first]
    tap_winner_val = tw[order][first, None] * wcolor[tap_winner_src]
    target.reshape(-1, 3)[tap_winner_pix] = tap_winner_val

    tap_owner = np.full(h * wp, -1, dtype=np.int64)
    tap_owner[tap_winner_pix] = tap_winner_src

    # Reference colors: own pattern, unless the primary tap (the heavier of
    # the two) was claimed by a nearer contribution, in which case the
    # occluder's stored pattern is reprojected to keep the pair coherent.
    primary = np.where(tap_w[:, 0] >= tap_w[:, 1], 0, 1)
    prim_cols = tap_cols[np.arange(m), primary]
    prim_ok = tap_ok[np.arange(m), primary]
    prim_pix = wrow.astype(np.int64) * wp + prim_cols
    ref_colors = wcolor.copy()
    occluded = prim_ok & (tap_owner[prim_pix] != np.arange(m))
    ref_colors[occluded] = target.reshape(-1, 3)[prim_pix[occluded]]
    reference[wrow, wcol + pad] = ref_colors

    ref_disparity = np.zeros((h, w), dtype=np.float64)
    ref_disparity[wrow, wcol] = wdisp
    ref_patterned = np.zeros((h, w), dtype=bool)
    ref_patterned[wrow, wcol] = True

    diag = PatternDiagnostics(
        pad_left=pad,
        dropped_warps=dropped,
        patterned_count=m,
        ref_disparity=ref_disparity,
        ref_patterned=ref_patterned,
    )
    return PatternedStereoPair(reference, target, pad), diag


def project_rgb(image: np.ndarray, d: DisparityMap, cfg: PatternConfig) -> PatternedStereoPair:
    """Pattern both fictitious images with the real camera's content."""
    pair, _ = build_patterned_pair(image, d, replace(cfg, mode="rgb"))
    return pair


def project_random(image: np.ndarray, d: DisparityMap, cfg: PatternConfig) -> PatternedStereoPair:
    """Pattern both fictitious images with seeded random colors."""
    pair, _ = build_patterned_pair(image, d, replace(cfg, mode="random"))
    return pair


def crop_output(d_dense: DisparityMap, pad_left: int, expected_width: int | None = None) -> DisparityMap:
    """Remove the left padding columns from a dense matcher output."""
    if pad_left < 0 or pad_left >= d_dense.width:
        raise PipelineError("crop", f"pad_left {pad_left} incompatible with width {d_dense.width}")
    if expected_width is not None and d_dense.width - pad_left != expected_width:
        raise PipelineError(
            "crop",
            f"width {d_dense.width} minus pad {pad_left} != expected {expected_width}",
        )
    if pad_left == 0:
        return d_dense
    return DisparityMap(d_dense.disp[:, pad_left:].copy(), d_dense.valid[:, pad_left:].copy())
