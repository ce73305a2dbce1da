"""Census-based semi-global stereo matcher.

Front-end: census transform on luma, Hamming matching costs. Aggregation
follows the classic scanline recurrence

    L_r(p, d) = C(p, d) + min(L_r(p-r, d),
                              L_r(p-r, d-1) + P1,
                              L_r(p-r, d+1) + P1,
                              min_k L_r(p-r, k) + P2) - min_k L_r(p-r, k)

summed over 4 or 8 path directions, followed by winner-takes-all with
optional parabolic sub-pixel refinement and a left-right consistency check.
All arithmetic is integer (int32) up to the sub-pixel step, so results are
exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import DisparityMap
from .pattern import LUMA_WEIGHTS, PatternedStereoPair

_BIG = np.int32(2**28)

_DIRECTIONS_8 = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class MatcherConfig:
    max_disparity: int | None = None  # None: sized from the input disparities
    census_window: int = 5
    p1: int | None = None  # None: bits // 3 (8 for the default window)
    p2: int | None = None  # None: 4 * bits // 3 (32 for the default window)
    num_paths: int = 8
    lr_check: bool = False
    lr_threshold: float = 1.0
    subpixel: bool = True

    def __post_init__(self):
        if self.census_window % 2 == 0 or not 3 <= self.census_window <= 7:
            raise ConfigurationError("census_window must be odd and in [3, 7]")
        if self.num_paths not in (4, 8):
            raise ConfigurationError("num_paths must be 4 or 8")
        if self.max_disparity is not None and self.max_disparity <= 0:
            raise ConfigurationError("max_disparity must be positive")
        p1, p2 = self.resolve_penalties()
        if not (p2 > p1 >= 0):
            raise ConfigurationError(f"penalties must satisfy p2 > p1 >= 0, got p1={p1}, p2={p2}")

    @property
    def census_bits(self) -> int:
        return self.census_window**2 - 1

    def resolve_penalties(self) -> tuple[int, int]:
        p1 = self.p1 if self.p1 is not None else self.census_bits // 3
        p2 = self.p2 if self.p2 is not None else 4 * self.census_bits // 3
        return int(p1), int(p2)


def auto_max_disparity(sparse: DisparityMap) -> int:
    """Volume size from the input range: ceil(1.2 * max d), next multiple of 16."""
    dmax = float(sparse.disp[sparse.valid].max()) if sparse.count else 16.0
    need = int(np.ceil(1.2 * dmax))
    return max(16, (need + 15) // 16 * 16)


def _to_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        return img @ LUMA_WEIGHTS
    return img


def census_transform(img: np.ndarray, window: int = 5) -> np.ndarray:
    """Per-pixel census bitfield: bit set where the neighbor is darker than
    the center (strict). Windows are clipped at borders; missing bits are 0.
    """
    if window % 2 == 0 or window < 3:
        raise ConfigurationError("census window must be odd and >= 3")
    gray = _to_gray(img)
    h, w = gray.shape
    r = window // 2
    padded = np.pad(gray, r, constant_values=np.inf)
    out = np.zeros((h, w), dtype=np.uint64)
    bit = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            out |= (nb < gray).astype(np.uint64) << np.uint64(bit)
            bit += 1
    return out


def matching_cost(
    ref_census: np.ndarray,
    tgt_census: np.ndarray,
    max_disparity: int,
    sentinel: int | None = None,
) -> np.ndarray:
    """Hamming cost volume (H, W, D); x - d < 0 entries hold the sentinel."""
    if ref_census.shape != tgt_census.shape:
        raise ConfigurationError("census images must share dimensions")
    h, w = ref_census.shape
    if sentinel is None:
        sentinel = 64  # full uint64 width, an upper bound on any Hamming cost
    cv = np.full((h, w, max_disparity), np.int32(sentinel), dtype=np.int32)
    for d in range(max_disparity):
        if d >= w:
            break
        sl = np.bitwise_count(ref_census[:, d:] ^ tgt_census[:, : w - d])
        cv[:, d:, d] = sl.astype(np.int32)
    return cv


def _path_step(prev: np.ndarray, cost: np.ndarray, p1: np.int32, p2: np.int32) -> np.ndarray:
    """One recurrence step; prev and cost are (M, D) int32 blocks."""
    min_prev = prev.min(axis=-1, keepdims=True)
    down = np.empty_like(prev)
    down[..., 0] = _BIG
    down[..., 1:] = prev[..., :-1]
    up = np.empty_like(prev)
    up[..., -1] = _BIG
    up[..., :-1] = prev[..., 1:]
    best = np.minimum(prev, min_prev + p2)
    np.minimum(best, down + p1, out=best)
    np.minimum(best, up + p1, out=best)
    return cost + best - min_prev


def _sweep(cost: np.ndarray, dy: int, dx: int, p1: np.int32, p2: np.int32) -> np.ndarray:
    h, w, _ = cost.shape
    out = np.empty_like(cost)
    if dy == 0:
        cols = range(w) if dx == 1 else range(w - 1, -1, -1)
        for i, x in enumerate(cols):
            if i == 0:
                out[:, x] = cost[:, x]
            else:
                out[:, x] = _path_step(out[:, x - dx], cost[:, x], p1, p2)
        return out
    rows = range(h) if dy == 1 else range(h - 1, -1, -1)
    for i, y in enumerate(rows):
        if i == 0:
            out[y] = cost[y]
            continue
        prev = out[y - dy]
        if dx == 0:
            out[y] = _path_step(prev, cost[y], p1, p2)
        elif dx == 1:
            out[y, 1:] = _path_step(prev[:-1], cost[y, 1:], p1, p2)
            out[y, 0] = cost[y, 0]
        else:
            out[y, :-1] = _path_step(prev[1:], cost[y, :-1], p1, p2)
            out[y, -1] = cost[y, -1]
    return out


def aggregate_paths(cv: np.ndarray, cfg: MatcherConfig) -> np.ndarray:
    """Sum the per-direction aggregated volumes (int32, exactly reproducible)."""
    p1, p2 = cfg.resolve_penalties()
    p1, p2 = np.int32(p1), np.int32(p2)
    cv = cv.astype(np.int32, copy=False)
    total = np.zeros_like(cv)
    for dy, dx in _DIRECTIONS_8[: cfg.num_paths]:
        total += _sweep(cv, dy, dx, p1, p2)
    return total


def wta_disparity(volume: np.ndarray, cfg: MatcherConfig) -> DisparityMap:
    """Winner-takes-all with optional sub-pixel refinement and LR check.

    Pixels whose refined disparity is not strictly positive are invalid.
    """
    h, w, dmax = volume.shape
    d_int = np.argmin(volume, axis=2)
    disp = d_int.astype(np.float64)

    if cfg.subpixel:
        inner = (d_int > 0) & (d_int < dmax - 1)
        ys, xs = np.nonzero(inner)
        di = d_int[inner]
        c0 = volume[ys, xs, di].astype(np.float64)
        cm = volume[ys, xs, di - 1].astype(np.float64)
        cp = volume[ys, xs, di + 1].astype(np.float64)
        denom = cm - 2.0 * c0 + cp
        offset = np.zeros_like(c0)
        ok = denom > 0
        offset[ok] = (cm[ok] - cp[ok]) / (2.0 * denom[ok])
        disp[ys, xs] = di + offset

    valid = disp > 0.0

    if cfg.lr_check:
        right = _right_disparity(volume)
        xgrid = np.arange(w)[None, :].repeat(h, axis=0)
        xr = xgrid - np.round(disp).astype(np.int64)
        in_range = (xr >= 0) & (xr < w)
        consistent = np.zeros((h, w), dtype=bool)
        yy, xx = np.nonzero(in_range)
        consistent[yy, xx] = np.abs(disp[yy, xx] - right[yy, xr[yy, xx]]) <= cfg.lr_threshold
        valid &= consistent

    disp = np.where(valid, disp, 0.0)
    return DisparityMap(disp, valid)


def _right_disparity(volume: np.ndarray) -> np.ndarray:
    """Integer right-view WTA reusing the left aggregated volume:
    cost_R(x, d) = volume(x + d, d)."""
    h, w, dmax = volume.shape
    cost_r = np.full((h, w, dmax), _BIG, dtype=volume.dtype)
    for d in range(min(dmax, w)):
        cost_r[:, : w - d, d] = volume[:, d:, d]
    return np.argmin(cost_r, axis=2).astype(np.float64)


class SgmMatcher:
    """Built-in matcher; satisfies the pluggable matcher interface."""

    def __init__(self, cfg: MatcherConfig | None = None):
        self.cfg = cfg or MatcherConfig()

    def match(self, pair: PatternedStereoPair, max_disparity: int | None = None) -> DisparityMap:
        dmax = self.cfg.max_disparity or max_disparity
        if dmax is None:
            raise ConfigurationError("max_disparity not set and no hint provided")
        ref_c = census_transform(pair.reference, self.cfg.census_window)
        tgt_c = census_transform(pair.target, self.cfg.census_window)
        cv = matching_cost(ref_c, tgt_c, dmax, sentinel=self.cfg.census_bits)
        agg = aggregate_paths(cv, self.cfg)
        return wta_disparity(agg, self.cfg)
