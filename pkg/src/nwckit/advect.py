"""Lagrangian persistence extrapolation: block-matching motion plus
backward semi-Lagrangian advection.

Motion vectors ``(dh, dw)`` are in pixels per frame and satisfy
``cur[x + v] ~ prev[x]``; the forecast for step ``k`` is
``last(x - k v(x))`` with bilinear resampling and zero outside the grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nwckit import _backend
from nwckit.errors import BlockTooLarge, DataError, ShapeMismatch, TooFewFrames
from nwckit.grid import FieldSequence

VAR_EPS = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class MotionField:
    vectors: np.ndarray  # (H, W, 2)
    method: str = "block"
    block_vectors: np.ndarray | None = None


def _starts(n: int, block: int) -> np.ndarray:
    starts = list(range(0, n - block + 1, block))
    if starts[-1] + block < n:
        starts.append(n - block)
    return np.array(starts, dtype=np.int64)


def _lerp_axis(centers: np.ndarray, n: int):
    """Per-pixel (lower index, upper index, fraction) for clamped linear interpolation."""
    x = np.arange(n, dtype=np.float64)
    if len(centers) == 1:
        z = np.zeros(n, dtype=np.int64)
        return z, z, np.zeros(n)
    pos = np.interp(x, centers, np.arange(len(centers), dtype=np.float64))
    lo = np.minimum(np.floor(pos).astype(np.int64), len(centers) - 2)
    return lo, lo + 1, pos - lo


def _densify(block_vectors, starts_h, starts_w, bh, bw, h, w):
    ch = starts_h + (bh - 1) / 2.0
    cw = starts_w + (bw - 1) / 2.0
    lo_h, hi_h, fh = _lerp_axis(ch, h)
    lo_w, hi_w, fw = _lerp_axis(cw, w)
    v = block_vectors.astype(np.float64)
    # a + f (b - a) keeps equal neighbours exact
    rows = v[lo_h] + fh[:, None, None] * (v[hi_h] - v[lo_h])
    return rows[:, lo_w] + fw[None, :, None] * (rows[:, hi_w] - rows[:, lo_w])


def _last_two(frames):
    if isinstance(frames, FieldSequence):
        frames = frames.frames[:, 0]
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[0] < 2:
        raise TooFewFrames(f"motion estimation needs at least two (H, W) frames, got {frames.shape}")
    return frames[-2], frames[-1]


def estimate_motion(frames, block: int = 64, search: int = 10, method: str = "block") -> MotionField:
    """Integer-shift block matching by zero-normalized cross-correlation.

    ``method="global"`` uses one block covering the whole grid.  Among shifts
    whose score is within ``TIE_TOL`` of the best, the smallest ``|dh|+|dw|``
    wins, then the lexicographically smallest ``(dh, dw)``.  Blocks whose
    variance is below ``VAR_EPS`` get ``(0, 0)``.
    """
    prev, cur = _last_two(frames)
    h, w = prev.shape
    if search < 0:
        raise DataError("search radius must be non-negative")
    if method == "global":
        bh, bw = h, w
    elif method == "block":
        if block < 1 or block > min(h, w):
            raise BlockTooLarge(f"block size {block} exceeds grid {h}x{w}")
        bh = bw = block
    else:
        raise DataError(f"unknown motion method {method!r}")
    sh, sw = _starts(h, bh), _starts(w, bw)
    bv = _backend.block_match(prev, cur, sh, sw, bh, bw, int(search), VAR_EPS, TIE_TOL)
    dense = _densify(bv, sh, sw, bh, bw, h, w)
    return MotionField(dense, method, bv)


def advect(last_frame, motion: MotionField, steps: int) -> np.ndarray:
    """``steps`` forecast frames, shape (steps, H, W)."""
    last = np.asarray(last_frame, dtype=np.float64)
    if steps < 1:
        raise DataError("steps must be at least 1")
    if motion.vectors.shape != last.shape + (2,):
        raise ShapeMismatch(f"motion field {motion.vectors.shape} does not match frame {last.shape}")
    vh = np.ascontiguousarray(motion.vectors[..., 0])
    vw = np.ascontiguousarray(motion.vectors[..., 1])
    return _backend.advect_bilinear(last, vh, vw, int(steps))


def extrapolate(seq: FieldSequence, steps: int, block: int = 64, search: int = 10,
                history: int | None = None) -> FieldSequence:
    """Forecast ``steps`` radar frames from the first ``history`` frames of ``seq``."""
    radar = seq.frames[:, 0] if history is None else seq.frames[:history, 0]
    motion = estimate_motion(radar, block, search)
    out = advect(radar[-1], motion, steps)
    return FieldSequence(out[:, None], [seq.channels[0]], seq.spacing_km, seq.normalized)
