"""Pure numpy implementations of the hot kernels.

Signatures and semantics match ``_ckernels.pyx`` exactly; see
:mod:`nwckit._backend` for selection.
"""
import numpy as np


def depthwise_conv2d(x, w):
    """Per-channel 2-D cross-correlation with zero "same" padding.

    x : (N, C, H, W) float64, w : (C, k, k) float64 with k odd.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n, c, h, wd = x.shape
    k = w.shape[1]
    r = k // 2
    xp = np.zeros((n, c, h + 2 * r, wd + 2 * r))
    xp[:, :, r:r + h, r:r + wd] = x
    out = np.zeros_like(x)
    for a in range(k):
        for b in range(k):
            out += w[None, :, a, b, None, None] * xp[:, :, a:a + h, b:b + wd]
    return out


def _shift_order(dmax):
    shifts = [(dh, dw) for dh in range(-dmax, dmax + 1) for dw in range(-dmax, dmax + 1)]
    shifts.sort(key=lambda s: (abs(s[0]) + abs(s[1]), s[0], s[1]))
    return shifts


def _zncc(prev, cur, sh, sw, bh, bw, dh, dw, var_eps):
    h, w = prev.shape
    i0, i1 = max(0, -sh - dh), min(bh, h - sh - dh)
    j0, j1 = max(0, -sw - dw), min(bw, w - sw - dw)
    if i1 <= i0 or j1 <= j0:
        return -np.inf
    a = prev[sh + i0:sh + i1, sw + j0:sw + j1]
    b = cur[sh + i0 + dh:sh + i1 + dh, sw + j0 + dw:sw + j1 + dw]
    n = a.size
    am = a - a.sum() / n
    bm = b - b.sum() / n
    saa = float((am * am).sum())
    sbb = float((bm * bm).sum())
    if saa / n < var_eps or sbb / n < var_eps:
        return 0.0
    return float((am * bm).sum()) / np.sqrt(saa * sbb)


def block_match(prev, cur, starts_h, starts_w, bh, bw, dmax, var_eps, tie_tol):
    """Exhaustive integer-shift ZNCC search per block.

    Returns an int64 array (len(starts_h), len(starts_w), 2) of (dh, dw)
    displacements such that ``cur[x + d] ~ prev[x]`` inside the block.
    """
    prev = np.ascontiguousarray(prev, dtype=np.float64)
    cur = np.ascontiguousarray(cur, dtype=np.float64)
    order = _shift_order(dmax)
    out = np.zeros((len(starts_h), len(starts_w), 2), dtype=np.int64)
    scores = np.empty(len(order))
    for bi, sh in enumerate(starts_h):
        for bj, sw in enumerate(starts_w):
            blk = prev[sh:sh + bh, sw:sw + bw]
            dev = blk - blk.sum() / blk.size
            if float((dev * dev).sum()) / blk.size < var_eps:
                continue
            for si, (dh, dw) in enumerate(order):
                scores[si] = _zncc(prev, cur, sh, sw, bh, bw, dh, dw, var_eps)
            best = scores.max()
            si = int(np.argmax(scores >= best - tie_tol))
            out[bi, bj] = order[si]
    return out


def advect_bilinear(frame, vh, vw, steps):
    """Backward semi-Lagrangian resampling: out[k-1](x) = frame(x - k v(x))."""
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    h, w = frame.shape
    hh, ww = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64),
                         indexing="ij")
    out = np.zeros((steps, h, w))
    for k in range(1, steps + 1):
        sh = hh - k * vh
        sw = ww - k * vw
        inside = (sh >= 0) & (sh <= h - 1) & (sw >= 0) & (sw <= w - 1)
        sh = np.where(inside, sh, 0.0)
        sw = np.where(inside, sw, 0.0)
        h0 = np.minimum(np.floor(sh).astype(np.int64), max(h - 2, 0))
        w0 = np.minimum(np.floor(sw).astype(np.int64), max(w - 2, 0))
        fh = sh - h0
        fw = sw - w0
        h1 = np.minimum(h0 + 1, h - 1)
        w1 = np.minimum(w0 + 1, w - 1)
        top = (1.0 - fw) * frame[h0, w0] + fw * frame[h0, w1]
        bot = (1.0 - fw) * frame[h1, w0] + fw * frame[h1, w1]
        out[k - 1] = np.where(inside, (1.0 - fh) * top + fh * bot, 0.0)
    return out
