"""Windowed SSIM with a uniform window, symmetric padding and its gradient.

The local statistics come from a box filter ``B`` that pads
half-sample-symmetrically (``d c b a | a b c d``) by ``win // 2`` and
averages over ``win x win`` windows, so the SSIM map has the input shape.
The gradient uses the exact adjoint ``B^T``: a zero-padded box filter
followed by folding the padded border back onto its source pixels.
"""
import numpy as np

from nwckit.errors import FrameTooSmall, ShapeMismatch

WINDOW = 7
C1 = 1e-4
C2 = 9e-4


def _window_sum(y, win, axis):
    axis %= y.ndim
    n = y.shape[axis] - win + 1
    out = np.zeros(y.shape[:axis] + (n,) + y.shape[axis + 1:])
    sl = [slice(None)] * y.ndim
    for a in range(win):
        sl[axis] = slice(a, a + n)
        out += y[tuple(sl)]
    return out


def _pad_symmetric(x, r):
    pad = [(0, 0)] * (x.ndim - 2) + [(r, r), (r, r)]
    return np.pad(x, pad, mode="symmetric")


def _fold_symmetric(y, r, axis):
    """Adjoint of symmetric padding by ``r`` along ``axis``."""
    y = np.moveaxis(y, axis, -1)
    n = y.shape[-1] - 2 * r
    out = y[..., r:r + n].copy()
    for p in range(r):
        out[..., r - 1 - p] += y[..., p]
        out[..., n - 1 - p] += y[..., n + r + p]
    return np.moveaxis(out, -1, axis)


def box_filter(x, win=WINDOW):
    r = win // 2
    y = _pad_symmetric(x, r)
    return _window_sum(_window_sum(y, win, -2), win, -1) / (win * win)


def box_filter_adjoint(g, win=WINDOW):
    r = win // 2
    pad = [(0, 0)] * (g.ndim - 2) + [(win - 1, win - 1), (win - 1, win - 1)]
    y = _window_sum(_window_sum(np.pad(g, pad), win, -2), win, -1) / (win * win)
    return _fold_symmetric(_fold_symmetric(y, r, -2), r, -1)


def _check(x, y, win):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"SSIM inputs differ in shape: {x.shape} vs {y.shape}")
    if x.ndim < 2 or x.shape[-1] < win or x.shape[-2] < win:
        raise FrameTooSmall(f"frames {x.shape[-2:]} smaller than the {win}x{win} window")
    return x, y


def _stats(x, y, win, c1, c2):
    mx, my = box_filter(x, win), box_filter(y, win)
    exx, eyy, exy = box_filter(x * x, win), box_filter(y * y, win), box_filter(x * y, win)
    a1 = 2 * mx * my + c1
    a2 = 2 * (exy - mx * my) + c2
    b1 = mx * mx + my * my + c1
    b2 = (exx - mx * mx) + (eyy - my * my) + c2
    return mx, my, a1, a2, b1, b2


def ssim_map(x, y, win=WINDOW, c1=C1, c2=C2):
    """Local SSIM over the last two axes, same shape as the inputs."""
    x, y = _check(x, y, win)
    _, _, a1, a2, b1, b2 = _stats(x, y, win, c1, c2)
    return (a1 * a2) / (b1 * b2)


def ssim(x, y, win=WINDOW, c1=C1, c2=C2) -> float:
    """Mean of the local SSIM map over all leading frames and pixels."""
    return float(ssim_map(x, y, win, c1, c2).mean())


def ssim_grad(x, y, win=WINDOW, c1=C1, c2=C2):
    """Gradient of :func:`ssim` with respect to ``x``."""
    x, y = _check(x, y, win)
    mx, my, a1, a2, b1, b2 = _stats(x, y, win, c1, c2)
    den = b1 * b2
    s = (a1 * a2) / den
    d_mx = (2 * my * (a2 - a1) - s * 2 * mx * (b2 - b1)) / den
    d_exx = -s / b2
    d_exy = 2 * a1 / den
    g = (box_filter_adjoint(d_mx, win)
         + 2 * x * box_filter_adjoint(d_exx, win)
         + y * box_filter_adjoint(d_exy, win))
    return g / s.size
