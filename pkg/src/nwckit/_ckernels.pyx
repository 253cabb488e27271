# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Semantics mirror ``_pykernels`` one for one."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, INFINITY

cnp.import_array()


def depthwise_conv2d(x, w):
    cdef const double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], c = xv.shape[1], h = xv.shape[2], wd = xv.shape[3]
    cdef Py_ssize_t k = wv.shape[1], r = k // 2
    out = np.zeros((n, c, h, wd))
    cdef double[:, :, :, ::1] ov = out
    cdef Py_ssize_t b, ch, i, j, a, bb, ii, jj
    cdef double wt
    for b in range(n):
        for ch in range(c):
            for a in range(k):
                for bb in range(k):
                    wt = wv[ch, a, bb]
                    for i in range(h):
                        ii = i + a - r
                        if ii < 0 or ii >= h:
                            continue
                        for j in range(wd):
                            jj = j + bb - r
                            if jj < 0 or jj >= wd:
                                continue
                            ov[b, ch, i, j] += wt * xv[b, ch, ii, jj]
    return out


cdef double _zncc(const double[:, ::1] prev, const double[:, ::1] cur, Py_ssize_t sh, Py_ssize_t sw,
                  Py_ssize_t bh, Py_ssize_t bw, Py_ssize_t dh, Py_ssize_t dw,
                  double var_eps) nogil:
    cdef Py_ssize_t h = prev.shape[0], w = prev.shape[1]
    cdef Py_ssize_t i0 = max(0, -sh - dh), i1 = min(bh, h - sh - dh)
    cdef Py_ssize_t j0 = max(0, -sw - dw), j1 = min(bw, w - sw - dw)
    cdef Py_ssize_t i, j
    cdef double n, sa = 0.0, sb = 0.0, ma, mb, da, db, saa = 0.0, sbb = 0.0, sab = 0.0
    if i1 <= i0 or j1 <= j0:
        return -INFINITY
    n = <double>((i1 - i0) * (j1 - j0))
    for i in range(i0, i1):
        for j in range(j0, j1):
            sa += prev[sh + i, sw + j]
            sb += cur[sh + i + dh, sw + j + dw]
    ma = sa / n
    mb = sb / n
    for i in range(i0, i1):
        for j in range(j0, j1):
            da = prev[sh + i, sw + j] - ma
            db = cur[sh + i + dh, sw + j + dw] - mb
            saa += da * da
            sbb += db * db
            sab += da * db
    if saa / n < var_eps or sbb / n < var_eps:
        return 0.0
    return sab / sqrt(saa * sbb)


def _shift_order(int dmax):
    shifts = [(dh, dw) for dh in range(-dmax, dmax + 1) for dw in range(-dmax, dmax + 1)]
    shifts.sort(key=lambda s: (abs(s[0]) + abs(s[1]), s[0], s[1]))
    return np.array(shifts, dtype=np.int64).reshape(-1, 2)


def block_match(prev, cur, starts_h, starts_w, Py_ssize_t bh, Py_ssize_t bw, int dmax,
                double var_eps, double tie_tol):
    cdef const double[:, ::1] pv = np.ascontiguousarray(prev, dtype=np.float64)
    cdef const double[:, ::1] cv = np.ascontiguousarray(cur, dtype=np.float64)
    cdef long long[:, ::1] order = _shift_order(dmax)
    cdef const long long[::1] hs = np.ascontiguousarray(starts_h, dtype=np.int64)
    cdef const long long[::1] ws = np.ascontiguousarray(starts_w, dtype=np.int64)
    cdef Py_ssize_t nshift = order.shape[0]
    out = np.zeros((hs.shape[0], ws.shape[0], 2), dtype=np.int64)
    cdef long long[:, :, ::1] ov = out
    scores_arr = np.empty(nshift)
    cdef double[::1] scores = scores_arr
    cdef Py_ssize_t bi, bj, si, i, j, sh, sw
    cdef double s, dev, best, npx
    for bi in range(hs.shape[0]):
        for bj in range(ws.shape[0]):
            sh = hs[bi]
            sw = ws[bj]
            npx = <double>(bh * bw)
            s = 0.0
            for i in range(bh):
                for j in range(bw):
                    s += pv[sh + i, sw + j]
            s /= npx
            dev = 0.0
            for i in range(bh):
                for j in range(bw):
                    dev += (pv[sh + i, sw + j] - s) * (pv[sh + i, sw + j] - s)
            if dev / npx < var_eps:
                continue
            best = -INFINITY
            with nogil:
                for si in range(nshift):
                    scores[si] = _zncc(pv, cv, sh, sw, bh, bw, order[si, 0], order[si, 1], var_eps)
                    if scores[si] > best:
                        best = scores[si]
                for si in range(nshift):
                    if scores[si] >= best - tie_tol:
                        break
            ov[bi, bj, 0] = order[si, 0]
            ov[bi, bj, 1] = order[si, 1]
    return out


def advect_bilinear(frame, vh, vw, int steps):
    cdef const double[:, ::1] f = np.ascontiguousarray(frame, dtype=np.float64)
    cdef const double[:, ::1] uh = np.ascontiguousarray(vh, dtype=np.float64)
    cdef const double[:, ::1] uw = np.ascontiguousarray(vw, dtype=np.float64)
    cdef Py_ssize_t h = f.shape[0], w = f.shape[1]
    out = np.zeros((steps, h, w))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t k, i, j, h0, w0, h1, w1
    cdef Py_ssize_t hmax = h - 2 if h >= 2 else 0
    cdef Py_ssize_t wmax = w - 2 if w >= 2 else 0
    cdef double sh, sw, fh, fw, top, bot
    with nogil:
        for k in range(1, steps + 1):
            for i in range(h):
                for j in range(w):
                    sh = i - k * uh[i, j]
                    sw = j - k * uw[i, j]
                    if sh < 0 or sh > h - 1 or sw < 0 or sw > w - 1:
                        continue
                    h0 = <Py_ssize_t>floor(sh)
                    w0 = <Py_ssize_t>floor(sw)
                    if h0 > hmax:
                        h0 = hmax
                    if w0 > wmax:
                        w0 = wmax
                    fh = sh - h0
                    fw = sw - w0
                    h1 = h0 + 1 if h0 + 1 < h else h - 1
                    w1 = w0 + 1 if w0 + 1 < w else w - 1
                    top = (1.0 - fw) * f[h0, w0] + fw * f[h0, w1]
                    bot = (1.0 - fw) * f[h1, w0] + fw * f[h1, w1]
                    ov[k - 1, i, j] = (1.0 - fh) * top + fh * bot
    return out
