"""Meteorologically-aware dynamic loss and its analytic gradient.

Inputs are normalized reflectivity sequences of shape ``(B, T, 1, H, W)``
(``(T, 1, H, W)`` is accepted as a batch of one).  The total is

    alpha(e) * weighted_ext + beta(e) * l_ssim + gamma(e) * l_grad + delta(e) * l_temp

where ``weighted_ext = (1/T) sum_t lambda(t) w_storm(t) L_ext(t)`` and every
term is averaged over the batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nwckit import ssim as _ssim
from nwckit.errors import OddLength, ShapeMismatch, TTooSmall


@dataclass(frozen=True)
class LossConfig:
    alpha_under_early: float = 1.2
    alpha_over: float = 1.0
    alpha_under_late: float = 1.6
    extreme_thresh_early_dbz: float = 35.0
    extreme_thresh_late_dbz: float = 30.0
    storm_thresh_dbz: float = 40.0
    storm_base: float = 2.0
    storm_late_bonus: float = 1.2
    lambda_early: tuple = (1.0, 0.9)
    lambda_late: tuple = (1.2, 2.0)
    # (base, amplitude, epoch scale, rising) per component
    schedule_alpha: tuple = (0.4, 0.2, 10.0, False)
    schedule_beta: tuple = (0.25, 0.2, 5.0, True)
    schedule_gamma: tuple = (0.15, 0.1, 15.0, False)
    schedule_delta: tuple = (0.15, 0.1, 10.0, True)
    ssim_window: int = 7
    ssim_c1: float = 1e-4
    ssim_c2: float = 9e-4
    dbz_scale: float = 70.0
    # multiplies the normalized epoch weights; zero entries switch a term off
    component_scale: tuple = (1.0, 1.0, 1.0, 1.0)

    def thresholds(self, t: int, frames: int):
        """(extreme threshold, underestimation coefficient) for frame ``t``."""
        if t < frames / 2:
            return self.extreme_thresh_early_dbz / self.dbz_scale, self.alpha_under_early
        return self.extreme_thresh_late_dbz / self.dbz_scale, self.alpha_under_late


DEFAULT = LossConfig()


@dataclass(frozen=True)
class EpochWeights:
    alpha: float
    beta: float
    gamma: float
    delta: float

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)


@dataclass
class LossBreakdown:
    total: float
    weighted_ext: float
    l_ssim: float
    l_grad: float
    l_temp: float
    l_ext: np.ndarray
    lam: np.ndarray
    w_storm: np.ndarray
    storm_fraction: np.ndarray
    weights: EpochWeights
    epoch: int = 0

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "total": self.total,
            "weighted_ext": self.weighted_ext,
            "l_ssim": self.l_ssim,
            "l_grad": self.l_grad,
            "l_temp": self.l_temp,
            "weights": dict(zip(("alpha", "beta", "gamma", "delta"), self.weights.as_tuple())),
            "per_frame": {
                "l_ext": self.l_ext.tolist(),
                "lambda": self.lam.tolist(),
                "w_storm": self.w_storm.tolist(),
                "storm_fraction": self.storm_fraction.tolist(),
            },
        }


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _raw(schedule, e):
    base, amp, scale, rising = schedule
    s = _sigmoid(e / scale)
    return base + amp * (s if rising else 1.0 - s)


def epoch_weights(e: int, cfg: LossConfig = DEFAULT) -> EpochWeights:
    raw = [_raw(s, e) for s in (cfg.schedule_alpha, cfg.schedule_beta,
                                cfg.schedule_gamma, cfg.schedule_delta)]
    total = math.fsum(raw)
    return EpochWeights(*(r / total for r in raw))


def temporal_weights(frames: int, cfg: LossConfig = DEFAULT) -> np.ndarray:
    """Piecewise-linear lead-time weights rescaled to sum to ``frames``."""
    if frames < 2:
        raise TTooSmall(f"temporal weights need T >= 2, got {frames}")
    if frames % 2:
        raise OddLength(f"temporal weights need an even T, got {frames}")
    half = frames // 2
    raw = np.concatenate([np.linspace(*cfg.lambda_early, half), np.linspace(*cfg.lambda_late, half)])
    return raw * (frames / math.fsum(raw))


def storm_factor(target_frame, t: int, frames: int, cfg: LossConfig = DEFAULT):
    """Return ``(w_storm, r)`` with ``r`` the target's fraction of storm pixels."""
    target_frame = np.asarray(target_frame, dtype=np.float64)
    r = float(np.mean(target_frame >= cfg.storm_thresh_dbz / cfg.dbz_scale))
    late = cfg.storm_late_bonus if t >= frames / 2 else 0.0
    return 1.0 + (cfg.storm_base + late) * r, r


def _ext_weights(pred, target, t, frames, cfg):
    tau, a_under = cfg.thresholds(t, frames)
    extreme = target >= tau
    return np.where(extreme, np.where(pred < target, a_under, cfg.alpha_over), 1.0)


def extreme_frame_loss(pred, target, t: int, frames: int, cfg: LossConfig = DEFAULT) -> float:
    """Target-gated asymmetric MSE for one frame."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} and target {target.shape} differ")
    a = _ext_weights(pred, target, t, frames, cfg)
    return float(np.mean(a * (pred - target) ** 2))


def ssim_loss(pred, target, cfg: LossConfig = DEFAULT) -> float:
    return 1.0 - _ssim.ssim(pred, target, cfg.ssim_window, cfg.ssim_c1, cfg.ssim_c2)


def grad_loss(pred, target) -> float:
    """Mean of the two L1 forward-difference maps, each averaged on its own."""
    pred, target = _pair(pred, target)
    ex = np.diff(pred, axis=-1) - np.diff(target, axis=-1)
    ey = np.diff(pred, axis=-2) - np.diff(target, axis=-2)
    return 0.5 * (float(np.abs(ex).mean()) + float(np.abs(ey).mean()))


def temp_loss(pred, target) -> float:
    """L1 mismatch of frame-to-frame increments; time is axis -3."""
    pred, target = _pair(pred, target)
    if pred.ndim < 3 or pred.shape[-3] < 2:
        raise TTooSmall("temporal loss needs at least two frames")
    et = np.diff(pred, axis=-3) - np.diff(target, axis=-3)
    return float(np.abs(et).mean())


def _pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} and target {target.shape} differ")
    return pred, target


def _as_bthw(x):
    """Squeeze to (B, T, H, W) from (B, T, 1, H, W) or (T, 1, H, W)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 4:
        x = x[None]
    if x.ndim != 5 or x.shape[2] != 1:
        raise ShapeMismatch(f"expected (B, T, 1, H, W), got {x.shape}")
    return x[:, :, 0]


def _prepare(pred, target):
    p, g = _as_bthw(pred), _as_bthw(target)
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction {p.shape} and target {g.shape} differ")
    frames = p.shape[1]
    if frames < 2:
        raise TTooSmall(f"loss needs T >= 2, got {frames}")
    return p, g


def _weights(epoch, cfg):
    ew = epoch_weights(epoch, cfg)
    return EpochWeights(*(w * s for w, s in zip(ew.as_tuple(), cfg.component_scale)))


def _frame_terms(p, g, cfg):
    """Per-frame extreme loss, storm factor and storm fraction, all (B, T)."""
    frames = p.shape[1]
    t = np.arange(frames)
    late = t >= frames / 2
    tau = np.where(late, cfg.extreme_thresh_late_dbz, cfg.extreme_thresh_early_dbz) / cfg.dbz_scale
    a_under = np.where(late, cfg.alpha_under_late, cfg.alpha_under_early)
    extreme = g >= tau[None, :, None, None]
    a = np.where(extreme, np.where(p < g, a_under[None, :, None, None], cfg.alpha_over), 1.0)
    l_ext = (a * (p - g) ** 2).mean(axis=(-2, -1))
    r = (g >= cfg.storm_thresh_dbz / cfg.dbz_scale).mean(axis=(-2, -1))
    w_storm = 1.0 + (cfg.storm_base + np.where(late, cfg.storm_late_bonus, 0.0))[None] * r
    return a, l_ext, w_storm, r


def _components(p, g, w, cfg):
    """Per-sample (ssim loss, grad loss, temp loss), each (B,).

    Terms whose weight is zero are not evaluated and come back as zeros, so
    switched-off components place no constraint on the frame size.
    """
    zero = np.zeros(p.shape[0])
    l_ssim = l_grad = l_temp = zero
    if w.beta:
        l_ssim = 1.0 - _ssim.ssim_map(p, g, cfg.ssim_window, cfg.ssim_c1,
                                      cfg.ssim_c2).mean(axis=(1, 2, 3))
    if w.gamma:
        ex = np.abs(np.diff(p, axis=-1) - np.diff(g, axis=-1)).mean(axis=(1, 2, 3))
        ey = np.abs(np.diff(p, axis=-2) - np.diff(g, axis=-2)).mean(axis=(1, 2, 3))
        l_grad = 0.5 * (ex + ey)
    if w.delta:
        l_temp = np.abs(np.diff(p, axis=1) - np.diff(g, axis=1)).mean(axis=(1, 2, 3))
    return l_ssim, l_grad, l_temp


def mad_loss_per_sample(pred, target, epoch: int = 0, cfg: LossConfig = DEFAULT) -> np.ndarray:
    """Total loss of every batch sample, shape (B,); :func:`mad_loss` is their mean."""
    p, g = _prepare(pred, target)
    frames = p.shape[1]
    lam = temporal_weights(frames, cfg)
    _, l_ext, w_storm, _ = _frame_terms(p, g, cfg)
    ext = (lam[None] * w_storm * l_ext).sum(axis=1) / frames
    w = _weights(epoch, cfg)
    l_ssim, l_grad, l_temp = _components(p, g, w, cfg)
    return w.alpha * ext + w.beta * l_ssim + w.gamma * l_grad + w.delta * l_temp


def mad_loss(pred, target, epoch: int = 0, cfg: LossConfig = DEFAULT) -> LossBreakdown:
    p, g = _prepare(pred, target)
    frames = p.shape[1]
    lam = temporal_weights(frames, cfg)
    _, l_ext, w_storm, r = _frame_terms(p, g, cfg)
    weighted_ext = float(np.mean((lam[None] * w_storm * l_ext).sum(axis=1) / frames))
    w = _weights(epoch, cfg)
    l_ssim, l_grad, l_temp = (float(np.mean(c)) for c in _components(p, g, w, cfg))
    total = w.alpha * weighted_ext + w.beta * l_ssim + w.gamma * l_grad + w.delta * l_temp
    return LossBreakdown(total, weighted_ext, l_ssim, l_grad, l_temp, l_ext, lam, w_storm, r, w, epoch)


def mad_loss_grad(pred, target, epoch: int = 0, cfg: LossConfig = DEFAULT):
    """Gradient of the total with respect to ``pred`` (same shape as ``pred``).

    Subgradient conventions: ``d|x|/dx = 0`` at 0, the overestimation branch
    at ``pred == target``, and no gradient through the target-side threshold
    indicators.
    """
    shape = np.shape(pred)
    p, g = _prepare(pred, target)
    b, frames, h, wd = p.shape
    lam = temporal_weights(frames, cfg)
    w = _weights(epoch, cfg)
    grad = np.zeros_like(p)

    if w.alpha:
        a, _, w_storm, _ = _frame_terms(p, g, cfg)
        coef = (w.alpha / (b * frames * h * wd)) * lam[None] * w_storm
        grad += coef[:, :, None, None] * 2.0 * a * (p - g)
    if w.beta:
        grad -= w.beta * _ssim.ssim_grad(p, g, cfg.ssim_window, cfg.ssim_c1, cfg.ssim_c2)
    if w.gamma:
        sx = np.sign(np.diff(p, axis=-1) - np.diff(g, axis=-1)) * (0.5 * w.gamma / (b * frames * h * (wd - 1)))
        grad[..., 1:] += sx
        grad[..., :-1] -= sx
        sy = np.sign(np.diff(p, axis=-2) - np.diff(g, axis=-2)) * (0.5 * w.gamma / (b * frames * (h - 1) * wd))
        grad[..., 1:, :] += sy
        grad[..., :-1, :] -= sy
    if w.delta:
        st = np.sign(np.diff(p, axis=1) - np.diff(g, axis=1)) * (w.delta / (b * (frames - 1) * h * wd))
        grad[:, 1:] += st
        grad[:, :-1] -= st
    return grad.reshape(shape)
