"""Forecast verification: contingency skill scores, lead-time curves, skill
retention, MAE, SSIM, radially averaged power spectra and band-limited
log-spectral error.

Undefined scores (zero denominators) are ``nan`` and are excluded from
averages.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from nwckit.errors import (
    AxisMismatch,
    EmptyBand,
    GridTooSmall,
    NormalizationMismatch,
    ShapeMismatch,
    UndefinedBase,
)
from nwckit.grid import FieldSequence
from nwckit.ssim import ssim  # noqa: F401  re-exported for verification use

DBZ_SCALE = 70.0
METRICS = ("csi", "pod", "far", "bias", "hss")
BANDS = {
    "meso-beta": (20.0, 200.0),
    "meso-gamma": (2.0, 20.0),
}
LOG_EPS = 1e-12


@dataclass(frozen=True)
class ContingencyCounts:
    hits: int
    misses: int
    false_alarms: int
    correct_negatives: int

    @property
    def total(self) -> int:
        return self.hits + self.misses + self.false_alarms + self.correct_negatives


@dataclass(frozen=True)
class SkillScores:
    csi: float
    pod: float
    far: float
    bias: float
    hss: float

    def as_dict(self):
        return asdict(self)


def _values(x, normalized):
    if isinstance(x, FieldSequence):
        return x.frames[:, 0], x.normalized
    return np.asarray(x, dtype=np.float64), normalized


def contingency(forecast, obs, threshold_dbz: float, normalized: bool = False) -> ContingencyCounts:
    """Count the 2x2 table of ``value >= threshold`` events.

    Arrays are taken on the scale given by ``normalized``; FieldSequences
    carry their own flag (channel 0 is used) and must agree.
    """
    f, fn = _values(forecast, normalized)
    o, on = _values(obs, normalized)
    if fn != on:
        raise NormalizationMismatch("forecast and observation use different scales")
    if f.shape != o.shape:
        raise ShapeMismatch(f"forecast shape {f.shape} != observation shape {o.shape}")
    thr = threshold_dbz / DBZ_SCALE if fn else threshold_dbz
    fe = f >= thr
    oe = o >= thr
    hits = int(np.count_nonzero(fe & oe))
    misses = int(np.count_nonzero(~fe & oe))
    fa = int(np.count_nonzero(fe & ~oe))
    return ContingencyCounts(hits, misses, fa, f.size - hits - misses - fa)


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


def skill_scores(c: ContingencyCounts) -> SkillScores:
    h, m, f, n = c.hits, c.misses, c.false_alarms, c.correct_negatives
    return SkillScores(
        csi=_ratio(h, h + m + f),
        pod=_ratio(h, h + m),
        far=_ratio(f, h + f),
        bias=_ratio(h + f, h + m),
        hss=_ratio(2 * (h * n - f * m), (h + m) * (m + n) + (h + f) * (f + n)),
    )


@dataclass
class LeadTimeCurve:
    threshold_dbz: float
    per_frame: list
    mean: SkillScores
    undefined: dict

    def metric(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.per_frame])

    @property
    def undefined_frames(self) -> int:
        return self.undefined["csi"]


def leadtime_curves(forecast, obs, thresholds, normalized: bool = False) -> dict:
    """Per-frame scores for every threshold, keyed by threshold."""
    f, fn = _values(forecast, normalized)
    o, on = _values(obs, normalized)
    if fn != on:
        raise NormalizationMismatch("forecast and observation use different scales")
    if f.shape != o.shape:
        raise ShapeMismatch(f"forecast shape {f.shape} != observation shape {o.shape}")
    out = {}
    for thr in thresholds:
        frames = [skill_scores(contingency(f[t], o[t], thr, fn)) for t in range(f.shape[0])]
        means, undefined = {}, {}
        for name in METRICS:
            vals = np.array([getattr(s, name) for s in frames])
            ok = ~np.isnan(vals)
            undefined[name] = int((~ok).sum())
            means[name] = float(vals[ok].mean()) if ok.any() else math.nan
        out[thr] = LeadTimeCurve(thr, frames, SkillScores(**means), undefined)
    return out


def skill_retention(curve) -> np.ndarray:
    """Each value as a percentage of the first."""
    m = np.asarray(curve, dtype=np.float64)
    if m.size == 0 or not (m[0] > 0):
        raise UndefinedBase("retention needs a defined, positive first value")
    return 100.0 * m / m[0]


def mae(forecast, obs) -> float:
    f = np.asarray(forecast, dtype=np.float64)
    o = np.asarray(obs, dtype=np.float64)
    if f.shape != o.shape:
        raise ShapeMismatch(f"forecast shape {f.shape} != observation shape {o.shape}")
    return float(np.abs(f - o).mean())


@dataclass(frozen=True)
class RadialSpectrum:
    bin_freq: np.ndarray  # cycles per km, bin centres
    power: np.ndarray
    counts: np.ndarray
    dc: float
    spacing_km: float

    @property
    def wavelength_km(self) -> np.ndarray:
        return 1.0 / self.bin_freq


def power_2d(frame) -> np.ndarray:
    """``|F|^2 / (H W)^2``, which sums to ``mean(frame**2)``."""
    f = np.asarray(frame, dtype=np.float64)
    return np.abs(np.fft.fft2(f)) ** 2 / f.size ** 2


def rapsd(frame, spacing_km: float = 1.0) -> RadialSpectrum:
    """Annulus-averaged power; bin ``j`` is centred on ``j / (L * spacing)``."""
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim != 2 or min(f.shape) < 8:
        raise GridTooSmall(f"RAPSD needs a 2-D grid of at least 8x8, got {f.shape}")
    h, w = f.shape
    p = power_2d(f)
    fh = np.fft.fftfreq(h, d=spacing_km)[:, None]
    fw = np.fft.fftfreq(w, d=spacing_km)[None, :]
    fr = np.sqrt(fh ** 2 + fw ** 2)
    df = 1.0 / (max(h, w) * spacing_km)
    idx = np.floor(fr / df + 0.5).astype(np.int64)
    nbins = int(idx.max())
    counts = np.bincount(idx.ravel(), minlength=nbins + 1)
    sums = np.bincount(idx.ravel(), weights=p.ravel(), minlength=nbins + 1)
    keep = np.nonzero(counts[1:])[0] + 1
    return RadialSpectrum(
        bin_freq=keep * df,
        power=sums[keep] / counts[keep],
        counts=counts[keep],
        dc=float(p[0, 0]),
        spacing_km=float(spacing_km),
    )


def mean_rapsd(frames, spacing_km: float = 1.0) -> RadialSpectrum:
    """Bin-wise average of the spectra of a stack of frames."""
    frames = np.asarray(frames, dtype=np.float64)
    specs = [rapsd(fr, spacing_km) for fr in frames]
    first = specs[0]
    return RadialSpectrum(first.bin_freq, np.mean([s.power for s in specs], axis=0),
                          first.counts, float(np.mean([s.dc for s in specs])), spacing_km)


def band_mask(spec: RadialSpectrum, band) -> np.ndarray:
    lo, hi = BANDS[band] if isinstance(band, str) else band
    wl = spec.wavelength_km
    return (wl > lo) & (wl <= hi)


def lse_band(spec_fcst: RadialSpectrum, spec_obs: RadialSpectrum, band) -> float:
    """RMS difference of log10 power over bins whose wavelength is in (lo, hi]."""
    if spec_fcst.bin_freq.shape != spec_obs.bin_freq.shape or not np.array_equal(
            spec_fcst.bin_freq, spec_obs.bin_freq):
        raise AxisMismatch("spectra have different frequency bins")
    mask = band_mask(spec_obs, band)
    if not mask.any():
        raise EmptyBand(f"no spectral bins fall in band {band}")
    d = np.log10(spec_fcst.power[mask] + LOG_EPS) - np.log10(spec_obs.power[mask] + LOG_EPS)
    return float(np.sqrt(np.mean(d * d)))
