"""Deterministic synthetic radar scenes with closed-form ground truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from nwckit import terrain
from nwckit.errors import DataError
from nwckit.grid import ChannelKind, DomainSpec, FieldSequence

MAX_DBZ = 70.0


@dataclass(frozen=True)
class StormSpec:
    center: tuple
    amplitude: float
    sigma: float
    velocity: tuple = (0.0, 0.0)
    growth: float = 0.0

    def __post_init__(self):
        if not (0 < self.amplitude <= MAX_DBZ):
            raise DataError(f"storm amplitude must be in (0, 70] dBZ, got {self.amplitude}")
        if not self.sigma > 0:
            raise DataError(f"storm sigma must be positive, got {self.sigma}")

    @classmethod
    def from_dict(cls, d: dict) -> "StormSpec":
        return cls(
            center=tuple(float(c) for c in d["center"]),
            amplitude=float(d["amplitude"]),
            sigma=float(d["sigma"]),
            velocity=tuple(float(c) for c in d.get("velocity", (0.0, 0.0))),
            growth=float(d.get("growth", 0.0)),
        )


@dataclass(frozen=True)
class ElevationPlane:
    """``z = base + east_slope * x + north_slope * y`` in metres.

    Slopes are in m per km; ``x`` grows with the column index and ``y`` grows
    northward, i.e. against the row index of a north-up grid.
    """

    base_m: float = 0.0
    east_slope: float = 0.0
    north_slope: float = 0.0

    def grid(self, domain: DomainSpec) -> np.ndarray:
        h, w, dx = domain.height_px, domain.width_px, domain.spacing_km
        x = np.arange(w, dtype=np.float64)[None, :] * dx
        y = (h - 1 - np.arange(h, dtype=np.float64))[:, None] * dx
        return self.base_m + self.east_slope * x + self.north_slope * y


def storm_frame(specs: Sequence[StormSpec], t: int, domain: DomainSpec) -> np.ndarray:
    """Noise-free, unclamped sum of the Gaussian storms at frame ``t``."""
    hh = np.arange(domain.height_px, dtype=np.float64)[:, None]
    ww = np.arange(domain.width_px, dtype=np.float64)[None, :]
    out = np.zeros((domain.height_px, domain.width_px))
    for s in specs:
        ch = s.center[0] + t * s.velocity[0]
        cw = s.center[1] + t * s.velocity[1]
        amp = min(max(s.amplitude + t * s.growth, 0.0), MAX_DBZ)
        out += amp * np.exp(-((hh - ch) ** 2 + (ww - cw) ** 2) / (2.0 * s.sigma ** 2))
    return out


def generate(specs: Sequence[StormSpec], frames: int, domain: DomainSpec, seed: int = 0,
             noise_dbz: float = 0.0) -> FieldSequence:
    """One-channel physical reflectivity sequence clamped to [0, 70] dBZ."""
    if frames < 1:
        raise DataError("need at least one frame")
    rng = np.random.default_rng(seed)
    out = np.empty((frames, 1, domain.height_px, domain.width_px))
    for t in range(frames):
        f = storm_frame(specs, t, domain)
        if noise_dbz > 0:
            f = f + rng.normal(0.0, noise_dbz, size=f.shape)
        out[t, 0] = np.clip(f, 0.0, MAX_DBZ)
    return FieldSequence(out, [ChannelKind.RadarDbz], domain.spacing_km)


def make_four_channel(radar_seq: FieldSequence, elevation: ElevationPlane, u: float,
                      v: float) -> FieldSequence:
    """Stack radar, precip proxy, elevation and along-slope wind (physical units)."""
    if radar_seq.normalized:
        raise DataError("make_four_channel expects physical reflectivity")
    radar = radar_seq.frames[:, 0]
    t, h, w = radar.shape
    domain = radar_seq.domain
    z = elevation.grid(domain)
    asp = terrain.aspect(z, domain.spacing_km)
    wind = terrain.along_slope_wind(terrain.WindFields.uniform(u, v, z.shape), asp)
    out = np.empty((t, 4, h, w))
    out[:, 0] = radar
    out[:, 1] = radar / MAX_DBZ * 10.0
    out[:, 2] = z
    out[:, 3] = wind
    kinds = [ChannelKind.RadarDbz, ChannelKind.PrecipRate, ChannelKind.Elevation,
             ChannelKind.AlongSlopeWind]
    return FieldSequence(out, kinds, domain.spacing_km)


DEFAULT_STORMS = (
    StormSpec(center=(20.0, 18.0), amplitude=55.0, sigma=6.0, velocity=(0.5, 1.0), growth=-0.5),
    StormSpec(center=(40.0, 36.0), amplitude=45.0, sigma=9.0, velocity=(0.25, 0.75), growth=0.5),
)
