"""Terrain aspect and the along-slope wind component.

Grids are north-up: row 0 is the northern edge, so the northward gradient
is ``-dz/dh``.  The aspect angle is the azimuth of the *upslope* direction,
clockwise from north, so ``W_along = u sin(theta) + v cos(theta)`` is
positive for anabatic (upslope) flow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nwckit.errors import GridTooSmall, NonFiniteValue, ShapeMismatch

SLOPE_EPS = 1e-9  # m per km


@dataclass(frozen=True)
class WindFields:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.shape != v.shape or u.ndim != 2:
            raise ShapeMismatch(f"u {u.shape} and v {v.shape} must be matching 2-D grids")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise NonFiniteValue("wind components must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def uniform(cls, u: float, v: float, shape) -> "WindFields":
        return cls(np.full(shape, float(u)), np.full(shape, float(v)))


@dataclass(frozen=True)
class AspectGrid:
    theta: np.ndarray
    defined_mask: np.ndarray


def aspect(elevation, spacing_km: float = 1.0) -> AspectGrid:
    """Upslope azimuth from central differences (one-sided on the border)."""
    z = np.asarray(elevation, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 3 or z.shape[1] < 3:
        raise GridTooSmall(f"aspect needs a grid of at least 3x3, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteValue("elevation must be finite")
    dz_dh, dz_dw = np.gradient(z, spacing_km, spacing_km)
    gx = dz_dw
    gy = -dz_dh
    mask = np.hypot(gx, gy) >= SLOPE_EPS
    theta = np.arctan2(gx, gy)
    # atan2 can return -pi; the documented range is (-pi, pi]
    theta = np.where(theta <= -np.pi, np.pi, theta)
    theta = np.where(mask, theta, 0.0)
    return AspectGrid(theta, mask)


def along_slope_wind(winds: WindFields, asp: AspectGrid) -> np.ndarray:
    if winds.u.shape != asp.theta.shape:
        raise ShapeMismatch(f"wind grid {winds.u.shape} does not match aspect grid {asp.theta.shape}")
    w = winds.u * np.sin(asp.theta) + winds.v * np.cos(asp.theta)
    return np.where(asp.defined_mask, w, 0.0)
