"""Parameter-free spatial channel mixer.

The grid is tiled into ``s x s`` cells with ``s = ceil(sqrt(C))``.  Mixed
channel ``k`` takes the pixel at in-cell position ``(p, q)`` from source
channel ``sigma_k(p, q) = (s*p + q + k) mod C``.  For ``C = s**2`` each
``sigma_k`` is a bijection on a cell, and for fixed ``(p, q)`` the map
``k -> sigma_k(p, q)`` is a bijection too, which makes :func:`unmix` exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nwckit.errors import NotNormalized, PadRequired, WrongChannelCount
from nwckit.grid import ChannelKind, FieldSequence

DEFAULT_SOURCE_KINDS = (
    ChannelKind.RadarDbz,
    ChannelKind.PrecipRate,
    ChannelKind.Elevation,
    ChannelKind.AlongSlopeWind,
)


@dataclass(frozen=True)
class MixerSpec:
    channel_count: int = 4

    def __post_init__(self):
        c = self.channel_count
        if c < 1 or self.cell_size ** 2 != c:
            raise WrongChannelCount(f"mixer needs a square channel count, got C={c}")

    @property
    def cell_size(self) -> int:
        return math.isqrt(self.channel_count - 1) + 1

    def sigma(self, k: int, p: int, q: int) -> int:
        return (self.cell_size * p + q + k) % self.channel_count

    def source_index(self, height: int, width: int) -> np.ndarray:
        """(C, H, W) array: source channel feeding mixed channel k at (h, w)."""
        s, c = self.cell_size, self.channel_count
        p = (np.arange(height) % s)[:, None]
        q = (np.arange(width) % s)[None, :]
        k = np.arange(c)[:, None, None]
        return (s * p + q + k) % c

    def mixed_index(self, height: int, width: int) -> np.ndarray:
        """(C, H, W) array: mixed channel holding source channel c at (h, w)."""
        s, c = self.cell_size, self.channel_count
        p = (np.arange(height) % s)[:, None]
        q = (np.arange(width) % s)[None, :]
        src = np.arange(c)[:, None, None]
        return (src - s * p - q) % c


def _check_divisible(spec: MixerSpec, h: int, w: int):
    s = spec.cell_size
    if h % s or w % s:
        raise PadRequired(f"grid {h}x{w} is not divisible by cell size {s}")


def mix(seq: FieldSequence) -> FieldSequence:
    """Fuse C channels into ``[radar, mixed_0, ..., mixed_{C-1}]``."""
    spec = MixerSpec(seq.shape[1])
    if not seq.normalized:
        raise NotNormalized("mix expects a normalized sequence")
    t, c, h, w = seq.shape
    _check_divisible(spec, h, w)
    src = np.broadcast_to(spec.source_index(h, w)[None], (t, c, h, w))
    mixed = np.take_along_axis(seq.frames, src, axis=1)
    out = np.concatenate([seq.frames[:, :1], mixed], axis=1)
    kinds = (seq.channels[0],) + (ChannelKind.Mixed,) * c
    return FieldSequence(out, kinds, seq.spacing_km, normalized=True)


def unmix(mixed: FieldSequence, spec: MixerSpec | None = None,
          kinds=None) -> FieldSequence:
    """Invert :func:`mix` exactly.

    ``kinds`` labels the recovered channels; the default is the standard
    four-channel input for C=4 and Generic otherwise, with channel 0 taking
    the kind of the preserved radar channel.
    """
    c = mixed.shape[1] - 1
    if spec is None:
        spec = MixerSpec(max(c, 1))
    if c != spec.channel_count:
        raise WrongChannelCount(
            f"expected {spec.channel_count + 1} channels for C={spec.channel_count}, got {mixed.shape[1]}")
    t, _, h, w = mixed.shape
    _check_divisible(spec, h, w)
    idx = np.broadcast_to(spec.mixed_index(h, w)[None], (t, c, h, w))
    out = np.take_along_axis(mixed.frames[:, 1:], idx, axis=1)
    if kinds is None:
        kinds = DEFAULT_SOURCE_KINDS if c == 4 else (ChannelKind.Generic,) * c
        kinds = (mixed.channels[0],) + tuple(kinds[1:])
    return FieldSequence(out, kinds, mixed.spacing_km, mixed.normalized)
