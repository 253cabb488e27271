"""Gridded field sequences, fixed per-channel normalization and the NWC1 format.

A :class:`FieldSequence` holds a ``(T, C, H, W)`` stack in float64 memory.
On disk (NWC1) values are stored as little-endian float32, so a sequence
whose values are float32-representable survives a write/read cycle exactly.

NWC1 layout, little-endian::

    magic       4s   b"NWC1"
    version     u16  1
    T, C, H, W  4 x u32
    spacing_km  f64
    normalized  u8   (0/1)
    kinds       C x u8
    payload     T*C*H*W x f32, (t, c, h, w) row-major
"""
from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from nwckit.errors import (
    AlreadyNormalized,
    BadMagic,
    CorruptFile,
    DataError,
    IoFailure,
    NonFiniteValue,
    NotNormalized,
    OutOfRange,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"NWC1"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIIdB")


class ChannelKind(enum.IntEnum):
    """Channel semantics; the integer value is the NWC1 channel code."""

    RadarDbz = 0
    PrecipRate = 1
    Elevation = 2
    AlongSlopeWind = 3
    Mixed = 4
    Generic = 5

    @property
    def scale(self) -> float:
        return _SCALES[self]

    @property
    def physical_range(self):
        """(lo, hi) bounds enforced on physical values, or None."""
        return _RANGES.get(self)


_SCALES = {
    ChannelKind.RadarDbz: 70.0,
    ChannelKind.PrecipRate: 10.0,
    ChannelKind.Elevation: 1000.0,
    ChannelKind.AlongSlopeWind: 10.0,
    ChannelKind.Mixed: 1.0,
    ChannelKind.Generic: 1.0,
}

_RANGES = {
    ChannelKind.RadarDbz: (0.0, 70.0),
    ChannelKind.PrecipRate: (0.0, 10.0),
}


@dataclass(frozen=True)
class DomainSpec:
    height_px: int
    width_px: int
    spacing_km: float = 1.0

    def __post_init__(self):
        if self.height_px < 2 or self.width_px < 2:
            raise DataError(f"domain must be at least 2x2, got {self.height_px}x{self.width_px}")
        if not (self.spacing_km > 0 and np.isfinite(self.spacing_km)):
            raise DataError(f"spacing_km must be positive, got {self.spacing_km}")


class FieldSequence:
    """Immutable ``(T, C, H, W)`` stack of gridded fields.

    Parameters
    ----------
    frames : array_like
        Values, converted to a read-only float64 array.
    channels : sequence of ChannelKind
        One kind per channel.
    spacing_km : float
        Grid spacing.
    normalized : bool
        Whether values are on the normalized scale.
    """

    __slots__ = ("frames", "channels", "domain", "normalized")

    def __init__(self, frames, channels: Sequence[ChannelKind], spacing_km: float = 1.0,
                 normalized: bool = False):
        arr = np.array(frames, dtype=np.float64, copy=True)
        if arr.ndim != 4:
            raise ShapeMismatch(f"frames must be 4-D (T, C, H, W), got shape {arr.shape}")
        t, c, h, w = arr.shape
        if t < 1 or c < 1:
            raise ShapeMismatch(f"need T >= 1 and C >= 1, got shape {arr.shape}")
        kinds = tuple(ChannelKind(k) for k in channels)
        if len(kinds) != c:
            raise ShapeMismatch(f"{len(kinds)} channel kinds given for {c} channels")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("field sequence contains non-finite values")
        domain = DomainSpec(h, w, float(spacing_km))
        for ci, kind in enumerate(kinds):
            rng = kind.physical_range
            if kind is not ChannelKind.RadarDbz or rng is None:
                continue
            lo, hi = (0.0, 1.0) if normalized else rng
            vals = arr[:, ci]
            vmin, vmax = float(vals.min()), float(vals.max())
            if vmin < lo or vmax > hi:
                raise OutOfRange(ci, vmin, vmax)
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "channels", kinds)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "normalized", bool(normalized))

    def __setattr__(self, name, value):
        raise AttributeError("FieldSequence is immutable")

    @property
    def shape(self):
        return self.frames.shape

    @property
    def spacing_km(self) -> float:
        return self.domain.spacing_km

    def replace(self, frames=None, channels=None, normalized=None) -> "FieldSequence":
        return FieldSequence(
            self.frames if frames is None else frames,
            self.channels if channels is None else channels,
            self.spacing_km,
            self.normalized if normalized is None else normalized,
        )

    def __eq__(self, other):
        if not isinstance(other, FieldSequence):
            return NotImplemented
        return (
            self.channels == other.channels
            and self.normalized == other.normalized
            and self.spacing_km == other.spacing_km
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None

    def __repr__(self):
        kinds = ",".join(k.name for k in self.channels)
        return (f"FieldSequence(shape={self.shape}, channels=[{kinds}], "
                f"spacing_km={self.spacing_km}, normalized={self.normalized})")


def _scales(seq: FieldSequence) -> np.ndarray:
    return np.array([k.scale for k in seq.channels], dtype=np.float64)[None, :, None, None]


def normalize(seq: FieldSequence) -> FieldSequence:
    """Divide every channel by its fixed kind scale."""
    if seq.normalized:
        raise AlreadyNormalized("sequence is already normalized")
    for ci, kind in enumerate(seq.channels):
        rng = kind.physical_range
        if rng is None:
            continue
        vals = seq.frames[:, ci]
        vmin, vmax = float(vals.min()), float(vals.max())
        if vmin < rng[0] or vmax > rng[1]:
            raise OutOfRange(ci, vmin, vmax)
    return seq.replace(frames=seq.frames / _scales(seq), normalized=True)


def denormalize(seq: FieldSequence) -> FieldSequence:
    if not seq.normalized:
        raise NotNormalized("sequence is not normalized")
    return seq.replace(frames=seq.frames * _scales(seq), normalized=False)


def encode_sequence(seq: FieldSequence) -> bytes:
    """Serialize to NWC1 bytes."""
    t, c, h, w = seq.shape
    with np.errstate(over="ignore"):
        payload = seq.frames.astype("<f4")
    if not np.all(np.isfinite(payload)):
        raise NonFiniteValue("values overflow float32 storage")
    header = _HEADER.pack(MAGIC, VERSION, t, c, h, w, seq.spacing_km, int(seq.normalized))
    return header + bytes(int(k) for k in seq.channels) + payload.tobytes(order="C")


def write_sequence(seq: FieldSequence, sink: BinaryIO) -> int:
    data = encode_sequence(seq)
    try:
        sink.write(data)
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot write sequence: {exc}") from exc
    return len(data)


def decode_sequence(data: bytes) -> FieldSequence:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < _HEADER.size:
        raise TruncatedPayload("file ends inside the header")
    magic, version, t, c, h, w, spacing, norm = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"NWC1 version {version} is not supported")
    if norm not in (0, 1):
        raise CorruptFile(f"normalized flag must be 0 or 1, got {norm}")
    offset = _HEADER.size
    if len(data) < offset + c:
        raise TruncatedPayload("file ends inside the channel table")
    codes = data[offset:offset + c]
    offset += c
    try:
        kinds = [ChannelKind(code) for code in codes]
    except ValueError as exc:
        raise CorruptFile(f"unknown channel code in {list(codes)}") from exc
    n = t * c * h * w
    expected = offset + 4 * n
    if len(data) < expected:
        raise TruncatedPayload(f"payload has {len(data) - offset} bytes, expected {4 * n}")
    if len(data) > expected:
        raise CorruptFile(f"{len(data) - expected} trailing bytes after payload")
    values = np.frombuffer(data, dtype="<f4", count=n, offset=offset)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("payload contains non-finite values")
    try:
        return FieldSequence(values.reshape(t, c, h, w), kinds, spacing, bool(norm))
    except NonFiniteValue:
        raise
    except DataError as exc:
        raise CorruptFile(str(exc)) from exc


def read_sequence(source: BinaryIO) -> FieldSequence:
    try:
        data = source.read()
    except OSError as exc:
        raise IoFailure(f"cannot read sequence: {exc}") from exc
    return decode_sequence(data)


def save(seq: FieldSequence, path) -> int:
    with open(path, "wb") as fh:
        return write_sequence(seq, fh)


def load(path) -> FieldSequence:
    try:
        with open(path, "rb") as fh:
            return read_sequence(fh)
    except FileNotFoundError as exc:
        raise IoFailure(f"no such file: {path}") from exc


def from_bytes(data: bytes) -> FieldSequence:
    return read_sequence(io.BytesIO(data))
