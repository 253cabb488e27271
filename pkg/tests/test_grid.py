import io
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nwckit import grid
from nwckit.errors import (
    AlreadyNormalized,
    BadMagic,
    CorruptFile,
    DataError,
    IoFailure,
    NonFiniteValue,
    NotNormalized,
    OutOfRange,
    TruncatedPayload,
    UnsupportedVersion,
)
from nwckit.grid import ChannelKind, DomainSpec, FieldSequence

K = ChannelKind


def _header(t, c, h, w, spacing=1.0, norm=0, version=1, magic=b"NWC1"):
    return struct.pack("<4sHIIIIdB", magic, version, t, c, h, w, spacing, norm)


def test_scales_are_fixed_per_kind():
    assert [k.scale for k in K] == [70.0, 10.0, 1000.0, 10.0, 1.0, 1.0]


def test_domain_rejects_small_or_bad_spacing():
    with pytest.raises(DataError):
        DomainSpec(1, 4)
    with pytest.raises(DataError):
        DomainSpec(4, 4, 0.0)


def test_sequence_rejects_non_finite():
    x = np.zeros((1, 1, 2, 2))
    x[0, 0, 1, 1] = np.nan
    with pytest.raises(NonFiniteValue):
        FieldSequence(x, [K.Generic])


def test_sequence_checks_radar_range():
    with pytest.raises(OutOfRange):
        FieldSequence(np.full((1, 1, 2, 2), 71.0), [K.RadarDbz])
    with pytest.raises(OutOfRange):
        FieldSequence(np.full((1, 1, 2, 2), 1.5), [K.RadarDbz], normalized=True)


def test_sequence_is_immutable():
    s = FieldSequence(np.zeros((1, 1, 2, 2)), [K.Generic])
    with pytest.raises(ValueError):
        s.frames[0, 0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        s.normalized = True


def test_normalize_examples():
    x = np.zeros((1, 2, 2, 2))
    x[0, 0] = [[70.0, 35.0], [0.0, 0.0]]
    x[0, 1] = [[10.0, 0.0], [0.0, 0.0]]
    n = grid.normalize(FieldSequence(x, [K.RadarDbz, K.PrecipRate]))
    assert n.normalized
    assert n.frames[0, 0, 0, 0] == 1.0
    assert n.frames[0, 0, 0, 1] == 0.5
    assert n.frames[0, 0, 1, 0] == 0.0
    assert n.frames[0, 1, 0, 0] == 1.0


def test_denormalize_examples():
    x = np.zeros((1, 2, 2, 2))
    x[0, 0] = 0.5
    x[0, 1] = 0.1
    d = grid.denormalize(FieldSequence(x, [K.RadarDbz, K.Elevation], normalized=True))
    assert np.all(d.frames[0, 0] == 35.0)
    assert np.allclose(d.frames[0, 1], 100.0, rtol=0, atol=1e-12)


def test_normalize_errors():
    s = FieldSequence(np.zeros((1, 1, 2, 2)), [K.Generic], normalized=True)
    with pytest.raises(AlreadyNormalized):
        grid.normalize(s)
    with pytest.raises(NotNormalized):
        grid.denormalize(s.replace(normalized=False))
    with pytest.raises(OutOfRange):
        grid.normalize(FieldSequence(np.full((1, 1, 2, 2), 11.0), [K.PrecipRate]))


@given(st.integers(0, 2**32 - 1))
def test_normalize_round_trip(seed):
    rng = np.random.default_rng(seed)
    x = np.empty((2, 4, 3, 3))
    x[:, 0] = rng.uniform(0, 70, (2, 3, 3))
    x[:, 1] = rng.uniform(0, 10, (2, 3, 3))
    x[:, 2] = rng.uniform(-500, 9000, (2, 3, 3))
    x[:, 3] = rng.uniform(-30, 30, (2, 3, 3))
    s = FieldSequence(x, [K.RadarDbz, K.PrecipRate, K.Elevation, K.AlongSlopeWind])
    back = grid.denormalize(grid.normalize(s)).frames
    assert np.all(np.abs(back - x) <= 1e-12 * np.maximum(np.abs(x), 1.0))
    n = grid.normalize(s)
    again = grid.normalize(grid.denormalize(n)).frames
    assert np.allclose(again, n.frames, rtol=1e-12, atol=1e-15)


def test_zero_sequence_byte_layout():
    s = FieldSequence(np.zeros((1, 1, 2, 2)), [K.RadarDbz])
    data = grid.encode_sequence(s)
    # magic 4 + version 2 + dims 16 + spacing 8 + flag 1 + codes 1 + payload 16
    assert len(data) == 48
    assert data[:31] == _header(1, 1, 2, 2)
    assert data[31] == 0
    assert data[32:] == b"\0" * 16


def test_write_returns_byte_count_and_is_deterministic():
    rng = np.random.default_rng(1)
    s = FieldSequence(rng.uniform(0, 1, (2, 3, 4, 5)), [K.Generic, K.Mixed, K.RadarDbz],
                      spacing_km=2.5, normalized=True)
    a, b = io.BytesIO(), io.BytesIO()
    n = grid.write_sequence(s, a)
    grid.write_sequence(s, b)
    assert n == len(a.getvalue()) == 31 + 3 + 4 * 2 * 3 * 4 * 5
    assert a.getvalue() == b.getvalue()
    back = grid.read_sequence(io.BytesIO(a.getvalue()))
    assert back.shape == (2, 3, 4, 5)
    assert back.channels == (K.Generic, K.Mixed, K.RadarDbz)
    assert back.spacing_km == 2.5 and back.normalized


def test_payload_is_float32_row_major():
    x = np.arange(12, dtype=np.float64).reshape(1, 1, 3, 4) / 8
    data = grid.encode_sequence(FieldSequence(x, [K.Generic]))
    assert np.array_equal(np.frombuffer(data[32:], "<f4"), x.ravel().astype(np.float32))


def test_read_errors():
    good = grid.encode_sequence(FieldSequence(np.zeros((1, 1, 2, 2)), [K.Generic]))
    with pytest.raises(BadMagic):
        grid.from_bytes(b"XXXX" + good[4:])
    with pytest.raises(TruncatedPayload):
        grid.from_bytes(good[:-1])
    with pytest.raises(TruncatedPayload):
        grid.from_bytes(good[:10])
    with pytest.raises(UnsupportedVersion):
        grid.from_bytes(_header(1, 1, 2, 2, version=2) + good[31:])
    with pytest.raises(CorruptFile):
        grid.from_bytes(good[:31] + b"\x09" + good[32:])
    with pytest.raises(CorruptFile):
        grid.from_bytes(good + b"\0")
    bad = bytearray(good)
    bad[32:36] = struct.pack("<f", float("inf"))
    with pytest.raises(NonFiniteValue):
        grid.from_bytes(bytes(bad))


def test_float32_overflow_is_rejected():
    s = FieldSequence(np.full((1, 1, 2, 2), 1e300), [K.Generic])
    with pytest.raises(NonFiniteValue):
        grid.encode_sequence(s)


def test_load_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        grid.load(tmp_path / "missing.nwc")


def test_save_load(tmp_path):
    s = FieldSequence(np.full((1, 1, 2, 2), 0.25), [K.Generic])
    p = tmp_path / "a.nwc"
    grid.save(s, p)
    assert grid.load(p) == s


dims = st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(2, 6), st.integers(2, 6))


@given(dims, st.integers(0, 2**32 - 1), st.booleans())
def test_round_trip_property(shape, seed, norm):
    rng = np.random.default_rng(seed)
    kinds = [K(int(k)) for k in rng.integers(0, 6, shape[1])]
    x = rng.uniform(0, 1 if norm else 10, shape).astype(np.float32)
    s = FieldSequence(x, kinds, float(rng.uniform(0.1, 5)), norm)
    data = grid.encode_sequence(s)
    back = grid.from_bytes(data)
    assert back == s
    assert grid.encode_sequence(back) == data
