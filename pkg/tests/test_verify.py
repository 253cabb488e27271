import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nwckit import verify
from nwckit.errors import (
    AxisMismatch,
    EmptyBand,
    GridTooSmall,
    NormalizationMismatch,
    ShapeMismatch,
    UndefinedBase,
)
from nwckit.grid import ChannelKind, FieldSequence
from nwckit.verify import ContingencyCounts


def _oracle_scores(f, o, thr):
    h = m = fa = cn = 0
    for fv, ov in zip(f.ravel().tolist(), o.ravel().tolist()):
        fe, oe = fv >= thr, ov >= thr
        if fe and oe:
            h += 1
        elif oe:
            m += 1
        elif fe:
            fa += 1
        else:
            cn += 1

    def r(a, b):
        return float(Fraction(a, b)) if b else math.nan

    den = (h + m) * (m + cn) + (h + fa) * (fa + cn)
    return (h, m, fa, cn), (r(h, h + m + fa), r(h, h + m), r(fa, h + fa), r(h + fa, h + m),
                            r(2 * (h * cn - fa * m), den))


def _same(a, b):
    return (math.isnan(a) and math.isnan(b)) or a == b


def test_contingency_worked_example():
    o = np.array([45.0, 50, 30, 20])
    f = np.array([46.0, 30, 48, 10])
    c = verify.contingency(f, o, 45)
    assert c == ContingencyCounts(1, 1, 1, 1)
    s = verify.skill_scores(c)
    assert (s.csi, s.pod, s.far, s.bias, s.hss) == (1 / 3, 0.5, 0.5, 1.0, 0.0)


def test_skill_score_examples():
    s = verify.skill_scores(ContingencyCounts(2, 0, 0, 2))
    assert (s.csi, s.pod, s.far, s.bias, s.hss) == (1.0, 1.0, 0.0, 1.0, 1.0)
    s = verify.skill_scores(ContingencyCounts(0, 0, 0, 5))
    assert all(math.isnan(v) for v in (s.csi, s.pod, s.far, s.bias, s.hss))


def test_contingency_trivial_cases():
    rng = np.random.default_rng(0)
    o = rng.uniform(0, 70, (8, 8))
    c = verify.contingency(o, o, 35)
    assert c.misses == c.false_alarms == 0
    low = verify.contingency(np.zeros((3, 3)), np.full((3, 3), 10.0), 35)
    assert low == ContingencyCounts(0, 0, 0, 9)


def test_normalized_threshold_and_sequences():
    o = np.array([[[35.0, 34.9], [0.0, 70.0]]])
    s = FieldSequence((o / 70)[:, None], [ChannelKind.RadarDbz], normalized=True)
    assert verify.contingency(s, s, 35) == ContingencyCounts(2, 0, 0, 2)
    phys = FieldSequence(o[:, None], [ChannelKind.RadarDbz])
    with pytest.raises(NormalizationMismatch):
        verify.contingency(s, phys, 35)
    with pytest.raises(ShapeMismatch):
        verify.contingency(np.zeros((2, 2)), np.zeros((2, 3)), 35)


@given(st.integers(0, 2**32 - 1), st.floats(0, 70))
def test_scores_match_brute_force(seed, thr):
    rng = np.random.default_rng(seed)
    o = rng.uniform(0, 70, (16, 16))
    f = np.clip(o + rng.normal(0, 12, o.shape), 0, 70)
    counts, want = _oracle_scores(f, o, thr)
    c = verify.contingency(f, o, thr)
    assert (c.hits, c.misses, c.false_alarms, c.correct_negatives) == counts
    got = verify.skill_scores(c)
    assert all(_same(a, b) for a, b in zip((got.csi, got.pod, got.far, got.bias, got.hss), want))
    if not math.isnan(got.hss):
        assert -1 <= got.hss <= 1


def test_csi_degrades_with_noise():
    rng = np.random.default_rng(1)
    means = []
    for amp in (0, 2, 5, 10, 20):
        vals = []
        for _ in range(100):
            o = rng.uniform(0, 70, (16, 16))
            vals.append(verify.skill_scores(verify.contingency(o + rng.normal(0, amp, o.shape), o, 35)).csi)
        means.append(np.mean(vals))
    assert means[0] == 1.0
    assert all(a >= b for a, b in zip(means, means[1:]))


def test_leadtime_curves():
    rng = np.random.default_rng(2)
    o = rng.uniform(0, 70, (5, 8, 8))
    o[3] = 0.0
    curves = verify.leadtime_curves(o, o, [35, 45])
    c = curves[35]
    assert [s.csi for i, s in enumerate(c.per_frame) if i != 3] == [1.0] * 4
    assert math.isnan(c.per_frame[3].csi)
    assert c.mean.csi == 1.0 and c.undefined_frames == 1
    f = np.clip(o + rng.normal(0, 8, o.shape), 0, 70)
    perm = [4, 2, 0, 1, 3]
    a = verify.leadtime_curves(f, o, [35])[35].metric("pod")
    b = verify.leadtime_curves(f[perm], o[perm], [35])[35].metric("pod")
    assert np.array_equal(a[perm], b, equal_nan=True)
    with pytest.raises(ShapeMismatch):
        verify.leadtime_curves(f[:4], o, [35])


def test_skill_retention():
    assert np.allclose(verify.skill_retention([0.2, 0.1, 0.05]), [100, 50, 25])
    assert np.all(verify.skill_retention([0.3] * 4) == 100)
    with pytest.raises(UndefinedBase):
        verify.skill_retention([0.0, 0.1])
    with pytest.raises(UndefinedBase):
        verify.skill_retention([math.nan, 0.1])


def test_mae():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(size=(2, 3, 4, 4))
    assert verify.mae(a, a) == 0.0
    assert abs(verify.mae(a + 0.1, a) - 0.1) <= 1e-15
    assert verify.mae(a, b) == verify.mae(b, a)
    with pytest.raises(ShapeMismatch):
        verify.mae(a, b[:2])


@given(st.integers(0, 2**32 - 1), st.integers(8, 24), st.integers(8, 24))
def test_parseval(seed, h, w):
    f = np.random.default_rng(seed).normal(size=(h, w))
    s = verify.rapsd(f)
    total = s.dc + float((s.power * s.counts).sum())
    assert abs(total - np.mean(f * f)) <= 1e-9 * np.mean(f * f)


def test_rapsd_bins_against_loop_oracle():
    rng = np.random.default_rng(4)
    f = rng.normal(size=(10, 12))
    s = verify.rapsd(f, spacing_km=2.0)
    h, w = f.shape
    df = 1 / (12 * 2.0)
    bins = {}
    for kh in range(h):
        for kw in range(w):
            fr = math.hypot((kh if kh <= h // 2 else kh - h) / (h * 2.0),
                            (kw if kw <= w // 2 else kw - w) / (w * 2.0))
            z = sum(f[a, b] * np.exp(-2j * np.pi * (kh * a / h + kw * b / w))
                    for a in range(h) for b in range(w))
            bins.setdefault(int(math.floor(fr / df + 0.5)), []).append(abs(z) ** 2 / (h * w) ** 2)
    dc = bins.pop(0)
    assert len(dc) == 1 and abs(dc[0] - s.dc) <= 1e-12
    keys = sorted(bins)
    assert np.allclose(s.bin_freq, np.array(keys) * df)
    assert list(s.counts) == [len(bins[k]) for k in keys]
    assert np.allclose(s.power, [np.mean(bins[k]) for k in keys], rtol=1e-10, atol=0)


def test_rapsd_constant_and_cosine():
    s = verify.rapsd(np.full((16, 16), 3.0))
    assert np.all(s.power < 1e-20) and abs(s.dc - 9.0) <= 1e-12
    w = np.arange(64)
    f = np.broadcast_to(np.cos(2 * np.pi * 4 * w / 64), (64, 64))
    s = verify.rapsd(f)
    peak = int(np.argmax(s.power))
    assert s.bin_freq[peak] == 4 / 64 and s.wavelength_km[peak] == 16.0
    assert np.all(np.delete(s.power, peak) < 1e-15 * s.power[peak])


def test_rapsd_translation_invariance():
    f = np.random.default_rng(5).normal(size=(16, 20))
    a, b = verify.rapsd(f), verify.rapsd(np.roll(f, (3, -7), axis=(0, 1)))
    assert np.allclose(a.power, b.power, rtol=1e-9, atol=0)


def test_white_noise_flatness():
    rng = np.random.default_rng(6)
    s = verify.mean_rapsd(rng.normal(size=(200, 32, 32)))
    sel = s.power[s.bin_freq <= 0.4]
    assert sel.max() / sel.min() < 1.2


def test_rapsd_errors():
    with pytest.raises(GridTooSmall):
        verify.rapsd(np.zeros((7, 16)))


def test_lse_band():
    # per-bin powers around 2e-2, far above the 1e-12 floor
    f = 10 * np.random.default_rng(7).normal(size=(64, 64))
    s = verify.rapsd(f)
    assert verify.lse_band(s, s, "meso-beta") == 0.0
    ten = verify.RadialSpectrum(s.bin_freq, 10 * s.power, s.counts, s.dc, 1.0)
    for band in ("meso-beta", "meso-gamma"):
        assert abs(verify.lse_band(ten, s, band) - 1.0) <= 1e-9
    with pytest.raises(EmptyBand):
        verify.lse_band(s, s, (500.0, 900.0))
    other = verify.rapsd(f[:32, :32])
    with pytest.raises(AxisMismatch):
        verify.lse_band(other, s, "meso-beta")


def test_band_edges_half_open():
    s = verify.rapsd(np.random.default_rng(8).normal(size=(40, 40)))
    beta, gamma = verify.band_mask(s, "meso-beta"), verify.band_mask(s, "meso-gamma")
    assert not np.any(beta & gamma)
    at20 = np.isclose(s.wavelength_km, 20.0)
    assert at20.any() and np.all(gamma[at20]) and not np.any(beta[at20])


def test_ssim_reexport():
    x = np.random.default_rng(9).uniform(size=(2, 8, 8))
    assert abs(verify.ssim(x, x) - 1) <= 1e-12
