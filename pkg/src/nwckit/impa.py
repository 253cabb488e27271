"""Forward-only reference of the IMPA translator and a minimal encoder/decoder.

Shapes follow the ``(batch, channel, height, width)`` convention once time
has been folded into channels (``channel = t * C' + c``).  All arithmetic is
float64; there is no training code here, parameters are seeded or built by
hand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from nwckit._backend import depthwise_conv2d
from nwckit.errors import (
    DataError,
    IndivisibleDims,
    NonPositiveVariance,
    NoTrace,
    OutOfBounds,
    ShapeMismatch,
)

BN_EPS = 1e-5
ATTN_CHUNK = 1024


@dataclass(frozen=True)
class ImpaConfig:
    frames: int
    latent_channels: int
    height: int
    width: int
    n_blocks: int = 12
    kernel_sizes: tuple = (3, 5, 7)

    def __post_init__(self):
        for name in ("frames", "latent_channels", "height", "width", "n_blocks"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if any(k < 1 or k % 2 == 0 for k in self.kernel_sizes):
            raise DataError(f"kernel sizes must be odd, got {self.kernel_sizes}")

    @property
    def attn_dim(self) -> int:
        return self.frames * self.latent_channels


@dataclass
class ImpaParams:
    """Weights of one block.  Pointwise kernels are ``(out, in)`` matrices."""

    depthwise: tuple
    fusion_w: np.ndarray
    fusion_b: np.ndarray
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    gamma: np.ndarray
    detail_w: np.ndarray
    detail_b: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray
    bn_scale: np.ndarray
    bn_shift: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def zeros(cls, dim: int, kernel_sizes=(3, 5, 7)) -> "ImpaParams":
        """All kernels, biases and gamma zero; batch norm at its defaults."""
        z = lambda *s: np.zeros(s)  # noqa: E731
        nb = len(kernel_sizes)
        return cls(
            depthwise=tuple(z(dim, k, k) for k in kernel_sizes),
            fusion_w=z(dim, nb * dim), fusion_b=z(dim),
            wq=z(dim, dim), bq=z(dim), wk=z(dim, dim), bk=z(dim),
            wv=z(dim, dim), bv=z(dim), wo=z(dim, dim), bo=z(dim),
            gamma=z(dim),
            detail_w=z(dim, dim, 3, 3), detail_b=z(dim),
            bn_mean=z(dim), bn_var=np.ones(dim), bn_scale=np.ones(dim), bn_shift=z(dim),
            proj_w=z(dim, dim), proj_b=z(dim),
        )

    @classmethod
    def identity(cls, dim: int, kernel_sizes=(3, 5, 7), gamma=None) -> "ImpaParams":
        """Zero inner pipeline with an identity final projection."""
        p = cls.zeros(dim, kernel_sizes)
        p.proj_w = np.eye(dim)
        p.gamma = np.ones(dim) if gamma is None else np.asarray(gamma, dtype=np.float64)
        return p

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, kernel_sizes=(3, 5, 7)) -> "ImpaParams":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) kernels, zero biases, gamma = 1."""
        def u(fan_in, *shape):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        nb = len(kernel_sizes)
        p = cls.zeros(dim, kernel_sizes)
        p.depthwise = tuple(u(k * k, dim, k, k) for k in kernel_sizes)
        p.fusion_w = u(nb * dim, dim, nb * dim)
        p.wq, p.wk, p.wv, p.wo = (u(dim, dim, dim) for _ in range(4))
        p.gamma = np.ones(dim)
        p.detail_w = u(9 * dim, dim, dim, 3, 3)
        p.proj_w = u(dim, dim, dim)
        return p


@dataclass
class StageTrace:
    """Captured intermediates, keyed by block index.

    ``blocks=None`` captures every block; otherwise only the listed ones.
    Attention matrices have shape ``(B, N, N)`` with ``N = H' * W'``.
    """

    blocks: Optional[Sequence[int]] = None
    latent_shape: Optional[tuple] = None
    attention: dict = field(default_factory=dict)
    f_multi: dict = field(default_factory=dict)
    f_global: dict = field(default_factory=dict)
    f_calibrated: dict = field(default_factory=dict)
    f_restored: dict = field(default_factory=dict)

    def wants(self, index: int) -> bool:
        return self.blocks is None or index in self.blocks


def _check4(x, name="input"):
    if x.ndim != 4:
        raise ShapeMismatch(f"{name} must be (B, D, H, W), got {x.shape}")


def pointwise(x, w, b=None):
    """1x1 convolution; ``w`` is ``(out, in)``."""
    if x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"pointwise kernel expects {w.shape[1]} channels, got {x.shape[1]}")
    out = np.tensordot(w, x, axes=([1], [1])).transpose(1, 0, 2, 3)
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out)


def conv2d(x, w, b=None, stride=1):
    """Dense cross-correlation with zero padding ``k // 2``."""
    n, cin, h, wd = x.shape
    cout, cin_w, k, _ = w.shape
    if cin != cin_w:
        raise ShapeMismatch(f"conv kernel expects {cin_w} channels, got {cin}")
    r = k // 2
    ho = (h + 2 * r - k) // stride + 1
    wo = (wd + 2 * r - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (r, r), (r, r)))
    cols = np.empty((n, ho, wo, cin, k, k))
    for a in range(k):
        for c in range(k):
            patch = xp[:, :, a:a + stride * (ho - 1) + 1:stride, c:c + stride * (wo - 1) + 1:stride]
            cols[..., a, c] = patch.transpose(0, 2, 3, 1)
    out = cols.reshape(n * ho * wo, cin * k * k) @ w.reshape(cout, -1).T
    out = out.reshape(n, ho, wo, cout).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out)


def fold_time(z):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 5 or min(z.shape) < 1:
        raise ShapeMismatch(f"expected (B, T, C', H', W'), got {z.shape}")
    b, t, c, h, w = z.shape
    return z.reshape(b, t * c, h, w)


def unfold_time(x, frames: int):
    x = np.asarray(x)
    if x.ndim != 4 or x.shape[1] % frames:
        raise ShapeMismatch(f"cannot unfold {x.shape} into {frames} frames")
    b, d, h, w = x.shape
    return x.reshape(b, frames, d // frames, h, w)


def multi_scale_stage(x, params: ImpaParams):
    _check4(x)
    if x.shape[1] != params.dim:
        raise ShapeMismatch(f"block dim {params.dim} does not match input channels {x.shape[1]}")
    branches = [depthwise_conv2d(x, k) for k in params.depthwise]
    return pointwise(np.concatenate(branches, axis=1), params.fusion_w, params.fusion_b)


def softmax_rows(scores):
    s = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def attention_stage(f, params: ImpaParams, capture: Optional[list] = None):
    """Single-head global self-attention over the ``H' * W'`` spatial tokens.

    When ``capture`` is a list, the ``(B, N, N)`` attention matrix is
    appended to it.
    """
    _check4(f)
    b, d, h, w = f.shape
    n = h * w
    tokens = f.reshape(b, d, n).transpose(0, 2, 1)
    q = tokens @ params.wq.T + params.bq
    k = tokens @ params.wk.T + params.bk
    v = tokens @ params.wv.T + params.bv
    scale = 1.0 / np.sqrt(d)
    out = np.empty_like(v)
    full = np.empty((b, n, n)) if capture is not None else None
    for i0 in range(0, n, ATTN_CHUNK):
        i1 = min(n, i0 + ATTN_CHUNK)
        a = softmax_rows(q[:, i0:i1] @ k.transpose(0, 2, 1) * scale)
        out[:, i0:i1] = a @ v
        if full is not None:
            full[:, i0:i1] = a
    if capture is not None:
        capture.append(full)
    out = out @ params.wo.T + params.bo
    return np.ascontiguousarray(out.transpose(0, 2, 1).reshape(b, d, h, w))


def calibrate(f, gamma):
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or gamma.shape[0] != f.shape[1]:
        raise ShapeMismatch(f"gamma of shape {gamma.shape} does not match {f.shape[1]} channels")
    return f * gamma[None, :, None, None]


def batch_norm_eval(x, mean, var, scale, shift):
    if np.any(var <= 0):
        raise NonPositiveVariance("batch-norm variance must be positive")
    inv = scale / np.sqrt(var + BN_EPS)
    return (x - mean[None, :, None, None]) * inv[None, :, None, None] + shift[None, :, None, None]


def detail_restore(f, params: ImpaParams):
    """``f + ReLU(BN(conv3x3(f)))``."""
    c = conv2d(f, params.detail_w, params.detail_b)
    detail = np.maximum(
        batch_norm_eval(c, params.bn_mean, params.bn_var, params.bn_scale, params.bn_shift), 0.0)
    return f + detail


def impa_block(z, params: ImpaParams, trace: Optional[StageTrace] = None, index: int = 0):
    z = np.asarray(z, dtype=np.float64)
    _check4(z)
    keep = trace is not None and trace.wants(index)
    attn = [] if keep else None
    f_multi = multi_scale_stage(z, params)
    f_global = attention_stage(f_multi, params, capture=attn)
    f_cal = calibrate(f_global, params.gamma)
    f_res = detail_restore(f_cal, params)
    out = pointwise(z + f_res, params.proj_w, params.proj_b)
    if keep:
        trace.latent_shape = z.shape[2:]
        trace.attention[index] = attn[0]
        trace.f_multi[index] = f_multi
        trace.f_global[index] = f_global
        trace.f_calibrated[index] = f_cal
        trace.f_restored[index] = f_res
    return out


def translator(z, blocks: Sequence[ImpaParams], trace: Optional[StageTrace] = None):
    """Fold time, run the blocks in sequence, unfold."""
    if len(blocks) < 1:
        raise DataError("translator needs at least one block")
    z = np.asarray(z, dtype=np.float64)
    x = fold_time(z)
    for i, p in enumerate(blocks):
        x = impa_block(x, p, trace, i)
    return unfold_time(x, z.shape[1])


@dataclass
class ModelParams:
    """Encoder, translator blocks and decoder.

    ``encoder[i]`` and ``decoder[i]`` are ``(weight, bias)`` pairs of 3x3
    convolutions; ``head`` is the final 1x1 projection to a single channel.
    """

    encoder: list
    decoder: list
    head: tuple
    blocks: list
    frames: int
    latent_channels: int

    @property
    def depth(self) -> int:
        return len(self.encoder)


def init_model(frames: int, in_channels: int = 5, latent_channels: int = 4, depth: int = 2,
               n_blocks: int = 12, seed: int = 0, kernel_sizes=(3, 5, 7)) -> ModelParams:
    if depth < 1:
        raise DataError("depth must be at least 1")
    rng = np.random.default_rng(seed)

    def conv(cout, cin, k=3):
        bound = 1.0 / np.sqrt(cin * k * k)
        return rng.uniform(-bound, bound, size=(cout, cin, k, k)), np.zeros(cout)

    encoder = [conv(latent_channels, in_channels if i == 0 else latent_channels) for i in range(depth)]
    dim = frames * latent_channels
    blocks = [ImpaParams.random(dim, rng, kernel_sizes) for _ in range(n_blocks)]
    decoder = [conv(latent_channels, latent_channels) for _ in range(depth)]
    bound = 1.0 / np.sqrt(latent_channels)
    head = (rng.uniform(-bound, bound, size=(1, latent_channels)), np.zeros(1))
    return ModelParams(encoder, decoder, head, blocks, frames, latent_channels)


def zero_model(frames: int, in_channels: int = 5, latent_channels: int = 4, depth: int = 2,
               n_blocks: int = 12, kernel_sizes=(3, 5, 7)) -> ModelParams:
    def conv(cout, cin):
        return np.zeros((cout, cin, 3, 3)), np.zeros(cout)

    dim = frames * latent_channels
    return ModelParams(
        [conv(latent_channels, in_channels if i == 0 else latent_channels) for i in range(depth)],
        [conv(latent_channels, latent_channels) for _ in range(depth)],
        (np.zeros((1, latent_channels)), np.zeros(1)),
        [ImpaParams.zeros(dim, kernel_sizes) for _ in range(n_blocks)],
        frames, latent_channels,
    )


def _upsample2(x):
    return x.repeat(2, axis=2).repeat(2, axis=3)


def encode_decode_forward(x, model: ModelParams, trace: Optional[StageTrace] = None):
    """Map ``(B, T, C_in, H, W)`` to a linear ``(B, T, 1, H, W)`` prediction.

    Per frame: ``depth`` stride-2 conv+ReLU stages, the translator on the
    latent stack, then ``depth`` stages of nearest x2 upsampling, conv+ReLU
    and an additive skip from the encoder stage of matching resolution.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 5:
        raise ShapeMismatch(f"expected (B, T, C, H, W), got {x.shape}")
    b, t, c, h, w = x.shape
    if t != model.frames:
        raise ShapeMismatch(f"model built for {model.frames} frames, input has {t}")
    f = 2 ** model.depth
    if h % f or w % f:
        raise IndivisibleDims(f"{h}x{w} grid is not divisible by 2**depth = {f}")
    feats = []
    y = x.reshape(b * t, c, h, w)
    for wgt, bias in model.encoder:
        y = np.maximum(conv2d(y, wgt, bias, stride=2), 0.0)
        feats.append(y)
    hl, wl = y.shape[2:]
    z = translator(y.reshape(b, t, model.latent_channels, hl, wl), model.blocks, trace)
    y = z.reshape(b * t, model.latent_channels, hl, wl)
    for i, (wgt, bias) in enumerate(model.decoder):
        y = np.maximum(conv2d(_upsample2(y), wgt, bias), 0.0)
        level = model.depth - 2 - i
        if level >= 0:
            y = y + feats[level]
    out = pointwise(y, *model.head)
    return out.reshape(b, t, 1, h, w)


def attention_map(trace: Optional[StageTrace], block: int, query, batch: int = 0):
    """Attention weights of one query token, reshaped to ``(H', W')``."""
    if trace is None or block not in trace.attention:
        raise NoTrace(f"no attention captured for block {block}")
    hl, wl = trace.latent_shape
    qh, qw = query
    att = trace.attention[block]
    if not (0 <= qh < hl and 0 <= qw < wl) or not (0 <= batch < att.shape[0]):
        raise OutOfBounds(f"query {query} outside latent grid {hl}x{wl}")
    return att[batch, qh * wl + qw].reshape(hl, wl).copy()


def enhancement_factor(weights, region) -> float:
    """Mean weight inside ``region = (h0, w0, h1, w1)`` (half-open) over the grid mean."""
    weights = np.asarray(weights, dtype=np.float64)
    h0, w0, h1, w1 = region
    hl, wl = weights.shape
    if not (0 <= h0 < h1 <= hl and 0 <= w0 < w1 <= wl):
        raise OutOfBounds(f"region {region} outside grid {hl}x{wl}")
    return float(weights[h0:h1, w0:w1].mean() / weights.mean())
