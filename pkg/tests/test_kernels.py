import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nwckit import _backend, _pykernels

BACKENDS = _backend.available_backends()
needs_c = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def test_fallback_always_available():
    assert BACKENDS["python"] is _pykernels
    assert _backend.BACKEND in BACKENDS


def test_env_forces_fallback():
    env = dict(os.environ, NWCKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import nwckit; print(nwckit.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_shift_order():
    order = _pykernels._shift_order(1)
    assert order[0] == (0, 0)
    assert order[1:5] == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert len(order) == 9


@needs_c
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3, 5, 7]))
def test_depthwise_equivalence(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 3, 9, 7))
    w = rng.normal(size=(3, k, k))
    a = _pykernels.depthwise_conv2d(x, w)
    b = BACKENDS["cython"].depthwise_conv2d(x, w)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


@needs_c
@given(st.integers(0, 2**32 - 1), st.integers(-3, 3), st.integers(-3, 3))
def test_block_match_equivalence(seed, dh, dw):
    rng = np.random.default_rng(seed)
    prev = rng.normal(size=(16, 16))
    cur = np.roll(prev, (dh, dw), axis=(0, 1)) + 0.1 * rng.normal(size=(16, 16))
    starts = np.array([0, 6, 10])
    args = (prev, cur, starts, starts, 6, 6, 3, 1e-12, 1e-12)
    assert np.array_equal(_pykernels.block_match(*args), BACKENDS["cython"].block_match(*args))


@needs_c
def test_block_match_read_only_inputs():
    prev = np.random.default_rng(0).normal(size=(8, 8))
    prev.setflags(write=False)
    starts = np.array([0], dtype=np.int64)
    starts.setflags(write=False)
    out = BACKENDS["cython"].block_match(prev, prev, starts, starts, 8, 8, 2, 1e-12, 1e-12)
    assert not out.any()


@needs_c
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_advect_equivalence(seed, steps):
    rng = np.random.default_rng(seed)
    f = rng.uniform(size=(11, 13))
    vh, vw = rng.uniform(-2.5, 2.5, (2, 11, 13))
    a = _pykernels.advect_bilinear(f, vh, vw, steps)
    b = BACKENDS["cython"].advect_bilinear(f, vh, vw, steps)
    assert np.allclose(a, b, rtol=0, atol=1e-13)
    assert np.array_equal(a == 0, b == 0)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_kernel_edge_cases(name):
    mod = BACKENDS[name]
    f = np.arange(4.0).reshape(2, 2)
    # zero motion on the smallest grid, including the last row and column
    assert np.array_equal(mod.advect_bilinear(f, np.zeros((2, 2)), np.zeros((2, 2)), 1)[0], f)
    out = mod.depthwise_conv2d(np.ones((1, 1, 2, 2)), np.ones((1, 3, 3)))
    assert np.array_equal(out, np.full((1, 1, 2, 2), 4.0))
