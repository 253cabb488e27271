"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback is used.  Setting ``NWCKIT_PURE_PYTHON=1`` forces the
fallback.
"""
import os

from nwckit import _pykernels

if os.environ.get("NWCKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from nwckit import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

depthwise_conv2d = _impl.depthwise_conv2d
block_match = _impl.block_match
advect_bilinear = _impl.advect_bilinear


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from nwckit import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
