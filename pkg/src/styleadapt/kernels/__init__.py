"""Convolution kernel backend selection.

The compiled Cython extension is preferred when it is importable; otherwise
the numpy implementation takes over. Set STYLEADAPT_BACKEND=numpy or
STYLEADAPT_BACKEND=cython to force a backend (forcing cython raises if the
extension was not built). Both backends are exact implementations of the
same contract and are cross-checked in the test suite.
"""

import os

import numpy as np

from . import _convnp

_forced = os.environ.get("STYLEADAPT_BACKEND", "").strip().lower()
if _forced not in ("", "numpy", "cython"):
    raise RuntimeError(f"STYLEADAPT_BACKEND must be 'numpy' or 'cython', got {_forced!r}")

if _forced == "numpy":
    _impl = _convnp
    BACKEND = "numpy"
else:
    try:
        from . import _convext as _impl
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _convnp
        BACKEND = "numpy"


def _c3(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def conv2d_forward(x, w, b, stride=1, dil=1, pad=0):
    return _impl.conv2d_forward(_c3(x), _c3(w), _c3(b), stride, dil, pad)


def conv2d_backward_weights(x, gy, kh, kw, stride=1, dil=1, pad=0):
    return _impl.conv2d_backward_weights(_c3(x), _c3(gy), kh, kw, stride, dil, pad)


def conv2d_backward_data(gy, w, H, W, stride=1, dil=1, pad=0):
    return _impl.conv2d_backward_data(_c3(gy), _c3(w), H, W, stride, dil, pad)


def backend_module(name):
    """Resolve a backend by name (used by tests and the benchmark)."""
    if name == "numpy":
        return _convnp
    if name == "cython":
        from . import _convext
        return _convext
    raise ValueError(name)
