"""Pure-numpy 2d convolution kernels (fallback backend).

All kernels operate on single images in (H, W, C) layout with float64 data.
Weights are (kh, kw, c_in, c_out). Semantics:

    out[i, j, f] = b[f] + sum_{u,v,c} x[i*s + u*d - p, j*s + v*d - p, c] * w[u, v, c, f]

with zero padding outside the input. Output spatial dims follow the usual
(H + 2p - d*(k-1) - 1) // s + 1 formula.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _out_dim(n, k, stride, dil, pad):
    return (n + 2 * pad - dil * (k - 1) - 1) // stride + 1


def _patches(x, kh, kw, stride, dil, pad):
    """Gathered input patches, shape (Ho, Wo, kh, kw, C)."""
    if pad > 0:
        x = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    khd = dil * (kh - 1) + 1
    kwd = dil * (kw - 1) + 1
    v = sliding_window_view(x, (khd, kwd), axis=(0, 1))
    v = v[::stride, ::stride, :, ::dil, ::dil]  # (Ho, Wo, C, kh, kw)
    return v.transpose(0, 1, 3, 4, 2)


def conv2d_forward(x, w, b, stride, dil, pad):
    kh, kw, cin, cout = w.shape
    v = _patches(x, kh, kw, stride, dil, pad)
    ho, wo = v.shape[0], v.shape[1]
    m = v.reshape(ho * wo, kh * kw * cin) @ w.reshape(kh * kw * cin, cout)
    return m.reshape(ho, wo, cout) + b


def conv2d_backward_weights(x, gy, kh, kw, stride, dil, pad):
    cin = x.shape[2]
    cout = gy.shape[2]
    v = _patches(x, kh, kw, stride, dil, pad)
    n = gy.shape[0] * gy.shape[1]
    gw = v.reshape(n, kh * kw * cin).T @ gy.reshape(n, cout)
    return gw.reshape(kh, kw, cin, cout)


def conv2d_backward_data(gy, w, H, W, stride, dil, pad):
    kh, kw, cin, _ = w.shape
    ho, wo = gy.shape[0], gy.shape[1]
    # per-tap contributions, then scatter-add onto the padded input grid
    m = np.tensordot(gy, w, axes=([2], [3]))  # (Ho, Wo, kh, kw, Cin)
    gxp = np.zeros((H + 2 * pad, W + 2 * pad, cin))
    for u in range(kh):
        for v in range(kw):
            gxp[u * dil:u * dil + ho * stride:stride,
                v * dil:v * dil + wo * stride:stride] += m[:, :, u, v, :]
    return gxp[pad:pad + H, pad:pad + W]
