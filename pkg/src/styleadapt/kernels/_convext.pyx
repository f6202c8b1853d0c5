# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 2d convolution kernels (hot loops of every training step).

Same contract as the numpy backend in _convnp.py: single image (H, W, C),
weights (kh, kw, c_in, c_out), zero padding, float64 throughout.
"""

import numpy as np


def conv2d_forward(double[:, :, ::1] x, double[:, :, :, ::1] w, double[::1] b,
                   int stride, int dil, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], F = w.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - dil * (kh - 1) - 1) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - dil * (kw - 1) - 1) // stride + 1
    out_arr = np.empty((Ho, Wo, F), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, u, v, c, f, ih, iw
    cdef double xv
    with nogil:
        for i in range(Ho):
            for j in range(Wo):
                for f in range(F):
                    out[i, j, f] = b[f]
                for u in range(kh):
                    ih = i * stride + u * dil - pad
                    if ih < 0 or ih >= H:
                        continue
                    for v in range(kw):
                        iw = j * stride + v * dil - pad
                        if iw < 0 or iw >= W:
                            continue
                        for c in range(C):
                            xv = x[ih, iw, c]
                            for f in range(F):
                                out[i, j, f] += xv * w[u, v, c, f]
    return out_arr


def conv2d_backward_weights(double[:, :, ::1] x, double[:, :, ::1] gy,
                            int kh, int kw, int stride, int dil, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t Ho = gy.shape[0], Wo = gy.shape[1], F = gy.shape[2]
    gw_arr = np.zeros((kh, kw, C, F), dtype=np.float64)
    cdef double[:, :, :, ::1] gw = gw_arr
    cdef Py_ssize_t i, j, u, v, c, f, ih, iw
    cdef double xv
    with nogil:
        for i in range(Ho):
            for j in range(Wo):
                for u in range(kh):
                    ih = i * stride + u * dil - pad
                    if ih < 0 or ih >= H:
                        continue
                    for v in range(kw):
                        iw = j * stride + v * dil - pad
                        if iw < 0 or iw >= W:
                            continue
                        for c in range(C):
                            xv = x[ih, iw, c]
                            for f in range(F):
                                gw[u, v, c, f] += xv * gy[i, j, f]
    return gw_arr


def conv2d_backward_data(double[:, :, ::1] gy, double[:, :, :, ::1] w,
                         int H, int W, int stride, int dil, int pad):
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], C = w.shape[2], F = w.shape[3]
    cdef Py_ssize_t Ho = gy.shape[0], Wo = gy.shape[1]
    gx_arr = np.zeros((H, W, C), dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t i, j, u, v, c, f, ih, iw
    cdef double gv
    with nogil:
        for i in range(Ho):
            for j in range(Wo):
                for u in range(kh):
                    ih = i * stride + u * dil - pad
                    if ih < 0 or ih >= H:
                        continue
                    for v in range(kw):
                        iw = j * stride + v * dil - pad
                        if iw < 0 or iw >= W:
                            continue
                        for c in range(C):
                            gv = 0.0
                            for f in range(F):
                                gv += gy[i, j, f] * w[u, v, c, f]
                            gx[ih, iw, c] += gv
    return gx_arr
