# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels: forward pass plus input/weight gradients.

Same contract as :mod:`ltrack.numcore.pykernels`; selected at import time by
:mod:`ltrack.numcore.backend` when the extension is available.
"""
import numpy as np


def conv2d_forward(double[:, :, ::1] x, double[:, :, :, ::1] k, int stride, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1], Cout = k.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - kw) // stride + 1
    out_arr = np.zeros((Ho, Wo, Cout), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t oh, ow, i, j, ci, co, ih, iw
    cdef double v
    for oh in range(Ho):
        for ow in range(Wo):
            for i in range(kh):
                ih = oh * stride + i - pad
                if ih < 0 or ih >= H:
                    continue
                for j in range(kw):
                    iw = ow * stride + j - pad
                    if iw < 0 or iw >= W:
                        continue
                    for ci in range(C):
                        v = x[ih, iw, ci]
                        if v == 0.0:
                            continue
                        for co in range(Cout):
                            out[oh, ow, co] += v * k[i, j, ci, co]
    return out_arr


def conv2d_backward(double[:, :, ::1] x, double[:, :, :, ::1] k, int stride, int pad,
                    double[:, :, ::1] gout):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1], Cout = k.shape[3]
    cdef Py_ssize_t Ho = gout.shape[0], Wo = gout.shape[1]
    gx_arr = np.zeros((H, W, C), dtype=np.float64)
    gk_arr = np.zeros((kh, kw, C, Cout), dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[:, :, :, ::1] gk = gk_arr
    cdef Py_ssize_t oh, ow, i, j, ci, co, ih, iw
    cdef double xv, gv, acc
    for oh in range(Ho):
        for ow in range(Wo):
            for i in range(kh):
                ih = oh * stride + i - pad
                if ih < 0 or ih >= H:
                    continue
                for j in range(kw):
                    iw = ow * stride + j - pad
                    if iw < 0 or iw >= W:
                        continue
                    for ci in range(C):
                        xv = x[ih, iw, ci]
                        acc = 0.0
                        for co in range(Cout):
                            gv = gout[oh, ow, co]
                            gk[i, j, ci, co] += xv * gv
                            acc += gv * k[i, j, ci, co]
                        gx[ih, iw, ci] += acc
    return gx_arr, gk_arr
