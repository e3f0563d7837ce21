"""Pure-numpy convolution kernels, the fallback when the compiled core is absent.

Both backends share one contract: float64 C-contiguous arrays in, new arrays
out.  The convolution is expressed as one matmul per kernel tap so the heavy
lifting stays inside BLAS.
"""
import numpy as np


def _out_size(size, ksize, stride, pad):
    return (size + 2 * pad - ksize) // stride + 1


def conv2d_forward(x, k, stride, pad):
    H, W, C = x.shape
    kh, kw, _, cout = k.shape
    ho = _out_size(H, kh, stride, pad)
    wo = _out_size(W, kw, stride, pad)
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0))) if pad else x
    acc = np.zeros((ho * wo, cout))
    for i in range(kh):
        for j in range(kw):
            taps = xp[i:i + stride * ho:stride, j:j + stride * wo:stride, :]
            acc += taps.reshape(ho * wo, C) @ k[i, j]
    return acc.reshape(ho, wo, cout)


def conv2d_backward(x, k, stride, pad, gout):
    H, W, C = x.shape
    kh, kw, _, cout = k.shape
    ho, wo = gout.shape[:2]
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0))) if pad else x
    g2 = gout.reshape(ho * wo, cout)
    gxp = np.zeros_like(xp)
    gk = np.zeros_like(k)
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride * ho, stride)
            cols = slice(j, j + stride * wo, stride)
            taps = xp[rows, cols, :].reshape(ho * wo, C)
            gk[i, j] = taps.T @ g2
            gxp[rows, cols, :] += (g2 @ k[i, j].T).reshape(ho, wo, C)
    gx = gxp[pad:pad + H, pad:pad + W, :] if pad else gxp
    return np.ascontiguousarray(gx), gk
