"""Direct-loop reference implementations used as test oracles."""
import numpy as np


def conv1d_naive(x, w, b, stride, pad):
    n, c, length = x.shape
    o, _, k = w.shape
    xp = np.zeros((n, c, length + 2 * pad))
    xp[:, :, pad:pad + length] = x
    l_out = (length + 2 * pad - k) // stride + 1
    y = np.zeros((n, o, l_out))
    for i in range(n):
        for j in range(o):
            for t in range(l_out):
                acc = 0.0 if b is None else b[j]
                for ci in range(c):
                    for kk in range(k):
                        acc += w[j, ci, kk] * xp[i, ci, t * stride + kk]
                y[i, j, t] = acc
    return y


def batchnorm_naive(x, gamma, beta, eps=1e-5):
    n, c, length = x.shape
    y = np.zeros_like(x)
    for ci in range(c):
        vals = [x[i, ci, t] for i in range(n) for t in range(length)]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        for i in range(n):
            for t in range(length):
                y[i, ci, t] = gamma[ci] * (x[i, ci, t] - mean) / np.sqrt(var + eps) + beta[ci]
    return y


def maxpool_naive(x, kernel, stride, pad):
    n, c, length = x.shape
    l_out = (length + 2 * pad - kernel) // stride + 1
    y = np.zeros((n, c, l_out))
    for i in range(n):
        for ci in range(c):
            for t in range(l_out):
                best = -np.inf
                for kk in range(kernel):
                    pos = t * stride + kk - pad
                    if 0 <= pos < length:
                        best = max(best, x[i, ci, pos])
                y[i, ci, t] = best
    return y


def dft_gain(taps, freqs, fs):
    """|sum h[n] e^{-j w n}| evaluated term by term."""
    out = []
    for f in np.atleast_1d(freqs):
        w = 2 * np.pi * f / fs
        re = sum(h * np.cos(w * n) for n, h in enumerate(taps))
        im = sum(-h * np.sin(w * n) for n, h in enumerate(taps))
        out.append(np.hypot(re, im))
    return np.array(out)
