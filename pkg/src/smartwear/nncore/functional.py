"""Differentiable ops on :class:`Tensor`.

Each op pairs a numpy forward with its exact backward.  Convolution is
cross-correlation (no kernel flip) implemented through an im2col matrix so the
heavy lifting is a single GEMM per call.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Function, Tensor


class ShapeError(ValueError):
    pass


def conv1d_output_length(length, kernel, stride=1, pad=0):
    out = (length + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise ShapeError(f"conv output length {out} < 1 (L={length}, k={kernel}, s={stride}, p={pad})")
    return out


def _im2col(x, kernel, stride, pad):
    n, c, length = x.shape
    l_out = conv1d_output_length(length, kernel, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    win = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride][:, :, :l_out]
    # rows ordered (channel, tap); columns ordered (sample, position)
    cols = np.ascontiguousarray(win.transpose(1, 3, 0, 2)).reshape(c * kernel, n * l_out)
    return cols, l_out


def _col2im(dcols, x_shape, kernel, stride, pad, l_out):
    n, c, length = x_shape
    dcols = dcols.reshape(c, kernel, n, l_out)
    dxp = np.zeros((n, c, length + 2 * pad), dtype=dcols.dtype)
    span = stride * (l_out - 1) + 1
    for k in range(kernel):
        dxp[:, :, k:k + span:stride] += dcols[:, k].transpose(1, 0, 2)
    return dxp[:, :, pad:pad + length]


class Conv1d(Function):
    def forward(self, x, w, b=None, stride=1, pad=0):
        if x.ndim != 3 or w.ndim != 3:
            raise ShapeError(f"conv1d expects x [N,C,L] and w [O,C,k], got {x.shape} and {w.shape}")
        if x.shape[1] != w.shape[1]:
            raise ShapeError(f"input has {x.shape[1]} channels, weight expects {w.shape[1]}")
        if b is not None and b.shape != (w.shape[0],):
            raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} output channels")
        o, c, k = w.shape
        cols, l_out = _im2col(x, k, stride, pad)
        out = w.reshape(o, c * k) @ cols
        out = out.reshape(o, x.shape[0], l_out).transpose(1, 0, 2)
        if b is not None:
            out = out + b[None, :, None]
        self.saved = (cols, w, x.shape, stride, pad, l_out, b is not None)
        return np.ascontiguousarray(out)

    def backward(self, grad):
        cols, w, x_shape, stride, pad, l_out, has_bias = self.saved
        o, c, k = w.shape
        g2 = grad.transpose(1, 0, 2).reshape(o, -1)
        dw = (g2 @ cols.T).reshape(o, c, k)
        dx = _col2im(w.reshape(o, c * k).T @ g2, x_shape, k, stride, pad, l_out)
        db = grad.sum(axis=(0, 2)) if has_bias else None
        return dx, dw, db


def conv1d(x, w, b=None, stride=1, pad=0):
    if b is None:
        return Conv1d.apply(x, w, stride=stride, pad=pad)
    return Conv1d.apply(x, w, b, stride=stride, pad=pad)


class BatchNorm(Function):
    def forward(self, x, gamma, beta, running_mean=None, running_var=None,
                training=True, momentum=0.1, eps=1e-5):
        shape = (1, -1, 1)
        if training:
            m = x.shape[0] * x.shape[2]
            mean = x.mean(axis=(0, 2))
            xc = x - mean.reshape(shape)
            var = np.square(xc).mean(axis=(0, 2))
            if running_mean is not None:
                running_mean *= 1 - momentum
                running_mean += momentum * mean
                running_var *= 1 - momentum
                running_var += momentum * var * (m / max(m - 1, 1))
        else:
            mean, var = running_mean, running_var
            xc = x - mean.reshape(shape)
        invstd = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
        xhat = xc * invstd.reshape(shape)
        self.saved = (xhat, gamma, invstd, training)
        return gamma.reshape(shape) * xhat + beta.reshape(shape)

    def backward(self, grad):
        xhat, gamma, invstd, training = self.saved
        shape = (1, -1, 1)
        dgamma = (grad * xhat).sum(axis=(0, 2))
        dbeta = grad.sum(axis=(0, 2))
        if training:
            m = grad.shape[0] * grad.shape[2]
            dxhat = grad * gamma.reshape(shape)
            dx = (invstd / m).reshape(shape) * (
                m * dxhat
                - dxhat.sum(axis=(0, 2)).reshape(shape)
                - xhat * (dxhat * xhat).sum(axis=(0, 2)).reshape(shape)
            )
        else:
            dx = grad * (gamma * invstd).reshape(shape)
        return dx, dgamma, dbeta


def batch_norm(x, gamma, beta, running_mean=None, running_var=None, training=True,
               momentum=0.1, eps=1e-5):
    if not training and running_mean is None:
        raise ValueError("eval-mode batch norm needs running statistics")
    return BatchNorm.apply(x, gamma, beta, running_mean=running_mean, running_var=running_var,
                           training=training, momentum=momentum, eps=eps)


class ReLU(Function):
    def forward(self, x):
        out = np.maximum(x, 0)
        self.mask = out > 0
        return out

    def backward(self, grad):
        return (grad * self.mask,)


def relu(x):
    return ReLU.apply(x)


class MaxPool1d(Function):
    def forward(self, x, kernel=3, stride=2, pad=1):
        n, c, length = x.shape
        l_out = conv1d_output_length(length, kernel, stride, pad)
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)), constant_values=-np.inf) if pad else x
        win = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride][:, :, :l_out]
        arg = win.argmax(axis=-1)
        self.saved = (arg, x.shape, kernel, stride, pad, l_out)
        return np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        arg, (n, c, length), kernel, stride, pad, l_out = self.saved
        dxp = np.zeros((n, c, length + 2 * pad), dtype=grad.dtype)
        span = stride * (l_out - 1) + 1
        for k in range(kernel):
            dxp[:, :, k:k + span:stride] += grad * (arg == k)
        return (dxp[:, :, pad:pad + length],)


def max_pool1d(x, kernel=3, stride=2, pad=1):
    return MaxPool1d.apply(x, kernel=kernel, stride=stride, pad=pad)


class GlobalAvgPool(Function):
    def forward(self, x):
        self.length = x.shape[2]
        return x.mean(axis=2)

    def backward(self, grad):
        g = np.repeat(grad[:, :, None] / self.length, self.length, axis=2)
        return (g,)


def global_avg_pool(x):
    return GlobalAvgPool.apply(x)


class Linear(Function):
    def forward(self, x, w, b=None):
        if x.ndim != 2 or x.shape[1] != w.shape[1]:
            raise ShapeError(f"linear expects x [N,{w.shape[1]}], got {x.shape}")
        self.saved = (x, w, b is not None)
        out = x @ w.T
        return out + b if b is not None else out

    def backward(self, grad):
        x, w, has_bias = self.saved
        return grad @ w, grad.T @ x, (grad.sum(axis=0) if has_bias else None)


def linear(x, w, b=None):
    if b is None:
        return Linear.apply(x, w)
    return Linear.apply(x, w, b)


class Add(Function):
    def forward(self, a, b):
        if a.shape != b.shape:
            raise ShapeError(f"add needs equal shapes, got {a.shape} and {b.shape}")
        return a + b

    def backward(self, grad):
        return grad, grad


def add(a, b):
    return Add.apply(a, b)


class Concat(Function):
    def forward(self, *arrays, axis=1):
        self.axis = axis
        self.sizes = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.sizes, axis=self.axis))


def concat(tensors, axis=1):
    return Concat.apply(*tensors, axis=axis)


class Reshape(Function):
    def forward(self, x, shape=None):
        self.in_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


def reshape(x, shape):
    return Reshape.apply(x, shape=tuple(shape))


def flatten(x):
    return reshape(x, (x.shape[0], -1))


class TakeChannels(Function):
    def forward(self, x, channels=None):
        self.saved = (x.shape, channels)
        return np.ascontiguousarray(x[:, channels])

    def backward(self, grad):
        shape, channels = self.saved
        dx = np.zeros(shape, dtype=grad.dtype)
        dx[:, channels] = grad
        return (dx,)


def take_channels(x, channels):
    return TakeChannels.apply(x, channels=list(channels))


def _check_targets(targets, num_classes):
    targets = np.asarray(targets)
    if targets.ndim != 1 or not np.issubdtype(targets.dtype, np.integer):
        raise ValueError("targets must be a 1-D integer array of class ids")
    if targets.size and (targets.min() < 1 or targets.max() > num_classes):
        raise ValueError(f"class ids must lie in 1..{num_classes}, got {targets.min()}..{targets.max()}")
    return targets - 1


def log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits, targets):
    """Mean cross-entropy over a batch and its gradient w.r.t. the logits.

    ``targets`` are class ids starting at 1.  Returns ``(loss, dlogits)`` with
    ``dlogits = (softmax - onehot) / N``.
    """
    logits = np.asarray(logits)
    idx = _check_targets(targets, logits.shape[1])
    n = logits.shape[0]
    logp = log_softmax(logits)
    loss = -logp[np.arange(n), idx].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(n), idx] -= 1.0
    return loss, dlogits / n


class CrossEntropy(Function):
    def forward(self, logits, targets=None):
        loss, self.dlogits = softmax_cross_entropy(logits, targets)
        return np.asarray(loss, dtype=logits.dtype)

    def backward(self, grad):
        return (self.dlogits * grad,)


def cross_entropy(logits, targets):
    return CrossEntropy.apply(logits, targets=np.asarray(targets))


__all__ = [
    "ShapeError", "Tensor", "conv1d", "conv1d_output_length", "batch_norm", "relu",
    "max_pool1d", "global_avg_pool", "linear", "add", "concat", "reshape", "flatten",
    "take_channels", "log_softmax", "softmax", "softmax_cross_entropy", "cross_entropy",
]
