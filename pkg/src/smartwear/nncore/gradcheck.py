"""Central-difference gradient checking."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, wide_precision


def relative_error(analytic, numeric, floor=1e-12):
    """Max-norm relative error ``max|a - n| / max(max|a|, max|n|)``."""
    a, n = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0), floor)
    return float(np.abs(a - n).max(initial=0.0) / scale)


def numeric_grad(f, arr, h=1e-5, indices=None):
    """d f() / d arr by central differences, perturbing ``arr`` in place."""
    g = np.zeros_like(arr, dtype=float)
    flat, gflat = arr.reshape(-1), g.reshape(-1)
    for i in (range(flat.size) if indices is None else indices):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return g


def gradcheck(fn, inputs, h=1e-5, seed=0, max_entries=None):
    """Compare backward() against central differences for every input.

    ``fn`` maps Tensors to a Tensor; it is reduced to a scalar with a fixed
    random projection.  Runs in float64.  ``max_entries`` caps the number of
    probed entries per input (sampled without replacement).  Returns the max
    relative error over all inputs, and the per-input errors.
    """
    rng = np.random.default_rng(seed)
    with wide_precision():
        arrays = [np.array(x, dtype=np.float64) for x in inputs]
        out = fn(*[Tensor(a) for a in arrays])
        proj = rng.standard_normal(out.shape)

        def scalar():
            return float(np.sum(fn(*[Tensor(a) for a in arrays]).data * proj))

        tensors = [Tensor(a, requires_grad=True) for a in arrays]
        out = fn(*tensors)
        out.backward(proj)
        errors = []
        for a, t in zip(arrays, tensors):
            idx = None
            if max_entries is not None and a.size > max_entries:
                idx = rng.choice(a.size, max_entries, replace=False)
            num = numeric_grad(scalar, a, h, idx)
            ana = np.zeros_like(a) if t.grad is None else np.asarray(t.grad, dtype=float)
            if idx is not None:
                num, ana = num.reshape(-1)[idx], ana.reshape(-1)[idx]
            errors.append(relative_error(ana, num))
    return max(errors), errors
