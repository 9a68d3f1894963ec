"""Adam with coupled L2 regularisation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state, decay_mask=None):
    """One Adam update in place on the arrays in ``params``.

    L2 is coupled: ``g <- g + weight_decay * theta`` before the moment updates.
    ``decay_mask[i]`` False exempts parameter ``i`` from the penalty.
    """
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            continue
        if p.shape != g.shape:
            raise ValueError(f"param/grad shape mismatch: {p.shape} vs {g.shape}")
        if state.weight_decay and (decay_mask is None or decay_mask[i]):
            g = g + state.weight_decay * p
        m, v = state.m[i], state.v[i]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype, copy=False)
    return params


class Adam:
    """Optimizer over named tensors; batch-norm affine params are exempt from L2."""

    def __init__(self, named_params, lr=1e-3, weight_decay=0.0, betas=(0.9, 0.999), eps=1e-8):
        named = list(named_params)
        self.names = [n for n, _ in named]
        self.params = [p for _, p in named]
        self.decay_mask = [n.rsplit(".", 1)[-1] not in ("gamma", "beta") for n in self.names]
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay)

    @property
    def lr(self):
        return self.state.lr

    @lr.setter
    def lr(self, value):
        self.state.lr = value

    def step(self):
        adam_step([p.data for p in self.params], [p.grad for p in self.params], self.state,
                  self.decay_mask)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
