"""Grad-CAM over the final conv stage of each branch."""
from __future__ import annotations

import numpy as np

from ..nncore.tensor import Tensor
from .train import Checkpoint


def cam_from_maps(activations, gradients):
    """relu(sum_k alpha_k A_k(t)) with alpha_k the time-mean of dy/dA_k."""
    a = np.asarray(activations, dtype=float)
    g = np.asarray(gradients, dtype=float)
    alpha = g.mean(axis=-1)
    return np.maximum(alpha @ a, 0.0)


def upsample(cam, length):
    """Linear interpolation of a coarse map onto ``length`` samples (centre-aligned)."""
    cam = np.asarray(cam, dtype=float)
    pos = (np.arange(length) + 0.5) * len(cam) / length - 0.5
    return np.interp(pos, np.arange(len(cam)), cam)


def combine(cams, length):
    """Max-combine upsampled branch maps, then min-max scale to [0, 1]."""
    merged = np.max([upsample(c, length) for c in cams], axis=0)
    lo, hi = merged.min(), merged.max()
    if hi <= 0:
        return np.zeros(length)
    if hi - lo <= 1e-12 * hi:
        return np.ones(length)
    return (merged - lo) / (hi - lo)


def grad_cam(model_or_ckpt, window, target_class: int):
    """Attention map over the window's samples for ``target_class`` (1..6)."""
    model = model_or_ckpt.build() if isinstance(model_or_ckpt, Checkpoint) else model_or_ckpt
    n_classes = model.cfg.num_classes
    if not 1 <= int(target_class) <= n_classes:
        raise ValueError(f"target class must lie in 1..{n_classes}")
    x = np.asarray(getattr(window, "data", window), dtype=np.float32)
    if x.ndim != 2 or x.shape[0] != 3:
        raise ValueError(f"window must be 3 x L, got {x.shape}")
    model.eval()
    logits = model(Tensor(x[None]))
    branches = (model.abdomen, model.chest)
    for b in branches:
        b.feature_map.retain_grad()
    seed = np.zeros(logits.shape)
    seed[0, int(target_class) - 1] = 1.0
    logits.backward(seed)
    cams = [cam_from_maps(b.feature_map.data[0], b.feature_map.grad[0]) for b in branches]
    model.zero_grad()
    return combine(cams, x.shape[1])
