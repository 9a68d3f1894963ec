"""Fully connected baseline on the flattened 3 x 1300 window."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..nncore import functional as F
from ..nncore.layers import Linear, Module
from ..nncore.tensor import Tensor


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple = (512, 128)
    num_classes: int = 6
    input_length: int = 1300
    in_channels: int = 3

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


class MlpBaseline(Module):
    def __init__(self, cfg: MlpConfig = MlpConfig(), seed=0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        dims = [cfg.in_channels * cfg.input_length, *cfg.hidden, cfg.num_classes]
        self.fc = [Linear(a, b, rng=rng) for a, b in zip(dims[:-1], dims[1:])]

    def features(self, x):
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.shape[1:] != (self.cfg.in_channels, self.cfg.input_length):
            raise F.ShapeError(f"expected input [N, 3, {self.cfg.input_length}], got {x.shape}")
        out = F.flatten(x)
        for layer in self.fc[:-1]:
            out = F.relu(layer(out))
        return out

    def forward(self, x):
        return self.fc[-1](self.features(x))
