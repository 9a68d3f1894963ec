"""Dual-branch 1D ResNet-18: abdomen branch + chest branch + 3-layer FC head."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..nncore import functional as F
from ..nncore.layers import BatchNorm1d, Conv1d, Linear, Module
from ..nncore.tensor import Tensor

ABDOMEN = (0,)
CHEST = (1, 2)


@dataclass(frozen=True)
class DualResNetConfig:
    widths: tuple = (64, 128, 256, 512)
    blocks: tuple = (2, 2, 2, 2)
    abdomen_channels: int = 1
    chest_channels: int = 2
    head: tuple = (256, 64)
    num_classes: int = 6
    input_length: int = 1300
    stem_kernel: int = 7

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    @classmethod
    def tiny(cls, input_length=64):
        """Small variant used by gradient checks and fast tests."""
        return cls(widths=(4, 6, 8, 8), blocks=(1, 1, 1, 1), head=(8, 6), input_length=input_length)


def stage_lengths(cfg: DualResNetConfig):
    """Sequence lengths after stem conv, max-pool, and each residual stage."""
    k = cfg.stem_kernel
    lengths = [F.conv1d_output_length(cfg.input_length, k, 2, k // 2)]
    lengths.append(F.conv1d_output_length(lengths[-1], 3, 2, 1))
    cur = lengths[-1]
    for i in range(len(cfg.widths)):
        stride = 1 if i == 0 else 2
        cur = F.conv1d_output_length(cur, 3, stride, 1)
        lengths.append(cur)
    return lengths


class BasicBlock(Module):
    def __init__(self, c_in, c_out, stride, rng):
        self.conv1 = Conv1d(c_in, c_out, 3, stride=stride, pad=1, bias=False, rng=rng)
        self.bn1 = BatchNorm1d(c_out)
        self.conv2 = Conv1d(c_out, c_out, 3, stride=1, pad=1, bias=False, rng=rng)
        self.bn2 = BatchNorm1d(c_out)
        if stride != 1 or c_in != c_out:
            self.down_conv = Conv1d(c_in, c_out, 1, stride=stride, bias=False, rng=rng)
            self.down_bn = BatchNorm1d(c_out)
        else:
            self.down_conv = self.down_bn = None

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        shortcut = x if self.down_conv is None else self.down_bn(self.down_conv(x))
        return F.relu(F.add(out, shortcut))


class ResNet1d(Module):
    """One ResNet-18 style branch ending in global average pooling."""

    def __init__(self, in_channels, cfg: DualResNetConfig, rng):
        w0 = cfg.widths[0]
        k = cfg.stem_kernel
        self.stem_conv = Conv1d(in_channels, w0, k, stride=2, pad=k // 2, bias=False, rng=rng)
        self.stem_bn = BatchNorm1d(w0)
        blocks = []
        c_in = w0
        for i, (width, n) in enumerate(zip(cfg.widths, cfg.blocks)):
            for j in range(n):
                stride = 2 if (i > 0 and j == 0) else 1
                blocks.append(BasicBlock(c_in, width, stride, rng))
                c_in = width
        self.blocks = blocks
        self.out_channels = c_in
        self._feature_map = None

    def forward(self, x):
        out = F.relu(self.stem_bn(self.stem_conv(x)))
        out = F.max_pool1d(out, 3, 2, 1)
        for block in self.blocks:
            out = block(out)
        # last conv-stage activation, kept for Grad-CAM
        self._feature_map = out
        return F.global_avg_pool(out)

    @property
    def feature_map(self):
        return self._feature_map


class DualResNet(Module):
    def __init__(self, cfg: DualResNetConfig = DualResNetConfig(), seed=0):
        if cfg.abdomen_channels != len(ABDOMEN) or cfg.chest_channels != len(CHEST):
            raise ValueError("branch input channels must be 1 (abdomen) and 2 (chest)")
        self.cfg = cfg
        self.lengths = stage_lengths(cfg)
        rng = np.random.default_rng(seed)
        self.abdomen = ResNet1d(cfg.abdomen_channels, cfg, rng)
        self.chest = ResNet1d(cfg.chest_channels, cfg, rng)
        dims = [self.abdomen.out_channels + self.chest.out_channels, *cfg.head, cfg.num_classes]
        self.fc = [Linear(a, b, rng=rng) for a, b in zip(dims[:-1], dims[1:])]

    def features(self, x):
        """Concatenated post-pooling features of both branches, shape [N, 2*width]."""
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.ndim != 3 or x.shape[1] != 3 or x.shape[2] != self.cfg.input_length:
            raise F.ShapeError(f"expected input [N, 3, {self.cfg.input_length}], got {x.shape}")
        abd = self.abdomen(F.take_channels(x, ABDOMEN))
        chest = self.chest(F.take_channels(x, CHEST))
        return F.concat([abd, chest], axis=1)

    def head(self, feats):
        out = feats
        for i, layer in enumerate(self.fc):
            out = layer(out)
            if i < len(self.fc) - 1:
                out = F.relu(out)
        return out

    def forward(self, x):
        return self.head(self.features(x))
