"""Training loop, checkpoints and inference."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..nncore import checkpoint as ckpt_io
from ..nncore import functional as F
from ..nncore.optim import Adam
from ..nncore.tensor import Tensor, no_grad
from ..sensorsim import CLASS_NAMES
from .mlp import MlpBaseline, MlpConfig
from .resnet import DualResNet, DualResNetConfig

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-3
    lr_decay: float = 0.1
    lr_step_epochs: int = 20
    epochs: int = 100
    batch_size: int = 32
    patience: int = 10
    weight_decay: float = 1e-4
    seed: int = 0
    eval_batch_size: int = 64

    def __post_init__(self):
        if min(self.lr0, self.lr_decay, self.lr_step_epochs, self.epochs, self.batch_size,
               self.patience) <= 0 or self.weight_decay < 0:
            raise ValueError("training hyperparameters must be positive")

    def lr_at(self, epoch: int) -> float:
        """Step schedule ``lr0 * decay ** floor(epoch / step)`` (epochs count from 0)."""
        return self.lr0 * self.lr_decay ** (epoch // self.lr_step_epochs)


ARCHS = {"dual-resnet": (DualResNet, DualResNetConfig), "mlp": (MlpBaseline, MlpConfig)}


def build_model(arch: str, cfg=None, seed: int = 0):
    try:
        cls, cfg_cls = ARCHS[arch]
    except KeyError:
        raise ValueError(f"unknown architecture {arch!r}") from None
    return cls(cfg if cfg is not None else cfg_cls(), seed=seed)


@dataclass
class Checkpoint:
    arch: str
    model_config: dict
    state: dict
    train_config: dict = field(default_factory=dict)
    zscore_stats: dict = field(default_factory=dict)
    best_epoch: int = -1
    best_val_loss: float = float("nan")
    class_map: dict = field(default_factory=lambda: {str(k): v for k, v in CLASS_NAMES.items()})

    def build(self):
        _, cfg_cls = ARCHS[self.arch]
        model = build_model(self.arch, cfg_cls.from_dict(self.model_config))
        model.load_state_dict(self.state)
        return model.eval()

    def _config(self):
        return {"arch": self.arch, "model": self.model_config, "train": self.train_config}

    def to_bytes(self) -> bytes:
        meta = {"zscore_stats": self.zscore_stats, "best_epoch": self.best_epoch,
                "best_val_loss": self.best_val_loss, "class_map": self.class_map}
        return ckpt_io.dumps(self._config(), self.state, meta)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Checkpoint":
        config, tensors, meta = ckpt_io.loads(raw)
        return cls(config["arch"], config["model"], tensors, config["train"], meta["zscore_stats"],
                   meta["best_epoch"], meta["best_val_loss"], meta["class_map"])

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _as_model(model_or_ckpt):
    return model_or_ckpt.build() if isinstance(model_or_ckpt, Checkpoint) else model_or_ckpt


def evaluate(model, X, y, batch_size=64):
    """Mean cross-entropy and accuracy in eval mode."""
    model.eval()
    total, correct = 0.0, 0
    with no_grad():
        for i in range(0, len(X), batch_size):
            logits = model(Tensor(X[i:i + batch_size])).data
            loss, _ = F.softmax_cross_entropy(logits.astype(np.float64), y[i:i + batch_size])
            total += loss * len(logits)
            correct += int((logits.argmax(axis=1) + 1 == y[i:i + batch_size]).sum())
    return total / len(X), correct / len(X)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    train_acc: float
    val_acc: float
    seconds: float = 0.0


def train(dataset, cfg: TrainConfig = TrainConfig(), arch: str = "dual-resnet", model_config=None,
          callback=None):
    """Fit a classifier on ``dataset``'s train split with early stopping on val loss.

    Returns ``(checkpoint, history)``; the checkpoint holds the parameters of
    the best-validation-loss epoch.
    """
    X_tr, y_tr = dataset.arrays("train")
    X_va, y_va = dataset.arrays("val")
    if len(X_tr) == 0 or len(X_va) == 0:
        raise ValueError("train and validation splits must be non-empty")
    model = build_model(arch, model_config, seed=cfg.seed)
    model_config = model.cfg
    opt = Adam(model.named_parameters(), lr=cfg.lr0, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng([cfg.seed, 7])

    history = []
    best_loss, best_epoch, best_state, stale = math.inf, -1, model.state_dict(), 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        opt.lr = cfg.lr_at(epoch)
        model.train()
        order = rng.permutation(len(X_tr))
        run_loss, run_correct = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            logits = model(Tensor(X_tr[idx]))
            loss = F.cross_entropy(logits, y_tr[idx])
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {epoch}", epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            run_loss += float(loss.data) * len(idx)
            run_correct += int((logits.data.argmax(axis=1) + 1 == y_tr[idx]).sum())
        val_loss, val_acc = evaluate(model, X_va, y_va, cfg.eval_batch_size)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}", epoch)
        rec = EpochRecord(epoch, opt.lr, run_loss / len(X_tr), val_loss, run_correct / len(X_tr),
                          val_acc, time.perf_counter() - t0)
        history.append(rec)
        log.info("epoch %d lr %.0e train %.4f/%.3f val %.4f/%.3f (%.1fs)", epoch, rec.lr,
                 rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc, rec.seconds)
        if callback is not None:
            callback(rec)
        if val_loss < best_loss:
            best_loss, best_epoch, best_state, stale = val_loss, epoch, model.state_dict(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    model.load_state_dict(best_state)
    ckpt = Checkpoint(arch, model_config.to_dict(), best_state, asdict(cfg),
                      dict(getattr(dataset, "zscore_stats", {})), best_epoch, float(best_loss))
    return ckpt, history


def predict(model_or_ckpt, windows, batch_size=64):
    """Class ids (1-based) and softmax probabilities for ``windows`` [N, 3, L]."""
    model = _as_model(model_or_ckpt).eval()
    X = np.asarray([getattr(w, "data", w) for w in windows] if isinstance(windows, list) else windows,
                   dtype=np.float32)
    if X.ndim != 3:
        raise F.ShapeError(f"expected windows [N, 3, L], got {X.shape}")
    probs = []
    with no_grad():
        for i in range(0, len(X), batch_size):
            probs.append(F.softmax(model(Tensor(X[i:i + batch_size])).data.astype(np.float64)))
    probs = np.concatenate(probs) if probs else np.zeros((0, 6))
    return probs.argmax(axis=1) + 1, probs


def extract_features(model_or_ckpt, windows, batch_size=64):
    """Pre-head feature vectors (1024-d for the dual ResNet)."""
    model = _as_model(model_or_ckpt).eval()
    X = np.asarray(windows, dtype=np.float32)
    out = []
    with no_grad():
        for i in range(0, len(X), batch_size):
            out.append(model.features(Tensor(X[i:i + batch_size])).data)
    return np.concatenate(out)


HISTORY_FIELDS = ("epoch", "lr", "train_loss", "val_loss", "train_acc", "val_acc")


def write_history(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_FIELDS)
        for rec in history:
            w.writerow([rec.epoch, repr(rec.lr)] + [repr(float(getattr(rec, k))) for k in HISTORY_FIELDS[2:]])
