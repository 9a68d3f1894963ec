"""Feature-extractor / filtering ablation.

Every variant sees the same sessions, the same window ids and therefore the
same split; only the DSP filter switch and the architecture change.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

from .. import dataset as dsmod
from ..dsp import DspConfig
from ..model import TrainConfig, predict, train
from ..sensorsim import GeneratorConfig, generate_corpus, subject_preset
from .metrics import confusion_and_metrics

log = logging.getLogger(__name__)

ARCH_ALIASES = {"dual-resnet": "dual-resnet", "mlp": "mlp", "mlp-baseline": "mlp"}
FILTER_MODES = {"filtered": True, "unfiltered": False}
DEFAULT_VARIANTS = ("dual-resnet/filtered", "dual-resnet/unfiltered", "mlp/filtered", "mlp/unfiltered")


def parse_variant(name: str):
    """``"arch/filtering"`` -> (arch, apply_filter)."""
    try:
        arch, mode = name.split("/")
        return ARCH_ALIASES[arch], FILTER_MODES[mode]
    except (ValueError, KeyError):
        raise ValueError(f"unknown ablation variant {name!r}; expected one of "
                         f"{{dual-resnet, mlp-baseline}}/{{filtered, unfiltered}}") from None


@dataclass
class AblationRow:
    variant: str
    seed: int
    mean_accuracy: float
    best_epoch: int


@dataclass
class AblationSummary:
    variant: str
    mean: float
    std: float
    n: int


def ablation_run(gen_cfg: GeneratorConfig = GeneratorConfig.high_noise(), variants=DEFAULT_VARIANTS,
                 seeds=(0, 1, 2), train_cfg: TrainConfig = TrainConfig(), dsp_cfg: DspConfig = DspConfig(),
                 classes=range(1, 7), subjects=range(1, 6), sessions_per_class: int = 4,
                 augment_kinds=dsmod.AUG_KINDS, split_seed: int = 0, sessions=None, model_configs=None):
    """Train every variant once per seed; returns (rows, summaries).

    The seed drives model initialisation, batch order and augmentation; the
    split and the generated corpus are shared by all variants.
    ``model_configs`` maps an architecture name to a non-default config.
    """
    parsed = [(v, *parse_variant(v)) for v in variants]
    model_configs = model_configs or {}
    if sessions is None:
        presets = [subject_preset(s) if isinstance(s, int) else s for s in subjects]
        sessions = generate_corpus(gen_cfg, classes, presets, sessions_per_class)
    cache = {}
    rows = []
    for seed in seeds:
        for name, arch, filt in parsed:
            key = (filt, seed)
            if key not in cache:
                cfg = replace(dsp_cfg, apply_filter=filt)
                cache[key] = dsmod.build_dataset(sessions, cfg, split_seed=split_seed, augment_seed=seed,
                                                 augment_kinds=augment_kinds)
            ds = cache[key]
            ckpt, _ = train(ds, replace(train_cfg, seed=seed), arch=arch, model_config=model_configs.get(arch))
            X, y = ds.arrays("test")
            preds, _ = predict(ckpt, X)
            acc = confusion_and_metrics(preds, y).mean_accuracy
            log.info("ablation %s seed %d: %.4f", name, seed, acc)
            rows.append(AblationRow(name, seed, acc, ckpt.best_epoch))
        for k in [k for k in cache if k[1] == seed]:
            del cache[k]
    return rows, summarize(rows)


def summarize(rows):
    out = []
    for name in dict.fromkeys(r.variant for r in rows):
        accs = np.array([r.mean_accuracy for r in rows if r.variant == name])
        out.append(AblationSummary(name, float(accs.mean()), float(accs.std()), len(accs)))
    return out


def write_ablation_csv(rows, summaries, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "seed", "mean_accuracy", "best_epoch"])
        for r in rows:
            w.writerow([r.variant, r.seed, repr(r.mean_accuracy), r.best_epoch])
        w.writerow([])
        w.writerow(["variant", "mean", "std", "n"])
        for s in summaries:
            w.writerow([s.variant, repr(s.mean), repr(s.std), s.n])
