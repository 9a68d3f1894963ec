"""
Filtering ablation
==================

On the high-noise generator, train each variant with and without the
low-pass stage and compare test accuracy over seeds.  Sizes here are cut
down for a quick look; the acceptance suite runs the full network.
"""

from smartwear.analyze import ablation_run
from smartwear.model import DualResNetConfig, MlpConfig, TrainConfig
from smartwear.sensorsim import GeneratorConfig

rows, summary = ablation_run(
    GeneratorConfig.high_noise(seed=0),
    variants=("dual-resnet/filtered", "dual-resnet/unfiltered", "mlp/filtered", "mlp/unfiltered"),
    seeds=(0, 1),
    train_cfg=TrainConfig(epochs=30, patience=8),
    sessions_per_class=2,
    augment_kinds=(),
    model_configs={"dual-resnet": DualResNetConfig(widths=(16, 32, 64, 128)), "mlp": MlpConfig()},
)
for s in summary:
    print(f"{s.variant:24s} mean {s.mean:.3f} +/- {s.std:.3f} over {s.n} seeds")
