"""
Training, evaluation and explanations
=====================================

Train the dual-branch ResNet on the default corpus, report the confusion matrix,
then check where Grad-CAM looks on a dataset whose two classes differ only
inside a known 2 s segment.  Finally embed the learned features with t-SNE.
A reduced-width network keeps this under a few minutes on one core.
"""

import numpy as np

from smartwear.analyze import TsneConfig, confusion_and_metrics, tsne
from smartwear.dataset import build_dataset, cam_mass_near, planted_anomaly_dataset
from smartwear.model import DualResNetConfig, TrainConfig, extract_features, grad_cam, predict, train
from smartwear.sensorsim import GeneratorConfig, generate_corpus

small = DualResNetConfig(widths=(16, 32, 64, 128))

sessions = generate_corpus(GeneratorConfig(seed=0))
ds = build_dataset(sessions, split_seed=0, augment_kinds=())
ckpt, history = train(ds, TrainConfig(epochs=40, patience=10, seed=0), model_config=small)
print(f"trained {len(history)} epochs, best {ckpt.best_epoch} (val loss {ckpt.best_val_loss:.3f})")

X, y = ds.arrays("test")
m = confusion_and_metrics(predict(ckpt, X)[0], y)
print("confusion (rows true, columns predicted):")
print(m.matrix)
print(f"macro mean accuracy {m.mean_accuracy:.3f}")

planted, segments = planted_anomaly_dataset(sessions_per_class=4, seed=0)
ck2, _ = train(planted, TrainConfig(epochs=40, patience=10, seed=0), model_config=small)
model = ck2.build()
mass = [cam_mass_near(grad_cam(model, w.data, 5), segments[w.window_id], 130)
        for w in planted.subset("test") if w.class_id == 5]
print(f"Grad-CAM mass within the planted segment +/- 1 s: mean {np.mean(mass):.2f} "
      f"(a flat map would give about 0.4)")

feats = extract_features(ckpt, X)
res = tsne(feats, TsneConfig(perplexity=10, seed=0))
print(f"t-SNE of {feats.shape} features: KL {res.kl_history[249]:.3f} -> {res.kl_history[-1]:.3f}")
