"""Dual-branch 1D ResNet-18 classifier, training, inference and Grad-CAM."""
from .gradcam import grad_cam
from .mlp import MlpBaseline, MlpConfig
from .resnet import DualResNet, DualResNetConfig, stage_lengths
from .train import (Checkpoint, TrainConfig, TrainingError, build_model, evaluate,
                    extract_features, predict, train, write_history)

__all__ = [
    "grad_cam", "MlpBaseline", "MlpConfig", "DualResNet", "DualResNetConfig", "stage_lengths",
    "Checkpoint", "TrainConfig", "TrainingError", "build_model", "evaluate", "extract_features",
    "predict", "train", "write_history",
]
