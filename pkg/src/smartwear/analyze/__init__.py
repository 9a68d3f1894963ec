"""Evaluation metrics, spectrograms, t-SNE and the ablation harness."""
from .ablation import ablation_run, parse_variant, summarize, write_ablation_csv
from .metrics import Metrics, confusion_and_metrics, write_confusion_csv, write_metrics_csv
from .stft import frame_count, hann, stft, stft_axes, write_spectrogram_csv
from .tsne import DegenerateInput, TsneConfig, TsneResult, joint_probabilities, tsne, write_embedding_csv

__all__ = [
    "ablation_run", "parse_variant", "summarize", "write_ablation_csv", "Metrics",
    "confusion_and_metrics", "write_confusion_csv", "write_metrics_csv", "frame_count", "hann", "stft", "stft_axes",
    "write_spectrogram_csv", "DegenerateInput", "TsneConfig", "TsneResult", "joint_probabilities",
    "tsne", "write_embedding_csv",
]
