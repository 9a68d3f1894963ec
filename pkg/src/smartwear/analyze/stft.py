"""Magnitude short-time Fourier transform for spectrogram export."""
from __future__ import annotations

import csv

import numpy as np


def hann(n: int):
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def frame_count(length: int, window_len: int = 128, hop: int = 32) -> int:
    if length < window_len:
        raise ValueError(f"signal of length {length} shorter than the window ({window_len})")
    return (length - window_len) // hop + 1


def stft(x, window_len: int = 128, hop: int = 32, window=None):
    """|DFT| of Hann-windowed frames; shape (frames, window_len // 2 + 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("stft expects a 1-D signal")
    n_frames = frame_count(len(x), window_len, hop)
    w = hann(window_len) if window is None else np.asarray(window, dtype=float)
    frames = np.lib.stride_tricks.sliding_window_view(x, window_len)[::hop][:n_frames]
    return np.abs(np.fft.rfft(frames * w, axis=1))


def stft_axes(fs: float, n_frames: int, window_len: int = 128, hop: int = 32):
    """Frame-centre times (s) and bin frequencies (Hz)."""
    times = (np.arange(n_frames) * hop + window_len / 2) / fs
    return times, np.fft.rfftfreq(window_len, 1 / fs)


def write_spectrogram_csv(mag, path, fs: float = 130.0, window_len: int = 128, hop: int = 32):
    times, freqs = stft_axes(fs, len(mag), window_len, hop)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s"] + [f"{f:.4f}" for f in freqs])
        for t, row in zip(times, mag):
            w.writerow([f"{t:.4f}"] + [f"{v:.6g}" for v in row])
