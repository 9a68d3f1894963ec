"""Preprocessing chain: FIR low-pass, zero-phase filtering, Z-score, windowing."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class DegenerateSignal(ValueError):
    """Raised for a zero-variance (dead) channel."""


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    fs: float
    cutoff: float

    @property
    def num_taps(self):
        return len(self.taps)

    def response(self, freqs):
        """Complex frequency response at ``freqs`` (Hz)."""
        n = np.arange(self.num_taps)
        f = np.atleast_1d(np.asarray(freqs, dtype=float))
        return np.exp(-2j * np.pi * np.outer(f, n) / self.fs) @ self.taps


def design_fir_lowpass(fs: float, cutoff: float, num_taps: int = 101) -> FirFilter:
    """Hamming-windowed sinc low-pass, normalised to unit DC gain."""
    if not 0 < cutoff < fs / 2:
        raise ValueError(f"cutoff must lie in (0, fs/2), got {cutoff} for fs={fs}")
    if num_taps < 3 or num_taps % 2 == 0:
        raise ValueError("num_taps must be an odd integer >= 3")
    m = (num_taps - 1) // 2
    n = np.arange(num_taps)
    h = np.sinc(2.0 * cutoff / fs * (n - m)) * np.hamming(num_taps)
    # np.hamming is symmetric only up to rounding
    h = 0.5 * (h + h[::-1])
    h = h / h.sum()
    return FirFilter(h, float(fs), float(cutoff))


def _odd_reflect(x, pad):
    left = 2 * x[0] - x[pad:0:-1]
    right = 2 * x[-1] - x[-2:-pad - 2:-1]
    return np.concatenate([left, x, right])


def filtfilt(filt: FirFilter, x):
    """Forward-backward FIR filtering (zero phase, magnitude response |H|^2)."""
    x = np.asarray(x, dtype=float)
    pad = 3 * filt.num_taps
    if x.ndim != 1:
        return np.stack([filtfilt(filt, row) for row in x])
    if len(x) <= pad:
        raise ValueError(f"signal of length {len(x)} too short; need more than {pad} samples")
    xp = _odd_reflect(x, pad)
    n = len(xp)
    y = np.convolve(xp, filt.taps)[:n]
    y = np.convolve(y[::-1], filt.taps)[:n][::-1]
    return y[pad:pad + len(x)]


def zscore_stats(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("need at least two samples")
    mean = x.mean(axis=-1)
    std = x.std(axis=-1)
    scale = np.maximum(np.abs(mean), 1.0)
    if np.any(std <= 1e-12 * scale) or not np.all(np.isfinite(std)):
        raise DegenerateSignal("zero-variance channel")
    return mean, std


def zscore(x, stats=None):
    """Standardise along the last axis with population (ddof=0) statistics."""
    x = np.asarray(x, dtype=float)
    mean, std = zscore_stats(x) if stats is None else stats
    mean = np.asarray(mean)[..., None] if np.ndim(mean) else mean
    std = np.asarray(std)[..., None] if np.ndim(std) else std
    return (x - mean) / std


def segment(channels, window_len: int = 1300, hop: int = 650):
    """Aligned windows across channels; any trailing remainder is dropped."""
    x = np.asarray(channels)
    if window_len < 1 or hop < 1:
        raise ValueError("window_len and hop must be positive")
    length = x.shape[-1]
    if length < window_len:
        return []
    count = (length - window_len) // hop + 1
    return [x[..., k * hop:k * hop + window_len].copy() for k in range(count)]


@dataclass(frozen=True)
class DspConfig:
    fs: float = 130.0
    cutoff: float = 10.0
    num_taps: int = 101
    window_len: int = 1300
    hop: int = 650
    apply_filter: bool = True

    def to_dict(self):
        return asdict(self)


def preprocess(channels, cfg: DspConfig = DspConfig()):
    """Filter -> normalise -> segment.  Returns (windows, (mean, std))."""
    x = np.asarray(channels, dtype=float)
    if cfg.apply_filter:
        x = filtfilt(design_fir_lowpass(cfg.fs, cfg.cutoff, cfg.num_taps), x)
    stats = zscore_stats(x)
    return segment(zscore(x, stats), cfg.window_len, cfg.hop), stats
