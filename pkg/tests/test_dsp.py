import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dft_gain
from smartwear.dsp import (DegenerateSignal, DspConfig, design_fir_lowpass, filtfilt, preprocess, segment,
                           zscore, zscore_stats)

FS = 130.0
FILT = design_fir_lowpass(FS, 10.0, 101)


def test_design_normalised_and_symmetric():
    h = FILT.taps
    assert abs(h.sum() - 1.0) <= 1e-12
    np.testing.assert_array_equal(h, h[::-1])
    assert len(h) == 101


@given(st.integers(1, 40).map(lambda k: 2 * k + 1), st.floats(0.5, 60.0))
def test_design_invariants_any_valid(taps, cutoff):
    f = design_fir_lowpass(FS, cutoff, taps)
    assert abs(f.taps.sum() - 1.0) <= 1e-12
    np.testing.assert_array_equal(f.taps, f.taps[::-1])


@pytest.mark.parametrize("fs,cutoff,taps", [(130, 0, 101), (130, 65, 101), (130, 10, 100), (130, 10, 1)])
def test_design_rejects_invalid(fs, cutoff, taps):
    with pytest.raises(ValueError):
        design_fir_lowpass(fs, cutoff, taps)


def test_response_matches_dft_oracle():
    freqs = np.linspace(0, FS / 2, 131)
    np.testing.assert_allclose(np.abs(FILT.response(freqs)), dft_gain(FILT.taps, freqs, FS), atol=1e-12)


def test_constant_signal_passes_unchanged():
    np.testing.assert_allclose(filtfilt(FILT, np.full(1000, 3.7)), 3.7, atol=1e-12)


def _xcorr_lag(a, b, max_lag=20, start=650, width=2600):
    """Lag maximising sum a[t] b[t - k] over a fixed window (no wrap-around)."""
    lags = np.arange(-max_lag, max_lag + 1)
    ref = a[start:start + width]
    vals = [np.dot(ref, b[start - k:start - k + width]) for k in lags]
    return int(lags[int(np.argmax(vals))])


def test_passband_sinusoid_amplitude_and_zero_lag():
    t = np.arange(3900) / FS
    x = np.sin(2 * np.pi * 2.0 * t)
    y = filtfilt(FILT, x)
    core = slice(400, -400)
    amp = np.sqrt(2) * y[core].std()
    assert 0.99 <= amp <= 1.01
    assert _xcorr_lag(x, y) == 0


# whole numbers of cycles in the 20 s correlation window, so no edge bias
@pytest.mark.parametrize("f0", [0.5, 1.0, 3.0, 6.0, 8.0])
def test_zero_phase_for_passband_tones(f0):
    t = np.arange(3900) / FS
    x = np.cos(2 * np.pi * f0 * t + 0.4)
    assert _xcorr_lag(x, filtfilt(FILT, x), 30) == 0


def test_stopband_sinusoid_suppressed():
    t = np.arange(2600) / FS
    y = filtfilt(FILT, np.sin(2 * np.pi * 30.0 * t))
    assert np.abs(y[400:-400]).max() <= 10 ** (-80 / 20)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 10 ** 6))
def test_filtfilt_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(400), rng.standard_normal(400)
    lhs = filtfilt(FILT, a * x + b * y)
    rhs = a * filtfilt(FILT, x) + b * filtfilt(FILT, y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9, rtol=0)


def test_filtfilt_short_signal_and_2d():
    with pytest.raises(ValueError):
        filtfilt(FILT, np.zeros(303))
    x = np.random.default_rng(0).standard_normal((3, 500))
    y = filtfilt(FILT, x)
    assert y.shape == x.shape
    np.testing.assert_array_equal(y[1], filtfilt(FILT, x[1]))


def test_zscore_examples():
    np.testing.assert_allclose(zscore([1.0, 2.0, 3.0]), [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
    with pytest.raises(DegenerateSignal):
        zscore(np.full(10, 2.5))
    x = np.random.default_rng(0).standard_normal((3, 777))
    z = zscore(x)
    np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=1), 1, atol=1e-9)
    np.testing.assert_allclose(zscore(z), z, atol=1e-9)


def test_zscore_per_channel_dead_channel():
    x = np.random.default_rng(1).standard_normal((3, 50))
    x[2] = 0.04
    with pytest.raises(DegenerateSignal):
        zscore_stats(x)


@pytest.mark.parametrize("length,count", [(3900, 5), (1300, 1), (1299, 0), (1949, 1), (1950, 2)])
def test_segment_counts(length, count):
    x = np.arange(3 * length, dtype=float).reshape(3, length)
    segs = segment(x)
    assert len(segs) == count
    if length == 1300:
        np.testing.assert_array_equal(segs[0], x)


@given(st.integers(1, 3000), st.integers(1, 400), st.integers(1, 400))
def test_segment_formula_and_reconstruction(length, win, hop):
    x = np.arange(length, dtype=float)[None].repeat(3, 0)
    segs = segment(x, win, hop)
    expect = (length - win) // hop + 1 if length >= win else 0
    assert len(segs) == expect
    for k, s in enumerate(segs):
        np.testing.assert_array_equal(s, x[:, k * hop:k * hop + win])
    if segs and hop <= win:
        prefix = np.concatenate([s[:, :hop] for s in segs], axis=1)
        np.testing.assert_array_equal(prefix, x[:, :prefix.shape[1]])


def test_preprocess_order_and_stats():
    rng = np.random.default_rng(2)
    x = 0.03 + 0.01 * rng.standard_normal((3, 3900))
    windows, (mean, std) = preprocess(x)
    filtered = filtfilt(FILT, x)
    np.testing.assert_allclose(mean, filtered.mean(axis=1), rtol=1e-12)
    np.testing.assert_allclose(windows[0], ((filtered - mean[:, None]) / std[:, None])[:, :1300], atol=1e-12)
    raw_windows, _ = preprocess(x, DspConfig(apply_filter=False))
    np.testing.assert_allclose(raw_windows[0], zscore(x)[:, :1300], atol=1e-12)
