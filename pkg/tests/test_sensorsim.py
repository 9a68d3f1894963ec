import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smartwear.sensorsim import (SUBJECTS, ClassSpec, GeneratorConfig, SensorModel, StrainRangeError,
                                 StrainSession, class_spec, clean_channels, generate_corpus, generate_session,
                                 load_session, resistance_of_strain, save_session, strain_of_resistance,
                                 subject_preset, synth_breath, synth_muscle)

SENSOR = SensorModel()
QUIET = dict(noise_hf_std=0.0, drift_amp=0.0, artifact_rate=0.0)


@pytest.mark.parametrize("eps,ohms", [(0.0, 1000.0), (0.01, 5330.0), (0.10, 44300.0)])
def test_resistance_examples(eps, ohms):
    assert resistance_of_strain(SENSOR, eps) == pytest.approx(ohms, rel=1e-12)


@pytest.mark.parametrize("eps", [-1e-6, 0.1000001, np.nan])
def test_resistance_out_of_range(eps):
    with pytest.raises(StrainRangeError):
        resistance_of_strain(SENSOR, eps)


@given(st.floats(0, 0.05), st.floats(0, 0.05))
def test_resistance_linear_and_monotone(e1, e2):
    r = lambda e: resistance_of_strain(SENSOR, e)  # noqa: E731
    assert r(e1) + r(e2) - SENSOR.r0 == pytest.approx(r(e1 + e2), rel=1e-12)
    if e1 < e2:
        assert r(e1) <= r(e2)
    assert strain_of_resistance(SENSOR, r(e1)) == pytest.approx(e1, abs=1e-15)


def test_sensor_and_preset_validation():
    with pytest.raises(ValueError):
        SensorModel(strain_max=0.2)
    with pytest.raises(ValueError):
        SensorModel(r0=0)
    with pytest.raises(KeyError):
        subject_preset(9)
    with pytest.raises(ValueError):
        ClassSpec(2, "Even", "L", asymmetry_ratio=1.0)
    with pytest.raises(ValueError):
        ClassSpec(4, "Uneven", "Bal", breath_irregularity=0.0)
    with pytest.raises(ValueError):
        ClassSpec(1, "Uneven", "Bal")
    with pytest.raises(ValueError):
        GeneratorConfig(duration_s=5)


def test_presets_amplitudes():
    assert sorted(p.amplitude_scale for p in SUBJECTS) == [0.8, 0.85, 1.0, 1.05, 1.15]


def test_duration_sets_length():
    cfg = GeneratorConfig(duration_s=10)
    breath, _ = synth_breath(cfg, class_spec(1), SUBJECTS[0])
    assert len(breath) == 1300


def _autocorr_peak_lag(x, lo, hi):
    x = x - x.mean()
    # unbiased estimate: the raw sum shrinks with lag and would pull the peak early
    ac = np.correlate(x, x, mode="full")[len(x) - 1:] / (len(x) - np.arange(len(x)))
    return lo + int(np.argmax(ac[lo:hi]))


@pytest.mark.parametrize("preset", SUBJECTS)
def test_even_breath_autocorrelation_at_rep_period(preset):
    cfg = GeneratorConfig(seed=1, **QUIET)
    breath, _ = synth_breath(cfg, class_spec(1), preset)
    period = preset.rep_period_s * cfg.fs
    lag = _autocorr_peak_lag(breath, int(0.5 * period), int(1.5 * period))
    assert abs(lag - period) <= 2


def _longest_flat_run(x, tol):
    flat = np.abs(np.diff(x)) <= tol
    best = cur = 0
    for f in flat:
        cur = cur + 1 if f else 0
        best = max(best, cur)
    return best


@pytest.mark.parametrize("seed", range(5))
def test_uneven_breath_has_plateau(seed):
    cfg = GeneratorConfig(seed=seed, **QUIET)
    spec = class_spec(4, breath_irregularity=1.0)
    breath, _ = synth_breath(cfg, spec, SUBJECTS[seed])
    assert _longest_flat_run(breath, 1e-6 * breath.max()) >= cfg.fs


def _rep_peak_ratios(left, right, marks):
    return np.array([left[s:f].max() / right[s:f].max() for s, _, f in marks])


def test_muscle_balanced_and_dominant_ratios():
    cfg = GeneratorConfig(seed=4, **QUIET)
    preset = SUBJECTS[2]
    _, marks = synth_breath(cfg, class_spec(1), preset)
    ratios = _rep_peak_ratios(*synth_muscle(cfg, class_spec(1), preset, marks), marks)
    assert np.all((ratios >= 0.95) & (ratios <= 1.05))
    ratios = _rep_peak_ratios(*synth_muscle(cfg, class_spec(2), preset, marks), marks)
    assert 1.3 <= ratios.mean() <= 1.5
    l, r = synth_muscle(cfg, class_spec(3), preset, marks)
    assert 1.3 <= (1 / _rep_peak_ratios(l, r, marks)).mean() <= 1.5


def test_muscle_bursts_share_timing_and_are_flat_between_reps():
    cfg = GeneratorConfig(seed=0, **QUIET)
    _, marks = synth_breath(cfg, class_spec(2), SUBJECTS[0])
    left, right = synth_muscle(cfg, class_spec(2), SUBJECTS[0], marks)
    np.testing.assert_array_equal(left > 0, right > 0)
    outside = np.ones(cfg.n_samples, bool)
    for s, _, f in marks:
        outside[s:f] = False
    assert outside.any() and np.all(left[outside] == 0)


def test_muscle_needs_reps():
    cfg = GeneratorConfig()
    with pytest.raises(ValueError):
        synth_muscle(cfg, class_spec(1), SUBJECTS[0], [])


def test_asymmetry_knob_degenerates_to_balanced():
    cfg = GeneratorConfig(seed=2, **QUIET)
    _, marks = synth_breath(cfg, class_spec(1), SUBJECTS[1])
    near_bal = class_spec(2, asymmetry_ratio=1.0 + 1e-9)
    ratios = _rep_peak_ratios(*synth_muscle(cfg, near_bal, SUBJECTS[1], marks), marks)
    assert np.all(np.abs(ratios - 1) < 1e-6)


def test_generate_session_deterministic():
    cfg = GeneratorConfig(seed=11)
    a = generate_session(cfg, class_spec(5), SUBJECTS[3])
    b = generate_session(cfg, class_spec(5), SUBJECTS[3])
    assert a.channels.tobytes() == b.channels.tobytes()
    c = generate_session(GeneratorConfig(seed=12), class_spec(5), SUBJECTS[3])
    assert not np.array_equal(a.channels, c.channels)


def test_zero_noise_equals_clean():
    cfg = GeneratorConfig(seed=5, **QUIET)
    s = generate_session(cfg, class_spec(6), SUBJECTS[4])
    clean, marks = clean_channels(cfg, class_spec(6), SUBJECTS[4])
    np.testing.assert_array_equal(s.channels, clean)
    assert s.rep_marks == [tuple(m) for m in marks]


@pytest.mark.parametrize("cid", range(1, 7))
def test_abdomen_power_mostly_below_10hz(cid):
    cfg = GeneratorConfig(seed=cid)
    s = generate_session(cfg, class_spec(cid), SUBJECTS[cid % 5])
    x = s.channels[0]
    p = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(len(x), 1 / cfg.fs)
    assert p[f < 10].sum() / p.sum() >= 0.8


def test_strain_clamped_into_sensor_range():
    cfg = GeneratorConfig.high_noise(seed=0, baseline=0.0)
    s = generate_session(cfg, class_spec(1), SUBJECTS[0])
    assert s.channels.min() >= 0 and s.channels.max() <= SENSOR.strain_max


def test_session_validation():
    spec, preset = class_spec(1), SUBJECTS[0]
    with pytest.raises(StrainRangeError):
        StrainSession(130.0, np.full((3, 10), 0.2), spec, preset, [])
    with pytest.raises(ValueError):
        StrainSession(130.0, np.zeros((3, 10)), spec, preset, [(0, 5, 4)])
    with pytest.raises(ValueError):
        StrainSession(130.0, np.zeros((3, 10)), spec, preset, [(0, 2, 4), (3, 5, 6)])
    with pytest.raises(ValueError):
        StrainSession(130.0, np.zeros((3, 10)), spec, preset, [(0, 5, 11)])
    with pytest.raises(ValueError):
        StrainSession(130.0, np.zeros((2, 10)), spec, preset, [])


def test_corpus_layout():
    corpus = generate_corpus(GeneratorConfig(seed=0, duration_s=10), subjects=SUBJECTS[:2], sessions_per_class=2)
    assert len(corpus) == 6 * 2 * 2
    assert [s.session_id for s in corpus[:3]] == ["c1_s1_r0", "c1_s1_r1", "c1_s2_r0"]
    assert len({s.seed for s in corpus}) == len(corpus)


def test_session_save_load(tmp_path):
    s = generate_session(GeneratorConfig(seed=3), class_spec(5), SUBJECTS[1], session_id="x")
    save_session(s, tmp_path / "x")
    back = load_session(tmp_path / "x")
    assert back.label == s.label and back.subject == s.subject and back.rep_marks == s.rep_marks
    np.testing.assert_allclose(back.channels, s.channels, rtol=1e-5, atol=1e-12)
    assert load_session(str(tmp_path / "x") + ".csv").session_id == "x"
