import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smartwear.dataset import (AUG_KINDS, Dataset, DatasetChecksumError, DatasetVersionError, LabeledWindow,
                               augment, augment_all, build_dataset, build_windows, load_dataset, save_dataset,
                               split)
from smartwear.dsp import DspConfig
from smartwear.sensorsim import SUBJECTS, GeneratorConfig, class_spec, generate_corpus, generate_session


def _raw(i, cid=1):
    data = np.random.default_rng(i).standard_normal((3, 1300)).astype(np.float32)
    return LabeledWindow(f"s{i // 5}_w{i % 5:02d}", data, cid, f"s{i // 5}", 1)


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(GeneratorConfig(seed=9), subjects=SUBJECTS[:1], sessions_per_class=1)


def test_build_windows_counts_and_order(corpus):
    ws = build_windows(corpus[:2])
    assert len(ws) == 10
    assert [w.window_id for w in ws[:6]] == ["c1_s1_r0_w00", "c1_s1_r0_w01", "c1_s1_r0_w02", "c1_s1_r0_w03",
                                             "c1_s1_r0_w04", "c2_s1_r0_w00"]
    assert {w.class_id for w in ws[:5]} == {1} and {w.class_id for w in ws[5:]} == {2}
    assert all(w.data.shape == (3, 1300) for w in ws)
    assert build_windows([]) == []


def test_build_windows_rejects_fs_mismatch(corpus):
    with pytest.raises(ValueError):
        build_windows(corpus[:1], DspConfig(fs=100.0))


def test_window_invariants():
    with pytest.raises(ValueError):
        LabeledWindow("x", np.zeros((2, 1300)), 1, "s", 1)
    with pytest.raises(ValueError):
        LabeledWindow("x", np.zeros((3, 1300)), 7, "s", 1)
    with pytest.raises(ValueError):
        LabeledWindow("x", np.zeros((3, 1300)), 1, "s", 1, augmentation="jitter")


def test_augment_identities():
    w = _raw(0)
    assert np.array_equal(augment(w, "scale", 0, factor=1.0).data, w.data)
    there = augment(w, "shift", 0, shift=57)
    back = np.roll(there.data, -57, axis=-1)
    np.testing.assert_array_equal(back, w.data)
    with pytest.raises(ValueError):
        augment(there, "jitter", 1)
    with pytest.raises(ValueError):
        augment(w, "warp", 1)


@pytest.mark.parametrize("kind", AUG_KINDS)
def test_augment_preserves_label_shape_and_lineage(kind):
    w = _raw(3, cid=5)
    a = augment(w, kind, 11)
    assert a.class_id == 5 and a.data.shape == w.data.shape
    assert a.parent_id == w.window_id and a.augmentation == kind and not a.is_raw


def test_jitter_sigma_monte_carlo():
    w = LabeledWindow("z", np.zeros((3, 1300), np.float32), 1, "s", 1)
    deltas = np.concatenate([augment(w, "jitter", s).data.ravel() for s in range(26)])[:100_000]
    assert len(deltas) == 100_000
    assert 0.045 <= deltas.std() <= 0.055


@given(st.integers(0, 2 ** 32 - 1))
def test_shift_and_scale_ranges(seed):
    w = _raw(1)
    assert abs(augment(w, "shift", seed).aug_params["shift"]) <= 130
    assert 0.8 <= augment(w, "scale", seed).aug_params["factor"] <= 1.2


def test_split_exact_fractions_and_leakage():
    raw = [_raw(i) for i in range(100)]
    aug = augment_all(raw, 0)
    s = split(raw + aug, seed=4)
    raw_ids = {w.window_id for w in raw}
    assert (len([i for i in s.train if i in raw_ids]), len([i for i in s.val if i in raw_ids]), len(s.test)) \
        == (70, 15, 15)
    assert set(s.test) <= raw_ids
    test_set = set(s.test)
    for a in aug:
        assert (a.window_id in s.train or a.window_id in s.val) == (a.parent_id not in test_set)
        if a.window_id in s.train:
            assert a.parent_id in s.train
    assert split(raw + aug, seed=4) == s


@given(st.integers(20, 200), st.integers(0, 10 ** 6))
def test_split_partition_properties(n, seed):
    raw = [_raw(i) for i in range(n)]
    s = split(raw, seed=seed)
    ids = s.train + s.val + s.test
    assert len(ids) == len(set(ids)) == n
    quotas = np.array([0.7, 0.15, 0.15]) * n
    counts = np.array([len(s.train), len(s.val), len(s.test)])
    assert np.all(np.abs(counts - quotas) < 1)


def test_split_rejects_too_few():
    with pytest.raises(ValueError):
        split([_raw(i) for i in range(19)])


def test_build_dataset_histogram_and_arrays(corpus):
    ds = build_dataset(corpus, split_seed=1, augment_seed=2)
    assert ds.class_histogram() == {str(c): 5 for c in range(1, 7)}
    assert len(ds) == 30 * 4
    X, y = ds.arrays("test")
    assert X.shape == (len(ds.split.test), 3, 1300) and X.dtype == np.float32
    assert all(ds[i].is_raw for i in ds.split.test)
    assert set(ds.zscore_stats) == {s.session_id for s in corpus}


def test_build_dataset_deterministic(corpus):
    a = build_dataset(corpus, split_seed=3, augment_seed=3)
    b = build_dataset(corpus, split_seed=3, augment_seed=3)
    assert a == b


def test_dataset_roundtrip(corpus, tmp_path):
    ds = build_dataset(corpus, split_seed=0, augment_seed=5)
    manifest = save_dataset(ds, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    assert back == ds
    recount = {str(c): sum(1 for w in ds.windows if w.is_raw and w.class_id == c) for c in range(1, 7)}
    assert manifest["class_histogram"] == recount


def test_dataset_corruption_detected(corpus, tmp_path):
    ds = build_dataset(corpus[:4] + corpus[6:], augment_kinds=())
    path = tmp_path / "d"
    save_dataset(ds, path)
    victim = path / "windows" / (ds.windows[0].window_id + ".csv")
    victim.write_bytes(victim.read_bytes()[:-50])
    with pytest.raises(DatasetChecksumError):
        load_dataset(path)


def test_dataset_version_checked(corpus, tmp_path):
    ds = build_dataset(corpus, augment_kinds=())
    path = tmp_path / "d"
    save_dataset(ds, path)
    man = json.loads((path / "manifest.json").read_text())
    man["version"] = 999
    (path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(DatasetVersionError):
        load_dataset(path)
    (path / "manifest.json").write_text("{not json")
    with pytest.raises(DatasetChecksumError):
        load_dataset(path)


def test_dataset_rejects_duplicates():
    w = _raw(0)
    with pytest.raises(ValueError):
        Dataset([w, w])


def test_window_csv_float32_exact(tmp_path):
    s = generate_session(GeneratorConfig(seed=1), class_spec(3), SUBJECTS[2], session_id="q")
    ds = build_dataset([s] * 1 + [generate_session(GeneratorConfig(seed=i), class_spec(1), SUBJECTS[0],
                                                   session_id=f"p{i}") for i in range(4)], augment_kinds=())
    save_dataset(ds, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    for a, b in zip(ds.windows, back.windows):
        assert a.data.tobytes() == b.data.tobytes()
    assert os.listdir(tmp_path / "d" / "windows")
