"""Labeled windows, augmentation, leakage-free splits and on-disk datasets.

A dataset directory holds ``manifest.json`` plus ``windows/<window_id>.csv``
(columns abd, chl, chr; one row per sample).  The manifest records the class
map, split lists, per-session Z-score statistics, seeds and a CRC-32 for every
window file.
"""
from __future__ import annotations

import io
import json
import os
import zlib
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from . import dsp
from .sensorsim import CHANNELS, CLASS_NAMES, SUBJECTS, GeneratorConfig, generate_corpus

FORMAT_VERSION = 1
AUG_KINDS = ("jitter", "shift", "scale")
FRACTIONS = (0.70, 0.15, 0.15)


class DatasetError(ValueError):
    pass


class DatasetVersionError(DatasetError):
    pass


class DatasetChecksumError(DatasetError):
    pass


@dataclass
class LabeledWindow:
    window_id: str
    data: np.ndarray
    class_id: int
    source_session: str
    subject_id: int
    augmentation: str | None = None
    aug_params: dict = field(default_factory=dict)
    parent_id: str | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] != 3:
            raise ValueError(f"window data must be 3 x L, got {self.data.shape}")
        if self.class_id not in CLASS_NAMES:
            raise ValueError(f"invalid class id {self.class_id}")
        if (self.augmentation is None) != (self.parent_id is None):
            raise ValueError("augmented windows must name their raw parent, raw windows must not")

    @property
    def is_raw(self):
        return self.augmentation is None

    def meta(self):
        return {
            "window_id": self.window_id,
            "class_id": self.class_id,
            "source_session": self.source_session,
            "subject_id": self.subject_id,
            "augmentation": self.augmentation,
            "aug_params": self.aug_params,
            "parent_id": self.parent_id,
        }

    def __eq__(self, other):
        if not isinstance(other, LabeledWindow):
            return NotImplemented
        return self.meta() == other.meta() and np.array_equal(self.data, other.data)


def build_windows(sessions, cfg: dsp.DspConfig = dsp.DspConfig(), stats_out=None):
    """Raw windows of every session, ordered by (session, window index).

    When ``stats_out`` is a dict it receives ``session_id -> {"mean", "std"}``.
    """
    windows = []
    for session in sessions:
        if session.fs != cfg.fs:
            raise ValueError(f"session {session.session_id} sampled at {session.fs} Hz, expected {cfg.fs}")
        segs, (mean, std) = dsp.preprocess(session.channels, cfg)
        if stats_out is not None:
            stats_out[session.session_id] = {"mean": mean.tolist(), "std": std.tolist()}
        for k, seg in enumerate(segs):
            windows.append(LabeledWindow(
                f"{session.session_id}_w{k:02d}", seg, session.label.class_id,
                session.session_id, session.subject.id,
            ))
    return windows


def augment(w: LabeledWindow, kind: str, seed: int, *, sigma=0.05, max_shift=130,
            scale_range=(0.8, 1.2), shift=None, factor=None) -> LabeledWindow:
    """One augmented copy of a raw window.

    ``shift`` / ``factor`` force the otherwise random shift or scale.
    """
    if not w.is_raw:
        raise ValueError("only raw windows can be augmented")
    rng = np.random.default_rng(seed)
    if kind == "jitter":
        data = w.data + rng.normal(0.0, sigma, size=w.data.shape)
        params = {"sigma": sigma, "seed": int(seed)}
    elif kind == "shift":
        k = int(rng.integers(-max_shift, max_shift + 1)) if shift is None else int(shift)
        data = np.roll(w.data, k, axis=-1)
        params = {"shift": k}
    elif kind == "scale":
        f = float(rng.uniform(*scale_range)) if factor is None else float(factor)
        data = w.data * np.float32(f)
        params = {"factor": f}
    else:
        raise ValueError(f"unknown augmentation {kind!r}")
    return replace(w, window_id=f"{w.window_id}_{kind}", data=data, augmentation=kind,
                   aug_params=params, parent_id=w.window_id)


def augment_all(windows, seed: int, kinds=AUG_KINDS):
    """One copy per kind for every raw window; seeds derived per (window, kind)."""
    out = []
    for i, w in enumerate(windows):
        if not w.is_raw:
            continue
        for j, kind in enumerate(kinds):
            s = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            out.append(augment(w, kind, s))
    return out


@dataclass
class SplitAssignment:
    train: list
    val: list
    test: list
    seed: int
    fractions: tuple = FRACTIONS

    def to_dict(self):
        return {"train": self.train, "val": self.val, "test": self.test, "seed": self.seed,
                "fractions": list(self.fractions)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["train"], d["val"], d["test"], d["seed"], tuple(d["fractions"]))


def _largest_remainder(n, fractions):
    quotas = [f * n for f in fractions]
    counts = [int(np.floor(q)) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split(windows, fractions=FRACTIONS, seed: int = 0, min_raw: int = 20) -> SplitAssignment:
    """Shuffle raw windows into train/val/test; augmented copies follow their parent.

    Children of test windows are excluded, so the test split is raw only.
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ValueError("fractions must be three numbers summing to 1")
    raw = [w.window_id for w in windows if w.is_raw]
    if len(raw) < min_raw:
        raise ValueError(f"need at least {min_raw} raw windows, got {len(raw)}")
    perm = np.random.default_rng(seed).permutation(len(raw))
    n_train, n_val, _ = _largest_remainder(len(raw), fractions)
    shuffled = [raw[i] for i in perm]
    parts = {
        "train": shuffled[:n_train],
        "val": shuffled[n_train:n_train + n_val],
        "test": shuffled[n_train + n_val:],
    }
    home = {wid: name for name, ids in parts.items() for wid in ids}
    for w in windows:
        if w.is_raw:
            continue
        where = home.get(w.parent_id)
        if where is None:
            raise ValueError(f"augmented window {w.window_id} has no raw parent in the dataset")
        if where != "test":
            parts[where].append(w.window_id)
    return SplitAssignment(parts["train"], parts["val"], parts["test"], seed, tuple(fractions))


@dataclass
class Dataset:
    windows: list
    split: SplitAssignment | None = None
    zscore_stats: dict = field(default_factory=dict)
    fs: float = 130.0
    dsp: dict = field(default_factory=lambda: dsp.DspConfig().to_dict())
    seeds: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {w.window_id: w for w in self.windows}
        if len(self._index) != len(self.windows):
            raise ValueError("duplicate window ids")

    def __getitem__(self, window_id):
        return self._index[window_id]

    def __len__(self):
        return len(self.windows)

    def subset(self, name):
        return [self._index[i] for i in getattr(self.split, name)]

    def arrays(self, name):
        """``(X [N, 3, L] float32, y [N] class ids)`` for a split."""
        ws = self.subset(name)
        if not ws:
            return np.zeros((0, 3, 0), np.float32), np.zeros(0, np.int64)
        return np.stack([w.data for w in ws]), np.array([w.class_id for w in ws], dtype=np.int64)

    def class_histogram(self, raw_only=True):
        counts = Counter(w.class_id for w in self.windows if w.is_raw or not raw_only)
        return {str(c): counts.get(c, 0) for c in sorted(CLASS_NAMES)}

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.windows == other.windows and
                (self.split.to_dict() if self.split else None) == (other.split.to_dict() if other.split else None)
                and self.zscore_stats == other.zscore_stats and self.fs == other.fs
                and self.dsp == other.dsp and self.seeds == other.seeds and self.info == other.info)


def build_dataset(sessions, cfg: dsp.DspConfig = dsp.DspConfig(), split_seed: int = 0,
                  augment_seed: int = 0, augment_kinds=AUG_KINDS, fractions=FRACTIONS) -> Dataset:
    stats = {}
    raw = build_windows(sessions, cfg, stats_out=stats)
    aug = augment_all(raw, augment_seed, augment_kinds) if augment_kinds else []
    windows = raw + aug
    assignment = split(windows, fractions, split_seed)
    return Dataset(windows, assignment, stats, cfg.fs, cfg.to_dict(),
                   {"split": split_seed, "augment": augment_seed},
                   {"n_sessions": len(sessions), "augment_kinds": list(augment_kinds or [])})


def planted_anomaly_dataset(gen_cfg: GeneratorConfig = GeneratorConfig(), subjects=SUBJECTS,
                            sessions_per_class: int = 4, segment_s: float = 2.0, seed: int = 0,
                            split_seed: int = 0, cfg: dsp.DspConfig = dsp.DspConfig(), base_class: int = 2,
                            planted_class: int = 5, amplitude: float = 1.0, burst_hz: float = 1.5):
    """Two-class set whose classes differ only inside one known segment per window.

    Both classes are cut from ``base_class`` sessions.  Windows of the planted
    class carry a short Hann-tapered burst of rapid shallow breathing on the
    abdomen channel, ``segment_s`` long at a random offset; everything outside
    that segment is statistically identical to the base class.  Returns the
    dataset and ``window_id -> (start, stop)`` sample bounds of each burst.
    """
    sessions = generate_corpus(gen_cfg, [base_class], subjects, 2 * sessions_per_class)
    first = [int(s.session_id.rsplit("_r", 1)[1]) < sessions_per_class for s in sessions]
    base = [s for s, f in zip(sessions, first) if f]
    donor = [s for s, f in zip(sessions, first) if not f]
    stats = {}
    windows = build_windows(base, cfg, stats)
    seg = int(round(segment_s * cfg.fs))
    burst = amplitude * np.sin(2 * np.pi * burst_hz * np.arange(seg) / cfg.fs) * np.hanning(seg)
    rng = np.random.default_rng(seed)
    segments = {}
    for w in build_windows(donor, cfg, stats):
        start = int(rng.integers(0, w.data.shape[1] - seg + 1))
        data = w.data.astype(np.float64)
        data[0, start:start + seg] += burst
        wid = f"planted_{w.window_id}"
        windows.append(LabeledWindow(wid, data, planted_class, w.source_session, w.subject_id))
        segments[wid] = (start, start + seg)
    ds = Dataset(windows, split(windows, FRACTIONS, split_seed), stats, cfg.fs, cfg.to_dict(),
                 {"split": split_seed, "planted": seed}, {"planted_segment_s": segment_s})
    return ds, segments


def cam_mass_near(cam, bounds, margin: int) -> float:
    """Fraction of a non-negative map's mass inside ``[start - margin, stop + margin)``."""
    cam = np.asarray(cam, dtype=float)
    total = cam.sum()
    if total <= 0:
        return 0.0
    lo, hi = max(0, bounds[0] - margin), min(len(cam), bounds[1] + margin)
    return float(cam[lo:hi].sum() / total)


def _window_csv(w: LabeledWindow) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(CHANNELS) + "\n")
    # 9 significant digits round-trip float32 exactly
    np.savetxt(buf, w.data.T, fmt="%.9g", delimiter=",")
    return buf.getvalue().encode()


def save_dataset(ds: Dataset, path) -> dict:
    path = os.fspath(path)
    os.makedirs(os.path.join(path, "windows"), exist_ok=True)
    checksums = {}
    for w in ds.windows:
        raw = _window_csv(w)
        with open(os.path.join(path, "windows", w.window_id + ".csv"), "wb") as fh:
            fh.write(raw)
        checksums[w.window_id] = zlib.crc32(raw)
    manifest = {
        "version": FORMAT_VERSION,
        "fs": ds.fs,
        "class_map": {str(k): v for k, v in CLASS_NAMES.items()},
        "dsp": ds.dsp,
        "seeds": ds.seeds,
        "info": ds.info,
        "split": ds.split.to_dict() if ds.split else None,
        "zscore_stats": ds.zscore_stats,
        "class_histogram": ds.class_histogram(),
        "windows": [w.meta() for w in ds.windows],
        "checksums": checksums,
    }
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def load_dataset(path) -> Dataset:
    path = os.fspath(path)
    try:
        with open(os.path.join(path, "manifest.json")) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DatasetChecksumError(f"manifest unreadable: {exc}") from exc
    if manifest.get("version") != FORMAT_VERSION:
        raise DatasetVersionError(f"dataset version {manifest.get('version')}, expected {FORMAT_VERSION}")
    windows = []
    for meta in manifest["windows"]:
        wid = meta["window_id"]
        with open(os.path.join(path, "windows", wid + ".csv"), "rb") as fh:
            raw = fh.read()
        if zlib.crc32(raw) != manifest["checksums"].get(wid):
            raise DatasetChecksumError(f"checksum mismatch for window {wid}")
        data = np.loadtxt(io.StringIO(raw.decode()), delimiter=",", skiprows=1, dtype=np.float32, ndmin=2).T
        windows.append(LabeledWindow(data=data, **meta))
    split_d = manifest.get("split")
    ds = Dataset(windows, SplitAssignment.from_dict(split_d) if split_d else None,
                 manifest["zscore_stats"], manifest["fs"], manifest["dsp"], manifest["seeds"],
                 manifest["info"])
    if ds.class_histogram() != manifest["class_histogram"]:
        raise DatasetChecksumError("class histogram does not match window labels")
    return ds
