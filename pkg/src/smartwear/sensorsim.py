"""Synthetic 3-channel strain traces for the six bench-press execution classes.

Channels are ordered (abdomen, chest-left, chest-right).  The abdomen carries
the breathing pattern; the chest channels carry pectoral activation bursts plus
a small amount of respiratory cross-talk.  Noise (broadband content above
10 Hz, slow drift and sparse motion spikes) is injected on top of the clean
composition and the result is clamped to the sensor's strain range.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

CHANNELS = ("abd", "chl", "chr")


class StrainRangeError(ValueError):
    pass


@dataclass(frozen=True)
class SensorModel:
    r0: float = 1000.0
    gauge_factor: float = 433.0
    strain_max: float = 0.10

    def __post_init__(self):
        if self.r0 <= 0 or self.gauge_factor <= 0:
            raise ValueError("r0 and gauge_factor must be positive")
        if not 0 < self.strain_max <= 0.10:
            raise ValueError("strain_max must lie in (0, 0.10]")


def resistance_of_strain(model: SensorModel, strain):
    """Linear resistance-strain law ``r0 * (1 + GF * strain)`` (ohm)."""
    eps = np.asarray(strain, dtype=float)
    if np.any(eps < 0) or np.any(eps > model.strain_max) or np.any(~np.isfinite(eps)):
        raise StrainRangeError(f"strain outside [0, {model.strain_max}]")
    r = model.r0 * (1.0 + model.gauge_factor * eps)
    return float(r) if np.ndim(strain) == 0 else r


def strain_of_resistance(model: SensorModel, resistance):
    return (np.asarray(resistance, dtype=float) / model.r0 - 1.0) / model.gauge_factor


@dataclass(frozen=True)
class SubjectPreset:
    id: int
    amplitude_scale: float
    rep_period_s: float
    breath_depth: float = 1.0

    def __post_init__(self):
        if self.amplitude_scale <= 0:
            raise ValueError("amplitude_scale must be positive")
        if not 2.0 <= self.rep_period_s <= 8.0:
            raise ValueError("rep_period_s must lie in [2, 8] s")


# Amplitude ranks follow max bench press (60, 80, 90, 60, 70 kg for ids 1..5).
SUBJECTS = (
    SubjectPreset(1, 0.80, 4.0, 1.00),
    SubjectPreset(2, 1.05, 3.6, 0.90),
    SubjectPreset(3, 1.15, 3.2, 1.10),
    SubjectPreset(4, 0.85, 4.4, 0.95),
    SubjectPreset(5, 1.00, 3.8, 1.05),
)


def subject_preset(subject_id: int) -> SubjectPreset:
    for p in SUBJECTS:
        if p.id == subject_id:
            return p
    raise KeyError(f"no subject preset {subject_id}")


_CLASS_TABLE = {
    1: ("Even", "Bal"),
    2: ("Even", "L"),
    3: ("Even", "R"),
    4: ("Uneven", "Bal"),
    5: ("Uneven", "L"),
    6: ("Uneven", "R"),
}
CLASS_NAMES = {cid: f"{b}-{d}" for cid, (b, d) in _CLASS_TABLE.items()}


@dataclass(frozen=True)
class ClassSpec:
    class_id: int
    breathing: str
    dominance: str
    asymmetry_ratio: float = 1.0
    breath_irregularity: float = 0.0

    def __post_init__(self):
        if _CLASS_TABLE.get(self.class_id) != (self.breathing, self.dominance):
            raise ValueError(f"class {self.class_id} does not map to {self.breathing}-{self.dominance}")
        if self.asymmetry_ratio < 1:
            raise ValueError("asymmetry_ratio must be >= 1")
        if (self.asymmetry_ratio == 1) != (self.dominance == "Bal"):
            raise ValueError("asymmetry_ratio is 1 exactly when dominance is Bal")
        if not 0 <= self.breath_irregularity <= 1:
            raise ValueError("breath_irregularity must lie in [0, 1]")
        if (self.breath_irregularity == 0) != (self.breathing == "Even"):
            raise ValueError("breath_irregularity is 0 exactly when breathing is Even")

    @property
    def name(self):
        return CLASS_NAMES[self.class_id]


def class_spec(class_id: int, asymmetry_ratio: float = 1.4, breath_irregularity: float = 0.7) -> ClassSpec:
    """Class spec with default knobs; Bal/Even classes get the neutral values."""
    breathing, dominance = _CLASS_TABLE[class_id]
    return ClassSpec(
        class_id,
        breathing,
        dominance,
        asymmetry_ratio=1.0 if dominance == "Bal" else asymmetry_ratio,
        breath_irregularity=0.0 if breathing == "Even" else breath_irregularity,
    )


@dataclass(frozen=True)
class GeneratorConfig:
    fs: float = 130.0
    duration_s: float = 30.0
    noise_hf_std: float = 0.002
    drift_amp: float = 0.002
    artifact_rate: float = 2.0
    seed: int = 0
    breath_peak: float = 0.04
    muscle_peak: float = 0.06
    baseline: float = 0.015
    crosstalk: float = 0.2
    tremor_depth: float = 0.35
    exertion_fraction: float = 0.4

    def __post_init__(self):
        # tremor tops out at 8 Hz; 10 Hz is the highest deliberately synthesised band
        if self.fs <= 2 * 10.0:
            raise ValueError("fs must exceed twice the highest synthesised frequency")
        if self.duration_s < 10:
            raise ValueError("duration_s must be at least 10 s")
        if min(self.noise_hf_std, self.drift_amp, self.artifact_rate) < 0:
            raise ValueError("noise parameters must be non-negative")
        if not 0.1 <= self.exertion_fraction <= 0.9:
            raise ValueError("exertion_fraction must lie in [0.1, 0.9]")

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration_s))

    @classmethod
    def high_noise(cls, **overrides):
        """Preset where >10 Hz noise swamps the chest bursts' fine structure."""
        kw = dict(noise_hf_std=0.02, drift_amp=0.004, artifact_rate=4.0, baseline=0.03)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class StrainSession:
    fs: float
    channels: np.ndarray
    label: ClassSpec
    subject: SubjectPreset
    rep_marks: list
    seed: int = 0
    session_id: str = ""
    provenance: str = "synthetic"
    strain_max: float = 0.10

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.ndim != 2 or self.channels.shape[0] != 3:
            raise ValueError("channels must be a 3 x L array")
        if self.channels.size and (self.channels.min() < 0 or self.channels.max() > self.strain_max):
            raise StrainRangeError("session strain outside the sensor range")
        self.rep_marks = [tuple(int(v) for v in m) for m in self.rep_marks]
        for k, (a, b, c) in enumerate(self.rep_marks):
            if not a < b < c:
                raise ValueError(f"rep mark {k} is not strictly increasing")
            if k and a < self.rep_marks[k - 1][2]:
                raise ValueError("rep marks overlap")
        if self.rep_marks and (self.rep_marks[0][0] < 0 or self.rep_marks[-1][2] > self.channels.shape[1]):
            raise ValueError("rep marks out of bounds")

    def __len__(self):
        return self.channels.shape[1]

    def manifest(self) -> dict:
        return {
            "session_id": self.session_id,
            "fs": self.fs,
            "label": asdict(self.label),
            "subject": asdict(self.subject),
            "rep_marks": [list(m) for m in self.rep_marks],
            "seed": self.seed,
            "provenance": self.provenance,
            "strain_max": self.strain_max,
            "n_samples": len(self),
        }


def _rep_schedule(cfg: GeneratorConfig, preset: SubjectPreset):
    n = cfg.n_samples
    period = preset.rep_period_s * cfg.fs
    marks = []
    k = 0
    while True:
        start = int(round(k * period))
        end = int(round((k + 1) * period))
        if end > n:
            break
        ex_end = start + int(round(cfg.exertion_fraction * (end - start)))
        marks.append((start, ex_end, end))
        k += 1
    return marks


def _cycle(n_exhale, n_inhale):
    """One breath cycle: raised-cosine exhale 1 -> 0 then inhale 0 -> 1."""
    t_ex = np.arange(n_exhale) / max(n_exhale, 1)
    t_in = np.arange(n_inhale) / max(n_inhale, 1)
    return np.concatenate([0.5 * (1 + np.cos(np.pi * t_ex)), 0.5 * (1 - np.cos(np.pi * t_in))])


def synth_breath(cfg: GeneratorConfig, spec: ClassSpec, preset: SubjectPreset):
    """Abdomen breath strain and the rep schedule ``[(start, exertion_end, end), ...]``.

    Even breathing exhales exactly over each exertion span.  Irregular breathing
    jitters the cycle length, shifts its phase against the reps and inserts
    breath-hold plateaus; every perturbation scales with ``breath_irregularity``.
    """
    n = cfg.n_samples
    rng = np.random.default_rng([cfg.seed, 1])
    marks = _rep_schedule(cfg, preset)
    amp = cfg.breath_peak * preset.amplitude_scale * preset.breath_depth
    irr = spec.breath_irregularity
    period = preset.rep_period_s * cfg.fs
    frac = cfg.exertion_fraction

    wave = []
    total = 0
    # before the first rep the subject is at full inhale
    offset = int(round(irr * rng.uniform(0.2, 0.8) * period))
    if offset:
        wave.append(np.ones(offset))
        total += offset
    k = 0
    while total < n:
        jitter = irr * rng.uniform(-0.45, 0.45)
        frac_k = frac + irr * rng.uniform(-0.15, 0.15)
        hold = rng.uniform() < irr
        hold_len = int(round(irr * rng.uniform(1.3, 2.6) * cfg.fs)) if hold else 0
        hold_at_top = rng.uniform() < 0.5
        if irr == 0 and k < len(marks):
            s, e, f = marks[k]
            n_ex, n_in = e - s, f - e
        else:
            length = max(int(round(period * (1 + jitter))), 8)
            n_ex = int(round(frac_k * length))
            n_in = length - n_ex
        cyc = _cycle(n_ex, n_in)
        if hold_len:
            if hold_at_top:
                cyc = np.concatenate([np.ones(hold_len), cyc])
            else:
                cyc = np.concatenate([cyc[:n_ex], np.zeros(hold_len), cyc[n_ex:]])
        wave.append(cyc)
        total += len(cyc)
        k += 1
    breath = np.concatenate(wave)[:n] if wave else np.ones(n)
    return amp * breath, marks


def synth_muscle(cfg: GeneratorConfig, spec: ClassSpec, preset: SubjectPreset, rep_marks):
    """Left and right pectoral strain: one tremor-modulated burst per rep."""
    if rep_marks is None or len(rep_marks) == 0:
        raise ValueError("rep_marks must hold at least one rep")
    n = cfg.n_samples
    rng = np.random.default_rng([cfg.seed, 2])
    env = np.zeros(n)
    for s, e, f in rep_marks:
        gain = rng.uniform(0.9, 1.1)
        f_tremor = rng.uniform(4.0, 8.0)
        phase = rng.uniform(0, 2 * np.pi)
        rise = np.sin(0.5 * np.pi * np.arange(e - s) / (e - s)) ** 2
        fall = np.cos(0.5 * np.pi * np.arange(f - e) / (f - e)) ** 2
        burst = np.concatenate([rise, fall])
        t = np.arange(f - s) / cfg.fs
        carrier = 1.0 + cfg.tremor_depth * np.sin(2 * np.pi * f_tremor * t + phase)
        env[s:f] += gain * burst * carrier
    strong = cfg.muscle_peak * preset.amplitude_scale / (1.0 + cfg.tremor_depth) * env
    weak = strong / spec.asymmetry_ratio
    if spec.dominance == "L":
        return strong, weak
    if spec.dominance == "R":
        return weak, strong
    return strong, strong.copy()


def _hf_noise(rng, n, fs, std, f_lo=10.0):
    if std == 0:
        return np.zeros(n)
    spec = np.fft.rfft(rng.standard_normal(n))
    spec[np.fft.rfftfreq(n, 1 / fs) <= f_lo] = 0
    x = np.fft.irfft(spec, n)
    return std * x / x.std()


def _noise(cfg: GeneratorConfig, n):
    rng = np.random.default_rng([cfg.seed, 3])
    t = np.arange(n) / cfg.fs
    out = np.zeros((3, n))
    for ch in range(3):
        out[ch] += _hf_noise(rng, n, cfg.fs, cfg.noise_hf_std)
        if cfg.drift_amp:
            f = rng.uniform(0.01, 0.05)
            out[ch] += cfg.drift_amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    if cfg.artifact_rate:
        n_events = rng.poisson(cfg.artifact_rate * cfg.duration_s / 60.0)
        for _ in range(n_events):
            center = rng.uniform(0, n)
            width = rng.uniform(0.02, 0.06) * cfg.fs
            amp = rng.uniform(0.5, 1.5) * 0.01 * rng.choice([-1.0, 1.0])
            bump = np.exp(-0.5 * ((np.arange(n) - center) / width) ** 2)
            out += amp * rng.uniform(0.5, 1.0, size=(3, 1)) * bump
    return out


def clean_channels(cfg: GeneratorConfig, spec: ClassSpec, preset: SubjectPreset):
    """Noiseless composition (before clamping) and the rep schedule."""
    breath, marks = synth_breath(cfg, spec, preset)
    left, right = synth_muscle(cfg, spec, preset, marks)
    chest_breath = cfg.crosstalk * breath
    clean = np.stack([
        cfg.baseline + breath,
        cfg.baseline + chest_breath + left,
        cfg.baseline + chest_breath + right,
    ])
    return clean, marks


def generate_session(cfg: GeneratorConfig, spec: ClassSpec, preset: SubjectPreset,
                     sensor: SensorModel = SensorModel(), session_id: str = "") -> StrainSession:
    clean, marks = clean_channels(cfg, spec, preset)
    x = clean + _noise(cfg, clean.shape[1])
    x = np.clip(x, 0.0, sensor.strain_max)
    return StrainSession(cfg.fs, x, spec, preset, marks, seed=cfg.seed, session_id=session_id,
                         strain_max=sensor.strain_max)


def session_seed(base_seed: int, class_id: int, subject_id: int, index: int) -> int:
    ss = np.random.SeedSequence([base_seed, class_id, subject_id, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def generate_corpus(cfg: GeneratorConfig = GeneratorConfig(), classes=range(1, 7), subjects=SUBJECTS,
                    sessions_per_class: int = 4, asymmetry_ratio=1.4, breath_irregularity=0.7):
    """Sessions for every (class, subject, repeat) combination, in that order."""
    out = []
    for cid in classes:
        spec = class_spec(cid, asymmetry_ratio, breath_irregularity)
        for preset in subjects:
            for r in range(sessions_per_class):
                scfg = replace(cfg, seed=session_seed(cfg.seed, cid, preset.id, r))
                sid = f"c{cid}_s{preset.id}_r{r}"
                out.append(generate_session(scfg, spec, preset, session_id=sid))
    return out


def save_session(session: StrainSession, path_stem) -> tuple:
    """Write ``<stem>.csv`` (index, abd, chl, chr) and ``<stem>.json``."""
    stem = os.fspath(path_stem)
    csv_path, json_path = stem + ".csv", stem + ".json"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("index",) + CHANNELS)
        for i, row in enumerate(session.channels.T):
            w.writerow([i] + [f"{v:.6g}" for v in row])
    with open(json_path, "w") as fh:
        json.dump(session.manifest(), fh, indent=2)
    return csv_path, json_path


def load_session(path_stem) -> StrainSession:
    stem = os.fspath(path_stem)
    if stem.endswith(".csv") or stem.endswith(".json"):
        stem = stem.rsplit(".", 1)[0]
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    data = np.loadtxt(stem + ".csv", delimiter=",", skiprows=1, ndmin=2)
    channels = data[:, 1:4].T if data.size else np.zeros((3, 0))
    return StrainSession(
        meta["fs"], channels, ClassSpec(**meta["label"]), SubjectPreset(**meta["subject"]),
        meta["rep_marks"], seed=meta["seed"], session_id=meta["session_id"],
        provenance=meta.get("provenance", "synthetic"), strain_max=meta.get("strain_max", 0.10),
    )
