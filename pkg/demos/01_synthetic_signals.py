"""
Synthetic strain signals
========================

Three strain channels per session: abdomen (breathing) and the left and right
chest (pectoral bursts).  Six classes cross breathing quality with muscle
dominance.
"""

import numpy as np

from smartwear.analyze import stft, stft_axes
from smartwear.sensorsim import (CLASS_NAMES, SUBJECTS, GeneratorConfig, SensorModel, class_spec,
                                 generate_session, resistance_of_strain)

# the sensor is linear: 1 kOhm unstretched, gauge factor 433
sensor = SensorModel()
for eps in (0.0, 0.01, 0.05, 0.10):
    print(f"strain {eps:5.2f} -> {resistance_of_strain(sensor, eps):8.0f} ohm")

# one 30 s session per class for subject 3
cfg = GeneratorConfig(seed=7)
for cid in range(1, 7):
    s = generate_session(cfg, class_spec(cid), SUBJECTS[2])
    abd, left, right = s.channels
    peaks = [left[a:b].max() / right[a:b].max() for a, _, b in s.rep_marks]
    print(f"class {cid} {CLASS_NAMES[cid]:11s} reps {len(s.rep_marks)}  "
          f"left/right peak ratio {np.mean(peaks):.2f}")

# spectrogram of the left chest channel: the slow burst envelope dominates and
# the tremor carrier adds a weaker 4-8 Hz band
s = generate_session(cfg, class_spec(2), SUBJECTS[2])
mag = stft(s.channels[1])
times, freqs = stft_axes(s.fs, len(mag))
band = (freqs >= 4) & (freqs <= 8)
print(f"{len(times)} frames x {len(freqs)} bins; "
      f"share of energy in 4-8 Hz: {np.sum(mag[:, band] ** 2) / np.sum(mag[:, 1:] ** 2):.2f}")
