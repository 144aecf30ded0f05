"""Timbre descriptors under the microscope.

Each detected event is described by 52 numbers: 13 mel cepstrum
coefficients, each summarized over the event's first 150 ms by 4
temporal cosine coefficients. This demo renders events of the three
built-in timbres, computes their descriptors, and projects them onto
their two main principal axes -- the classes form tight, well separated
islands, which is what makes the clustering stage work.

Run:  python3 demos/02_timbre_space.py
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sonoseq.features import timbre_descriptor
from sonoseq.onsets import detect_onsets
from sonoseq.sequences import synthesize_labeled_audio

FS = 44100
OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

labels = ["noise", "sine", "damped"]
events = [(0.5 + 0.4 * i, labels[i % 3]) for i in range(60)]
audio, annotations = synthesize_labeled_audio(events, seed=3)
onsets = detect_onsets(audio, FS)
descriptors = np.array([timbre_descriptor(audio, FS, t, window_ms=150.0)
                        for t in onsets])
classes = [annotations[i][1] for i in range(len(onsets))]
print(f"{len(descriptors)} descriptors of dimension {descriptors.shape[1]}")

# Distances: how much tighter is a class than the space between classes?
for name in labels:
    idx = [i for i, c in enumerate(classes) if c == name]
    centroid = descriptors[idx].mean(axis=0)
    spread = np.linalg.norm(descriptors[idx] - centroid, axis=1).mean()
    print(f"  {name:>6}: mean distance to centroid {spread:6.2f}")
cents = {name: descriptors[[i for i, c in enumerate(classes) if c == name]]
         .mean(axis=0) for name in labels}
for a in labels:
    for b in labels:
        if a < b:
            print(f"  {a} <-> {b}: centroid distance "
                  f"{np.linalg.norm(cents[a] - cents[b]):6.2f}")

# Two principal axes for the scatter plot.
centered = descriptors - descriptors.mean(axis=0)
_, _, vt = np.linalg.svd(centered, full_matrices=False)
projected = centered @ vt[:2].T
fig, ax = plt.subplots(figsize=(6, 5))
for name, marker in zip(labels, "o^s"):
    idx = [i for i, c in enumerate(classes) if c == name]
    ax.scatter(projected[idx, 0], projected[idx, 1], label=name,
               marker=marker, alpha=0.7)
ax.set_xlabel("principal axis 1")
ax.set_ylabel("principal axis 2")
ax.legend()
ax.set_title("Timbre descriptors, 2-D projection")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "timbre_space.png"), dpi=120)
print(f"figure saved to {OUT}/timbre_space.png")
