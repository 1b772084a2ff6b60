"""Reproducible random streams.

Every stream is a Philox (counter-based) generator keyed by a
``SeedSequence`` built from ``(seed, *path)``; e.g. replicate ``r`` of a study
with seed ``s`` uses ``stream(s, tag, r)``.  Results therefore depend only on
the seed and the replicate index, not on scheduling.
"""
from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(p) & 0xFFFFFFFFFFFFFFFF for p in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
