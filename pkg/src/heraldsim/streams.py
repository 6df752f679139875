"""Deterministic random streams for reproducible, order-independent runs.

Every random quantity in a run is drawn from a stream identified by the
global seed plus a short purpose label ("routing", "signal-port", ...).
Purpose streams are mutually independent, so drawing (or not drawing) one
quantity never shifts another; element ``i`` of a purpose-stream array
always belongs to pair ``i``.  Together with numpy's sequential array
filling this makes per-pair outcomes a pure function of
``(seed, pair_id, purpose)``:

- truncating a run to the first k pairs reproduces those pairs exactly;
- enabling/disabling a stage (e.g. the grating) leaves every other
  stage's draws untouched;
- a chunked or parallel implementation that slices the same arrays gets
  byte-identical results.

Single-pair code paths (unit tests, exploratory use) can instead derive a
dedicated generator per pair via :func:`pair_rng`.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def tagged_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one purpose within one seeded run."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, *_label_words(label)])


def pair_rng(seed: int, pair_id: int, label: str) -> np.random.Generator:
    """Dedicated generator for a single pair within one purpose stream."""
    return np.random.default_rng(
        [seed & 0xFFFFFFFFFFFFFFFF, pair_id, *_label_words(label)]
    )


class DrawSet:
    """Named vectorized draws for one seeded run.

    Thin convenience over :func:`tagged_rng`; each method materializes one
    purpose stream as an array whose row ``i`` belongs to pair ``i``.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def uniforms(self, label: str, n: int, k: int = 1) -> np.ndarray:
        r = tagged_rng(self.seed, label)
        if k == 1:
            return r.random(n)
        return r.random((n, k))

    def normals(self, label: str, n: int) -> np.ndarray:
        return tagged_rng(self.seed, label).standard_normal(n)

    def exponentials(self, label: str, n: int, scale: float) -> np.ndarray:
        return tagged_rng(self.seed, label).exponential(scale, n)
