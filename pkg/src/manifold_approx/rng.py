"""Seeded random streams shared across the library.

Every stochastic component (sketching, subset initialization, dataset
generation, noise injection) draws from a counter-based Philox stream keyed
by a user seed plus a short tag, so identical seeds reproduce identical
results run after run and across platforms.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, tag: str = "") -> np.random.Generator:
    """Return a Generator on an independent Philox stream for (seed, tag)."""
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [seed]
    if tag:
        entropy.append(int.from_bytes(tag.encode("utf-8"), "little"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard-normal draws via Box-Muller applied to uniform variates.

    Pinning the variate recipe (instead of relying on the generator's own
    normal algorithm) keeps downstream artifacts bit-reproducible even if
    the ziggurat tables change between numpy releases.
    """
    total = int(np.prod(shape)) if np.ndim(shape) else int(shape)
    if total == 0:
        return np.zeros(shape)
    half = (total + 1) // 2
    u1 = 1.0 - rng.random(half)  # in (0, 1]; keeps the log finite
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:total].reshape(shape)
