"""Keyed random streams.

Every stream is identified by ``(seed, purpose, a, b, c)``. The key is fed to
``numpy.random.SeedSequence`` as a spawn key and drives a Philox
counter-based generator, so any stream can be rebuilt independently of the
order in which other streams were consumed.
"""

from __future__ import annotations

import zlib

import numpy as np


def purpose_id(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str, a: int = 0, b: int = 0, c: int = 0) -> np.random.Generator:
    key = tuple(int(v) & 0xFFFFFFFFFFFFFFFF for v in (purpose_id(purpose), a, b, c))
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def uniform(gen: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. doubles in [0, 1)."""
    return gen.random(shape, dtype=np.float64)


def gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard normals by Box-Muller on consecutive uniform pairs."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u = gen.random(2 * pairs, dtype=np.float64)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count].reshape(shape)


def snr_key(snr_db: float) -> int:
    """Integer stream key for an SNR value (milli-dB resolution)."""
    return int(round(snr_db * 1000)) & 0xFFFFFFFFFFFFFFFF
