"""BPSK over AWGN plus the syndrome-based pre/post-processing of the decoder.

Sign convention: ``sign(a) = +1`` for ``a >= 0``; ``bin(+1) = 0`` and
``bin(-1) = 1``. The decoder's logit ``f`` is a soft estimate of the bipolar
multiplicative noise, so ``f > 0`` means "no flip" and the training target
bit ``z = 1`` (flip) has probability ``sigmoid(-f)``.

All functions accept a single vector or a batch with leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2, rng
from .errors import BadRate, DimensionMismatch


@dataclass(frozen=True, eq=False)
class ChannelSample:
    x: np.ndarray
    x_s: np.ndarray
    y: np.ndarray
    sigma: float
    snr_db: float | None = None


@dataclass(frozen=True, eq=False)
class ModelInput:
    magnitude: np.ndarray
    syndrome_embed: np.ndarray

    def concat(self) -> np.ndarray:
        """The length 2n-k decoder input ``[|y|, s(y)]``."""
        return np.concatenate([self.magnitude, self.syndrome_embed.astype(self.magnitude.dtype)], axis=-1)


def sigma_from_snr(snr_db, rate: float):
    """Noise standard deviation for an Eb/N0 in dB at the given code rate."""
    if not 0.0 < rate <= 1.0:
        raise BadRate(f"code rate must be in (0, 1], got {rate}")
    return (2.0 * rate * 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)) ** -0.5


def bpsk(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def hard_decision(y) -> np.ndarray:
    """``bin(sign(y))``; zero maps to bit 0."""
    return (np.asarray(y) < 0).astype(np.uint8)


def transmit(x, sigma, gen: np.random.Generator, snr_db: float | None = None) -> ChannelSample:
    """``y = x_s + sigma * z``. ``sigma`` may be a scalar or broadcast per frame."""
    x = np.asarray(x, dtype=np.uint8)
    x_s = bpsk(x)
    sig = np.asarray(sigma, dtype=np.float64)
    if sig.ndim and sig.shape != x.shape:
        sig = sig.reshape(sig.shape + (1,) * (x.ndim - sig.ndim))
    y = x_s + sig * rng.gaussian(gen, x.shape)
    return ChannelSample(x=x, x_s=x_s, y=y, sigma=sigma, snr_db=snr_db)


def syndrome(h, y) -> np.ndarray:
    y = np.asarray(y)
    if y.shape[-1] != np.shape(h)[1]:
        raise DimensionMismatch(f"received length {y.shape[-1]} != {np.shape(h)[1]} PCM columns")
    return gf2.matvec_mod2(h, hard_decision(y))


def preprocess(y, h, bipolar: bool = True) -> ModelInput:
    y = np.asarray(y)
    s = syndrome(h, y)
    embed = (1 - 2 * s.astype(np.int8)) if bipolar else s
    return ModelInput(magnitude=np.abs(y), syndrome_embed=embed)


def mult_noise_target(y, x_s) -> np.ndarray:
    """Target bits ``bin(sign(y * x_s))``: 1 where the channel flipped the sign."""
    y = np.asarray(y)
    x_s = np.asarray(x_s)
    if y.shape != x_s.shape:
        raise DimensionMismatch(f"shapes differ: {y.shape} vs {x_s.shape}")
    return hard_decision(y * x_s)


def postprocess(y, logits) -> np.ndarray:
    """Decoded bits ``bin(sign(y * f(y)))``."""
    y = np.asarray(y)
    logits = np.asarray(logits)
    if y.shape != logits.shape:
        raise DimensionMismatch(f"shapes differ: {y.shape} vs {logits.shape}")
    return hard_decision(y * logits)
