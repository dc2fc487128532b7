"""Model and training configuration."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np

from ..codes import LinearCode
from ..mask import AttentionMask, build_mask, dm_mask_pair

VARIANTS = ("Conventional", "SM", "DM")
PRECISIONS = {"f32": np.float32, "f64": np.float64}


class StreamSpec(NamedTuple):
    mask: AttentionMask
    pcm: np.ndarray
    csr: tuple
    additive: np.ndarray


@dataclass(frozen=True)
class ECCTConfig:
    """Architecture of one decoder.

    ``output_norm`` is "post_concat" (one normalization over the concatenated
    streams) or "per_stream" (one per stream, before concatenation); it only
    matters for DM. ``attention`` selects the fused sparse kernel or the
    dense reference composition.
    """

    code: LinearCode
    variant: str = "DM"
    n_layers: int = 2
    embed_dim: int = 32
    heads: int = 8
    ffn_mult: int = 4
    share_streams: bool = False
    precision: str = "f32"
    syndrome_bipolar: bool = True
    output_norm: str = "post_concat"
    attention: str = "fused"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be f32 or f64, got {self.precision!r}")
        if self.output_norm not in ("post_concat", "per_stream"):
            raise ValueError(f"unknown output_norm {self.output_norm!r}")
        if self.attention not in ("fused", "dense"):
            raise ValueError(f"unknown attention {self.attention!r}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    @property
    def seq_len(self) -> int:
        return 2 * self.code.n - self.code.k

    @property
    def n_streams(self) -> int:
        return 2 if self.variant == "DM" else 1

    def stream_prefixes(self) -> list[str]:
        """Parameter prefix used by each stream."""
        if self.variant == "DM" and not self.share_streams:
            return ["s0", "s1"]
        return ["s0"] * self.n_streams

    @cached_property
    def streams(self) -> list[StreamSpec]:
        """Mask and PCM per stream; the PCM also drives that stream's syndrome."""
        code = self.code
        if self.variant == "Conventional":
            pairs = [(build_mask(code.h_conv), code.h_conv)]
        elif self.variant == "SM":
            pairs = [(build_mask(code.h_sys, source="systematic"), code.h_sys)]
        else:
            m1, m2, h1, h2 = dm_mask_pair(code)
            pairs = [(m1, h1), (m2, h2)]
        return [StreamSpec(m, h, m.csr(), m.additive(self.dtype)) for m, h in pairs]

    def to_dict(self) -> dict:
        return {
            "code": self.code.name,
            "variant": self.variant,
            "n_layers": self.n_layers,
            "embed_dim": self.embed_dim,
            "heads": self.heads,
            "ffn_mult": self.ffn_mult,
            "share_streams": self.share_streams,
            "precision": self.precision,
            "syndrome_bipolar": self.syndrome_bipolar,
            "output_norm": self.output_norm,
        }

    def with_(self, **changes) -> "ECCTConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TrainSchedule:
    epochs: int = 20
    batches_per_epoch: int = 200
    batch_size: int = 128
    lr: float = 1e-4
    lr_decay: str = "none"
    lr_min: float = 0.0
    train_snr_db: tuple = (3.0, 4.0, 5.0, 6.0, 7.0)
    seed: int = 0

    def __post_init__(self):
        if self.lr_decay not in ("none", "cosine"):
            raise ValueError(f"lr_decay must be none or cosine, got {self.lr_decay!r}")
        if min(self.epochs, self.batches_per_epoch, self.batch_size) < 1:
            raise ValueError("epochs, batches_per_epoch and batch_size must be positive")

    @property
    def total_steps(self) -> int:
        return self.epochs * self.batches_per_epoch

    def lr_at(self, step: int) -> float:
        """Learning rate for the 0-based optimizer step."""
        if self.lr_decay == "none":
            return self.lr
        frac = step / max(self.total_steps - 1, 1)
        return self.lr_min + 0.5 * (self.lr - self.lr_min) * (1.0 + np.cos(np.pi * frac))


SCHEDULE_PRESETS = {
    "paper": TrainSchedule(epochs=1000, batches_per_epoch=1000, batch_size=128, lr=1e-4, lr_decay="cosine"),
    "desk": TrainSchedule(epochs=20, batches_per_epoch=200, batch_size=128),
    "smoke": TrainSchedule(epochs=2, batches_per_epoch=10, batch_size=32),
}


def schedule_preset(name: str, **overrides) -> TrainSchedule:
    if name not in SCHEDULE_PRESETS:
        raise KeyError(f"unknown schedule preset {name!r}; choose from {sorted(SCHEDULE_PRESETS)}")
    return replace(SCHEDULE_PRESETS[name], **overrides)
