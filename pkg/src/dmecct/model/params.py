"""Parameter shapes and initialization."""

from __future__ import annotations

import numpy as np

from .. import rng
from .config import ECCTConfig


def stream_shapes(config: ECCTConfig, prefix: str) -> dict[str, tuple]:
    d, L, hid = config.embed_dim, config.seq_len, config.ffn_mult * config.embed_dim
    shapes = {f"{prefix}.embed": (L, d)}
    for layer in range(config.n_layers):
        p = f"{prefix}.l{layer}"
        shapes[f"{p}.ln1.g"] = (d,)
        shapes[f"{p}.ln1.b"] = (d,)
        for w in ("q", "k", "v", "o"):
            shapes[f"{p}.attn.w{w}"] = (d, d)
            # no key bias: softmax over keys is invariant to it, so its gradient is identically zero
            if w != "k":
                shapes[f"{p}.attn.b{w}"] = (d,)
        shapes[f"{p}.ln2.g"] = (d,)
        shapes[f"{p}.ln2.b"] = (d,)
        shapes[f"{p}.ffn.w1"] = (d, hid)
        shapes[f"{p}.ffn.b1"] = (hid,)
        shapes[f"{p}.ffn.w2"] = (hid, d)
        shapes[f"{p}.ffn.b2"] = (d,)
    return shapes


def head_shapes(config: ECCTConfig) -> dict[str, tuple]:
    d, L, n = config.embed_dim, config.seq_len, config.code.n
    shapes = {}
    if config.variant == "DM" and config.output_norm == "per_stream":
        for s in range(2):
            shapes[f"head.ln{s}.g"] = (d,)
            shapes[f"head.ln{s}.b"] = (d,)
    else:
        shapes["head.ln.g"] = (d,)
        shapes["head.ln.b"] = (d,)
    if config.variant == "DM":
        shapes["head.fuse.w"] = (2 * L, L)
        shapes["head.fuse.b"] = (L,)
    shapes["head.proj.w"] = (d, 1)
    shapes["head.proj.b"] = (1,)
    shapes["head.final.w"] = (L, n)
    shapes["head.final.b"] = (n,)
    return shapes


def param_shapes(config: ECCTConfig) -> dict[str, tuple]:
    """Every parameter name and shape, in a fixed order."""
    shapes = {}
    for prefix in dict.fromkeys(config.stream_prefixes()):
        shapes.update(stream_shapes(config, prefix))
    shapes.update(head_shapes(config))
    return shapes


def param_count(config: ECCTConfig) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(config).values())


def init_params(config: ECCTConfig, gen: np.random.Generator | None = None, seed: int = 0) -> dict[str, np.ndarray]:
    """Xavier-uniform weights, N(0, 0.02) embeddings, unit gains, zero biases."""
    if gen is None:
        gen = rng.stream(seed, "init")
    params = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "embed":
            value = 0.02 * rng.gaussian(gen, shape)
        elif leaf == "g":
            value = np.ones(shape)
        elif len(shape) == 2:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            value = gen.uniform(-bound, bound, shape)
        else:
            value = np.zeros(shape)
        params[name] = value.astype(config.dtype)
    return params
