"""Forward pass and loss of the ECCT family."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .. import autodiff as ad
from ..channel import ModelInput, preprocess
from ..errors import ShapeMismatch, VariantArityMismatch
from .config import ECCTConfig


def make_inputs(config: ECCTConfig, y) -> list[ModelInput]:
    """Preprocess received words once per stream, each with its own PCM."""
    return [preprocess(y, spec.pcm, bipolar=config.syndrome_bipolar) for spec in config.streams]


def _linear(x, params, name):
    return ad.add(ad.matmul(x, params[f"{name}.w"]), params[f"{name}.b"])


def _layer(x, params, p, config, spec):
    h = ad.layer_norm(x, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
    q = ad.add(ad.matmul(h, params[f"{p}.attn.wq"]), params[f"{p}.attn.bq"])
    k = ad.matmul(h, params[f"{p}.attn.wk"])
    v = ad.add(ad.matmul(h, params[f"{p}.attn.wv"]), params[f"{p}.attn.bv"])
    if config.attention == "fused":
        a = ad.masked_attention(q, k, v, spec.csr, config.heads)
    else:
        a = ad.dense_masked_attention(q, k, v, spec.additive, config.heads)
    x = ad.add(x, ad.add(ad.matmul(a, params[f"{p}.attn.wo"]), params[f"{p}.attn.bo"]))
    h = ad.layer_norm(x, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
    h = ad.gelu(ad.add(ad.matmul(h, params[f"{p}.ffn.w1"]), params[f"{p}.ffn.b1"]))
    return ad.add(x, ad.add(ad.matmul(h, params[f"{p}.ffn.w2"]), params[f"{p}.ffn.b2"]))


def stream_forward(params, prefix: str, tokens: np.ndarray, config: ECCTConfig, spec) -> ad.Tensor:
    """Embed a (B, 2n-k) input and run the decoder layers of one stream."""
    d = config.embed_dim
    # each input scalar scales its own learned positional vector
    x = ad.mul(ad.Tensor(np.repeat(tokens[..., None], d, axis=-1)), params[f"{prefix}.embed"])
    for layer in range(config.n_layers):
        x = _layer(x, params, f"{prefix}.l{layer}", config, spec)
    return x


def forward(params: Mapping, config: ECCTConfig, inputs: Sequence[ModelInput], stream_order=None) -> ad.Tensor:
    """Logits ``f(y)`` of shape (B, n), or (n,) for a single unbatched word.

    ``params`` maps names to arrays or tensors. ``stream_order`` only changes
    the order in which DM streams are evaluated.
    """
    if isinstance(inputs, ModelInput):
        inputs = [inputs]
    if len(inputs) != config.n_streams:
        raise VariantArityMismatch(f"{config.variant} takes {config.n_streams} input(s), got {len(inputs)}")
    dtype = config.dtype
    params = {name: ad.as_tensor(p, dtype) for name, p in params.items()}
    L = config.seq_len
    tokens = [np.asarray(inp.concat(), dtype=dtype) for inp in inputs]
    single = tokens[0].ndim == 1
    tokens = [t[None] if t.ndim == 1 else t for t in tokens]
    for t in tokens:
        if t.shape[-1] != L or t.shape != tokens[0].shape:
            raise ShapeMismatch(f"decoder input has shape {t.shape}, expected (B, {L})")
    prefixes = config.stream_prefixes()
    order = range(config.n_streams) if stream_order is None else stream_order
    outs = [None] * config.n_streams
    for s in order:
        outs[s] = stream_forward(params, prefixes[s], tokens[s], config, config.streams[s])

    if config.variant == "DM":
        if config.output_norm == "per_stream":
            outs = [ad.layer_norm(o, params[f"head.ln{s}.g"], params[f"head.ln{s}.b"]) for s, o in enumerate(outs)]
            x = ad.concat(outs, axis=1)
        else:
            x = ad.layer_norm(ad.concat(outs, axis=1), params["head.ln.g"], params["head.ln.b"])
        # mix the 2(2n-k) sequence positions down to 2n-k
        x = ad.transpose(_linear(ad.transpose(x, (0, 2, 1)), params, "head.fuse"), (0, 2, 1))
    else:
        x = ad.layer_norm(outs[0], params["head.ln.g"], params["head.ln.b"])
    x = ad.slice_(_linear(x, params, "head.proj"), (Ellipsis, 0))
    logits = _linear(x, params, "head.final")
    return ad.slice_(logits, 0) if single else logits


def loss(logits: ad.Tensor, target) -> ad.Tensor:
    """Cross-entropy against the flip bits ``z``; sum over bits, mean over the batch.

    ``P(z = 1) = sigmoid(-f)``, matching the decision rule ``bin(sign(y f))``.
    """
    target = np.asarray(target)
    if target.shape != logits.shape:
        raise ShapeMismatch(f"loss: target {target.shape} vs logits {logits.shape}")
    batch = 1 if logits.ndim == 1 else logits.shape[0]
    return ad.scale(ad.bce_with_logits(ad.scale(logits, -1.0), target), 1.0 / batch)


def decode_logits(params, config: ECCTConfig, y) -> np.ndarray:
    """Inference helper: received words (B, n) to logits (B, n) as a plain array."""
    return forward(params, config, make_inputs(config, y)).data
