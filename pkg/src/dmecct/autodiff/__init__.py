"""Minimal reverse-mode automatic differentiation."""

from .gradcheck import grad_check, grad_check_groups, relative_error
from .ops import (
    add,
    bce_with_logits,
    concat,
    dense_masked_attention,
    gelu,
    layer_norm,
    masked_attention,
    matmul,
    mean,
    mul,
    scale,
    sigmoid,
    slice_,
    softmax_masked,
    total,
    transpose,
)
from .optim import AdamState, adam_init, adam_step
from .tensor import Tape, Tensor, as_tensor, backward

__all__ = [
    "AdamState", "Tape", "Tensor", "adam_init", "adam_step", "add", "as_tensor", "backward",
    "bce_with_logits", "concat", "dense_masked_attention", "gelu", "grad_check", "grad_check_groups",
    "layer_norm", "masked_attention", "matmul", "mean", "mul", "relative_error", "scale", "sigmoid",
    "slice_", "softmax_masked", "total", "transpose",
]
