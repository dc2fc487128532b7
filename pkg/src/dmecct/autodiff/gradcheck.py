"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, backward


def relative_error(analytic, numeric) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)


def grad_check_groups(
    f: Callable[[Mapping[str, Tensor]], Tensor],
    params: Mapping[str, np.ndarray],
    eps: float = 1e-5,
    samples: int = 200,
    seed: int = 0,
) -> dict[str, float]:
    """Maximum relative error per parameter group.

    ``f`` maps a dict of tensors to a scalar loss tensor. At most ``samples``
    coordinates per group are checked (all of them for smaller groups), drawn
    without replacement. Parameters must be 64-bit.
    """
    params = {name: np.array(p, dtype=np.float64) for name, p in params.items()}
    for name, p in params.items():
        if not np.isfinite(p).all():
            raise ValueError(f"parameter {name} is not finite")
    leaves = {name: Tensor(p, requires_grad=True, name=name) for name, p in params.items()}
    loss = f(leaves)
    backward(loss)
    gen = np.random.default_rng(seed)

    def value():
        return f({name: Tensor(p) for name, p in params.items()}).item()

    report = {}
    for name, p in params.items():
        grad = leaves[name].grad
        grad = np.zeros_like(p) if grad is None else grad
        flat = p.reshape(-1)
        count = min(samples, flat.size)
        coords = gen.choice(flat.size, size=count, replace=False) if count < flat.size else np.arange(flat.size)
        numeric = np.empty(count)
        for i, c in enumerate(coords):
            old = flat[c]
            flat[c] = old + eps
            up = value()
            flat[c] = old - eps
            down = value()
            flat[c] = old
            numeric[i] = (up - down) / (2 * eps)
        report[name] = float(relative_error(grad.reshape(-1)[coords], numeric).max())
    return report


def grad_check(f, params, eps: float = 1e-5, samples: int = 200, seed: int = 0) -> float:
    """Largest relative error over all groups; see ``grad_check_groups``."""
    return max(grad_check_groups(f, params, eps, samples, seed).values())
