"""Training loop on the all-zero codeword."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from .. import rng
from ..channel import hard_decision, sigma_from_snr
from .config import ECCTConfig, TrainSchedule
from .forward import forward, loss, make_inputs
from .params import init_params


@dataclass
class TrainResult:
    params: dict
    config: ECCTConfig
    schedule: TrainSchedule
    epoch_losses: list = field(default_factory=list)
    wall_time: float = 0.0


def training_batch(config: ECCTConfig, schedule: TrainSchedule, epoch: int, batch: int):
    """Received words and flip targets for one minibatch.

    The zero codeword is sent, so ``x_s = +1`` and the targets are
    ``bin(sign(y))``. Each sample draws its SNR uniformly from the schedule.
    """
    gen = rng.stream(schedule.seed, "train", epoch, batch)
    snrs = np.asarray(schedule.train_snr_db, dtype=np.float64)
    pick = gen.integers(0, len(snrs), schedule.batch_size)
    sigma = sigma_from_snr(snrs[pick], config.code.rate)
    y = 1.0 + sigma[:, None] * rng.gaussian(gen, (schedule.batch_size, config.code.n))
    return y, hard_decision(y)


def train_step(params: dict, config: ECCTConfig, y, target, state: ad.AdamState) -> float:
    leaves = {name: ad.Tensor(p, requires_grad=True, name=name) for name, p in params.items()}
    value = loss(forward(leaves, config, make_inputs(config, y)), target)
    ad.backward(value)
    ad.adam_step(state, params, {name: t.grad for name, t in leaves.items()})
    return value.item()


def train(config: ECCTConfig, schedule: TrainSchedule, params: dict | None = None, log=None) -> TrainResult:
    """Adam on freshly sampled zero-codeword batches; deterministic given the seed."""
    start = time.perf_counter()
    if params is None:
        params = init_params(config, rng.stream(schedule.seed, "init"))
    state = ad.adam_init(params, lr=schedule.lr)
    result = TrainResult(params=params, config=config, schedule=schedule)
    step = 0
    for epoch in range(schedule.epochs):
        total = 0.0
        for batch in range(schedule.batches_per_epoch):
            state.lr = schedule.lr_at(step)
            y, target = training_batch(config, schedule, epoch, batch)
            total += train_step(params, config, y, target, state)
            step += 1
        result.epoch_losses.append(total / schedule.batches_per_epoch)
        if log is not None:
            log(epoch, result.epoch_losses[-1])
    result.wall_time = time.perf_counter() - start
    return result


def write_loss_csv(losses, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss"])
        for epoch, value in enumerate(losses):
            w.writerow([epoch, repr(float(value))])


def read_loss_csv(path) -> list[float]:
    with open(path, newline="") as fh:
        return [float(row["mean_loss"]) for row in csv.DictReader(fh)]
