"""Transformer decoders: conventional ECCT, systematic-mask ECCT and double-masked ECCT."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import SCHEDULE_PRESETS, VARIANTS, ECCTConfig, TrainSchedule, schedule_preset
from .forward import decode_logits, forward, loss, make_inputs
from .params import init_params, param_count, param_shapes
from .train import TrainResult, read_loss_csv, train, train_step, training_batch, write_loss_csv

__all__ = [
    "ECCTConfig", "SCHEDULE_PRESETS", "TrainResult", "TrainSchedule", "VARIANTS", "decode_logits", "forward",
    "init_params", "load_checkpoint", "loss", "make_inputs", "param_count", "param_shapes", "read_loss_csv",
    "save_checkpoint", "schedule_preset", "train", "train_step", "training_batch", "write_loss_csv",
]
