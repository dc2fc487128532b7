"""Monte-Carlo BER/FER estimation."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import codes, gf2, rng
from ..channel import postprocess, sigma_from_snr, transmit
from ..errors import ConfigMismatch
from ..model import ECCTConfig, decode_logits, load_checkpoint


@dataclass(frozen=True)
class StopRule:
    """Run until ``frames >= min_frames`` and ``frame_errors >= min_frame_errors``, or the cap."""

    min_frames: int = 100_000
    min_frame_errors: int = 500
    max_frames: int = 10_000_000
    block_size: int = 1000


@dataclass
class SNRResult:
    snr_db: float
    n: int
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    capped: bool = False
    wall_time: float = 0.0
    block_bit_errors: list = field(default_factory=list, repr=False)
    block_frames: list = field(default_factory=list, repr=False)

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    def ber_stderr(self) -> float:
        """Binomial standard error of the BER estimate (bits treated as independent)."""
        m = self.frames * self.n
        return float(np.sqrt(self.ber * (1 - self.ber) / m)) if m else 0.0

    def ber_stderr_batch(self) -> float:
        """Batch-means standard error over the independent blocks.

        Valid when errors cluster within frames, which the binomial form
        ignores. Needs at least two blocks.
        """
        frames = np.asarray(self.block_frames, dtype=np.float64)
        if len(frames) < 2:
            raise ValueError("batch-means standard error needs at least two blocks")
        rates = np.asarray(self.block_bit_errors, dtype=np.float64) / (frames * self.n)
        w = frames / frames.sum()
        # weighted batch means; reduces to std/sqrt(B) for equal blocks
        var = (w ** 2 * (rates - self.ber) ** 2).sum() * len(frames) / (len(frames) - 1)
        return float(np.sqrt(var))

    def counters(self) -> tuple:
        return (self.frames, self.bit_errors, self.frame_errors, self.capped)


@dataclass
class EvalReport:
    code: str
    n: int
    seed: int
    results: list = field(default_factory=list)
    wall_time: float = 0.0

    def at(self, snr_db: float) -> SNRResult:
        for r in self.results:
            if r.snr_db == snr_db:
                return r
        raise KeyError(snr_db)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "n": self.n,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "results": [
                {"snr_db": r.snr_db, "frames": r.frames, "bit_errors": r.bit_errors, "frame_errors": r.frame_errors,
                 "ber": float(f"{r.ber:.6g}"), "fer": float(f"{r.fer:.6g}"), "capped": r.capped,
                 "wall_time": r.wall_time}
                for r in self.results
            ],
        }


class HardDecisionDecoder:
    """Constant positive logits: the decision is the sign of the channel output."""

    def __call__(self, y, x_s=None):
        return np.ones_like(y)


class OracleDecoder:
    """Logits equal to the true bipolar multiplicative noise ``y * x_s``."""

    def __call__(self, y, x_s=None):
        return y * x_s


class ModelDecoder:
    """Wraps trained parameters; decodes in chunks to bound memory."""

    def __init__(self, params: dict, config: ECCTConfig, chunk: int = 500):
        self.params = {k: np.asarray(v, dtype=config.dtype) for k, v in params.items()}
        self.config = config
        self.chunk = chunk

    @classmethod
    def from_checkpoint(cls, path, chunk: int = 500) -> "ModelDecoder":
        params, config = load_checkpoint(path)
        return cls(params, config, chunk)

    @property
    def code(self):
        return self.config.code

    def __call__(self, y, x_s=None):
        parts = [decode_logits(self.params, self.config, y[i:i + self.chunk]) for i in range(0, len(y), self.chunk)]
        return np.concatenate(parts).astype(np.float64)


def _check_code(decoder, code: codes.LinearCode) -> None:
    other = getattr(decoder, "code", None)
    if other is None:
        return
    if (other.n, other.k) != (code.n, code.k) or not gf2.row_space_equal(other.h_conv, code.h_conv):
        raise ConfigMismatch(f"decoder was built for {other.name} ({other.n},{other.k}), not {code.name}")


def run_block(decoder, code, snr_db: float, seed: int, block: int, size: int, zero_codeword: bool = False):
    """Bit and frame error counts of one keyed block of frames."""
    gen = rng.stream(seed, "eval", rng.snr_key(snr_db), block)
    if zero_codeword:
        x = np.zeros((size, code.n), dtype=np.uint8)
    else:
        x = codes.encode(code, gen.integers(0, 2, (size, code.k), dtype=np.uint8))
    sample = transmit(x, sigma_from_snr(snr_db, code.rate), gen, snr_db)
    x_hat = postprocess(sample.y, decoder(sample.y, sample.x_s))
    wrong = x_hat != x
    return int(wrong.sum()), int(wrong.any(axis=1).sum())


def evaluate_snr(decoder, code, snr_db: float, stop: StopRule, seed: int, threads: int = 1,
                 zero_codeword: bool = False) -> SNRResult:
    start = time.perf_counter()
    res = SNRResult(snr_db=float(snr_db), n=code.n)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    block = 0
    try:
        while True:
            # a round of blocks; results are consumed strictly in block order so
            # the stopping point does not depend on the number of workers
            sizes = []
            for b in range(block, block + max(threads, 1)):
                first = b * stop.block_size
                if first >= stop.max_frames:
                    break
                sizes.append((b, min(stop.block_size, stop.max_frames - first)))
            if pool is None:
                outcomes = [run_block(decoder, code, snr_db, seed, b, s, zero_codeword) for b, s in sizes]
            else:
                futures = [pool.submit(run_block, decoder, code, snr_db, seed, b, s, zero_codeword) for b, s in sizes]
                outcomes = [f.result() for f in futures]
            done = False
            for (b, s), (bit_err, frame_err) in zip(sizes, outcomes):
                res.frames += s
                res.bit_errors += bit_err
                res.frame_errors += frame_err
                res.block_frames.append(s)
                res.block_bit_errors.append(bit_err)
                if res.frames >= stop.min_frames and res.frame_errors >= stop.min_frame_errors:
                    done = True
                    break
                if res.frames >= stop.max_frames:
                    res.capped = True
                    done = True
                    break
            if done:
                break
            block += len(sizes)
    finally:
        if pool is not None:
            pool.shutdown()
    res.wall_time = time.perf_counter() - start
    assert res.bit_errors <= res.frames * code.n and res.frame_errors <= res.frames
    assert res.fer >= res.ber, "frame error rate below bit error rate"
    return res


def evaluate(decoder, code: codes.LinearCode | None, snr_db, stop: StopRule = StopRule(), seed: int = 0,
             threads: int = 1, zero_codeword: bool = False) -> EvalReport:
    """BER/FER per SNR for a decoder, a checkpoint directory, or ``(params, config)``.

    A decoder is any callable ``decoder(y, x_s) -> logits`` on (B, n) arrays;
    only genie decoders may look at ``x_s``.
    """
    if isinstance(decoder, (str, Path)):
        decoder = ModelDecoder.from_checkpoint(decoder)
    elif isinstance(decoder, tuple):
        decoder = ModelDecoder(*decoder)
    if code is None:
        code = decoder.code
    _check_code(decoder, code)
    start = time.perf_counter()
    report = EvalReport(code=code.name, n=code.n, seed=seed)
    for snr in np.atleast_1d(snr_db):
        report.results.append(evaluate_snr(decoder, code, float(snr), stop, seed, threads, zero_codeword))
    report.wall_time = time.perf_counter() - start
    return report
