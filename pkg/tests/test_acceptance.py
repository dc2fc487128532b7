"""Acceptance criteria, one test (or parametrized group) per criterion.

Training-based criteria share models through ``trained``. Setting
``DMECCT_MODEL_CACHE`` to a directory reuses checkpoints across sessions;
entries are keyed by the configuration, the schedule and a hash of the
package sources, so a cached model is the one this code would train.
"""

import hashlib
import json
import os
import statistics
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

import dmecct
from dmecct import autodiff as ad
from dmecct import channel, codes, gf2, rng
from dmecct.cli import main as cli_main
from dmecct.harness import HardDecisionDecoder, ModelDecoder, StopRule, evaluate
from dmecct.mask import allowed_by_support, build_mask, count_matrix
from dmecct.model import (
    ECCTConfig,
    forward,
    init_params,
    load_checkpoint,
    loss,
    make_inputs,
    param_shapes,
    save_checkpoint,
    schedule_preset,
    train,
)
from oracles import codebook_by_enumeration, mask_by_pairs, xor_basis_rank

SMOKE_CODE = "polar-64-32"
SMOKE_SNRS = (4.0, 5.0, 6.0)
SMOKE_FRAMES = 20_000


# ---------------------------------------------------------------------------
# shared trained models


def _source_hash() -> str:
    root = Path(dmecct.__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


_MODELS: dict = {}


def trained(variant: str, seed: int):
    """Desk-schedule model on polar(64,32), N=2, d=32; returns (params, config, losses, train_seconds)."""
    key = (variant, seed)
    if key in _MODELS:
        return _MODELS[key]
    config = ECCTConfig(code=codes.get_code(SMOKE_CODE), variant=variant, n_layers=2, embed_dim=32, heads=8)
    schedule = schedule_preset("desk", seed=seed)
    cache = os.environ.get("DMECCT_MODEL_CACHE")
    path = None
    if cache:
        tag = json.dumps([config.to_dict(), repr(schedule), _source_hash()], sort_keys=True)
        path = Path(cache) / hashlib.sha256(tag.encode()).hexdigest()[:20]
    if path is not None and (path / "result.json").exists():
        params, config = load_checkpoint(path)
        meta = json.loads((path / "result.json").read_text())
        result = (params, config, meta["losses"], meta["seconds"])
    else:
        out = train(config, schedule)
        result = (out.params, config, out.epoch_losses, out.wall_time)
        if path is not None:
            save_checkpoint(out.params, config, path)
            (path / "result.json").write_text(json.dumps({"losses": out.epoch_losses, "seconds": out.wall_time}))
    _MODELS[key] = result
    return result


def smoke_stop(**kw):
    return StopRule(min_frames=SMOKE_FRAMES, min_frame_errors=0, block_size=500, **kw)


# ---------------------------------------------------------------------------
# code and mask criteria


SPARSITY_TARGETS = {
    "bch-31-11": (72, 74),
    "bch-63-30": (56, 67),
    "polar-64-22": (52, 82),
}


@pytest.mark.criterion("sparsity reproduction")
def test_sparsity_reproduction(capsys, note):
    start = time.perf_counter()
    measured = {}
    for name in SPARSITY_TARGETS:
        assert cli_main(["--json", "mask", "sparsity", "--code", name, "--both"]) == 0
        doc = json.loads(capsys.readouterr().out)
        measured[name] = (100 * doc["sparsity"]["conventional"], 100 * doc["sparsity"]["systematic"])
    elapsed = time.perf_counter() - start
    note(", ".join(f"{k} {c:.2f}%/{s:.2f}%" for k, (c, s) in measured.items()))
    for name, (conv, sys_) in SPARSITY_TARGETS.items():
        got_c, got_s = measured[name]
        assert abs(got_c - conv) <= 2, (name, "conventional", got_c)
        assert abs(got_s - sys_) <= 2, (name, "systematic", got_s)
    assert elapsed < 1.0


@pytest.mark.criterion("codebook equivalence")
def test_codebook_equivalence(note):
    start = time.perf_counter()
    for name in codes.BUNDLED_CODES:
        code = codes.get_code(name)
        r = code.n - code.k
        pairs = [code.h_sys] + ([code.h_mod] if code.family == "Polar" else [])
        for other in pairs:
            assert gf2.row_space_equal(code.h_conv, other), name
            # second route: equal spans iff stacking adds no rank
            assert xor_basis_rank(np.vstack([code.h_conv, other])) == xor_basis_rank(other) == r, name
        assert np.array_equal(code.h_sys[:, :r], np.eye(r, dtype=np.uint8)), name
        assert np.array_equal(code.column_permutation, np.arange(code.n)), name
    elapsed = time.perf_counter() - start
    note(f"{len(codes.BUNDLED_CODES)} codes")
    assert elapsed < 1.0


@pytest.mark.criterion("encoder/syndrome property suite")
def test_encoder_syndrome_suite(note):
    start = time.perf_counter()
    exhaustive = 0
    for name in codes.BUNDLED_CODES:
        code = codes.get_code(name)
        gen = rng.stream(0, "acceptance-encode", code.n, code.k)
        words = codes.encode(code, gen.integers(0, 2, (1000, code.k))).astype(np.int64)
        for h in (code.h_conv, code.h_sys, code.h_mod):
            if h is not None:
                assert not ((words @ h.astype(np.int64).T) % 2).any(), name
        if code.n <= 16:
            book = codebook_by_enumeration(code.h_conv)
            assert len(book) == 2 ** (code.n - xor_basis_rank(code.h_conv)) == 2 ** code.k, name
            msgs = np.array(np.meshgrid(*[[0, 1]] * code.k, indexing="ij")).reshape(code.k, -1).T
            assert {tuple(w) for w in codes.encode(code, msgs)} == book, name
            exhaustive += 1
    elapsed = time.perf_counter() - start
    note(f"{exhaustive} codes enumerated exhaustively")
    assert elapsed < 10.0


REP_MASKED = {(0, 2), (2, 0), (0, 4), (4, 0), (2, 3), (3, 2), (3, 4), (4, 3)}


@pytest.mark.criterion("mask construction oracle")
def test_mask_construction_oracle(note):
    start = time.perf_counter()
    rep = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
    mask = build_mask(rep)
    assert {tuple(p) for p in np.argwhere(~mask.allowed)} == REP_MASKED
    gen = np.random.default_rng(2024)
    for trial in range(100):
        rows = int(gen.integers(1, 33))
        cols = int(gen.integers(rows + 1, 65))
        h = (gen.random((rows, cols)) < gen.uniform(0.05, 0.5)).astype(np.uint8)
        counted = count_matrix(h) > 0
        assert np.array_equal(counted, allowed_by_support(h))
        assert np.array_equal(counted, build_mask(h).allowed)
        if trial < 10:
            assert np.array_equal(counted, mask_by_pairs(h))
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# gradients and channel algebra


HAMMING = np.array([[1, 0, 0, 1, 1, 0, 1], [0, 1, 0, 1, 0, 1, 1], [0, 0, 1, 0, 1, 1, 1]], dtype=np.uint8)


@pytest.mark.criterion("gradient verification")
@pytest.mark.parametrize("variant", ["SM", "DM"])
def test_gradient_verification(variant, note):
    start = time.perf_counter()
    code = codes.code_from_pcm(HAMMING, name="hamming-7-4")
    cfg = ECCTConfig(code=code, variant=variant, n_layers=1, embed_dim=8, heads=2, precision="f64")
    gen = np.random.default_rng(11)
    # random biases so no group sits at a symmetric point
    params = {k: v + 0.1 * gen.standard_normal(v.shape) if not v.any() else v
              for k, v in init_params(cfg, seed=11).items()}
    s = channel.transmit(codes.encode(code, gen.integers(0, 2, (4, code.k))),
                         channel.sigma_from_snr(2.0, code.rate), gen)
    inputs = make_inputs(cfg, s.y)
    target = channel.hard_decision(s.y * s.x_s)
    errors = ad.grad_check_groups(lambda p: loss(forward(p, cfg, inputs), target), params, eps=1e-5, samples=200)
    elapsed = time.perf_counter() - start
    assert set(errors) == set(param_shapes(cfg))
    worst = max(errors, key=errors.get)
    note(f"{variant}: max rel err {errors[worst]:.2e} ({worst}), {len(errors)} groups")
    assert errors[worst] < 1e-4, (worst, errors[worst])
    assert elapsed < 60.0


@pytest.mark.criterion("oracle decoding identity")
def test_oracle_decoding_identity(note):
    start = time.perf_counter()
    for name in codes.BUNDLED_CODES:
        code = codes.get_code(name)
        gen = rng.stream(0, "acceptance-oracle", code.n, code.k)
        x = codes.encode(code, gen.integers(0, 2, (1000, code.k)))
        s = channel.transmit(x, channel.sigma_from_snr(0.0, code.rate), gen)
        assert np.array_equal(channel.postprocess(s.y, s.y * s.x_s), x), name
        # sign-only form of the same noise: 1 - 2 z
        signs = 1.0 - 2.0 * channel.mult_noise_target(s.y, s.x_s)
        assert np.array_equal(channel.postprocess(s.y, signs), x), name
    elapsed = time.perf_counter() - start
    note(f"{len(codes.BUNDLED_CODES)} codes x 1000 trials")
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# training and evaluation


@pytest.mark.criterion("training smoke")
def test_training_smoke(note):
    params, config, losses, train_seconds = trained("DM", 0)
    start = time.perf_counter()
    model = evaluate(ModelDecoder(params, config), config.code, SMOKE_SNRS, smoke_stop())
    hard = evaluate(HardDecisionDecoder(), config.code, SMOKE_SNRS, smoke_stop())
    total = train_seconds + time.perf_counter() - start
    rows = []
    for snr in SMOKE_SNRS:
        m, h = model.at(snr), hard.at(snr)
        rows.append(f"{snr:g} dB BER {m.ber:.3e} vs HD {h.ber:.3e}")
    note(f"loss {losses[0]:.3f} -> {losses[-1]:.3f}; " + ", ".join(rows) + f"; {total / 60:.1f} min")
    assert losses[-1] < losses[0]
    for snr in SMOKE_SNRS:
        assert model.at(snr).frames >= SMOKE_FRAMES
        assert model.at(snr).ber < 0.8 * hard.at(snr).ber, snr
    assert model.at(6.0).ber < model.at(4.0).ber
    # "<= ~30 min": 20% allowance for the approximate budget
    assert total <= 36 * 60


@pytest.mark.criterion("variant ordering (report-only)")
def test_variant_ordering(note):
    ber = {}
    for variant in ("Conventional", "SM", "DM"):
        values = []
        for seed in (0, 1, 2):
            params, config, _, _ = trained(variant, seed)
            values.append(evaluate(ModelDecoder(params, config), config.code, 5.0, smoke_stop()).at(5.0).ber)
        ber[variant] = statistics.median(values)
    text = ", ".join(f"{v} {b:.3e}" for v, b in ber.items())
    ok = ber["SM"] <= ber["Conventional"] and ber["DM"] <= ber["SM"]
    if not ok:
        warnings.warn(f"variant ordering not reproduced at desk scale: median BER at 5 dB {text}")
    note(f"median BER @5 dB: {text}", warn=not ok)


@pytest.mark.criterion("determinism")
def test_determinism_training(note):
    config = ECCTConfig(code=codes.get_code(SMOKE_CODE), variant="DM", n_layers=2, embed_dim=32, heads=8)
    schedule = schedule_preset("smoke", seed=5)
    a = train(config, schedule).epoch_losses
    b = train(config, schedule).epoch_losses
    assert len(a) == 2 and a == b
    note(f"2-epoch losses {a}")


@pytest.mark.criterion("determinism")
def test_determinism_threads(note):
    params, config, _, _ = trained("DM", 0)
    stop = StopRule(min_frames=4000, min_frame_errors=100, block_size=250)
    dec = ModelDecoder(params, config)
    one = evaluate(dec, config.code, 5.0, stop, seed=9, threads=1).at(5.0)
    eight = evaluate(dec, config.code, 5.0, stop, seed=9, threads=8).at(5.0)
    note(f"counters {one.counters()}")
    assert one.counters() == eight.counters()


@pytest.mark.criterion("zero-codeword invariance")
def test_zero_codeword_invariance(note):
    params, config, _, _ = trained("DM", 0)
    start = time.perf_counter()
    dec = ModelDecoder(params, config)
    zero = evaluate(dec, config.code, 5.0, smoke_stop(), seed=21, zero_codeword=True).at(5.0)
    rand = evaluate(dec, config.code, 5.0, smoke_stop(), seed=21).at(5.0)
    elapsed = time.perf_counter() - start
    se = np.hypot(zero.ber_stderr_batch(), rand.ber_stderr_batch())
    note(f"zero {zero.ber:.3e}, random {rand.ber:.3e}, |diff| = {abs(zero.ber - rand.ber) / se:.2f} SE")
    assert abs(zero.ber - rand.ber) < 3 * se
    assert elapsed < 300
