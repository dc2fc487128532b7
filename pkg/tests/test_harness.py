import csv
import json
import math

import numpy as np
import pytest

from dmecct import channel, codes
from dmecct.errors import ConfigMismatch, ParseError
from dmecct.harness import (
    CSV_COLUMNS,
    PRESETS,
    HardDecisionDecoder,
    ModelDecoder,
    OracleDecoder,
    StopRule,
    SweepSpec,
    evaluate,
    parse_config_text,
    spec_from_mapping,
    sweep,
)
from dmecct.model import ECCTConfig, init_params, save_checkpoint, schedule_preset


def q_function(x):
    return 0.5 * math.erfc(x / math.sqrt(2))


def test_oracle_decoder_never_errs_and_hits_cap():
    code = codes.get_code("polar-64-32")
    stop = StopRule(min_frames=1000, min_frame_errors=500, max_frames=3000, block_size=1000)
    report = evaluate(OracleDecoder(), code, [0.0, 4.0], stop)
    for r in report.results:
        assert (r.ber, r.fer) == (0.0, 0.0)
        assert r.frames == 3000 and r.capped


def test_hard_decision_matches_gaussian_tail():
    code = codes.get_code("polar-64-32")
    sigma = channel.sigma_from_snr(4.0, code.rate)
    assert 1 / sigma == pytest.approx(1.585, abs=1e-3)
    expected = q_function(1 / sigma)
    assert expected == pytest.approx(0.0565, abs=2e-4)
    r = evaluate(HardDecisionDecoder(), code, 4.0, StopRule(min_frames=4000, min_frame_errors=0)).at(4.0)
    assert r.frames == 4000 and not r.capped
    assert abs(r.ber - expected) < 3 * r.ber_stderr()


def test_stopping_rule_is_conjunctive():
    code = codes.get_code("bch-15-7")
    stop = StopRule(min_frames=500, min_frame_errors=300, max_frames=10**6, block_size=100)
    r = evaluate(HardDecisionDecoder(), code, 6.0, stop).at(6.0)
    assert r.frames >= 500 and r.frame_errors >= 300 and not r.capped
    # one block fewer must fail at least one condition
    shorter = evaluate(HardDecisionDecoder(), code, 6.0, StopRule(r.frames - 100, 0, 10**6, 100)).at(6.0)
    assert shorter.frames < 500 or shorter.frame_errors < 300


@pytest.mark.parametrize("threads", [2, 8])
def test_counters_independent_of_threads(threads):
    code = codes.get_code("bch-31-16")
    stop = StopRule(min_frames=2000, min_frame_errors=100, block_size=250)
    one = evaluate(HardDecisionDecoder(), code, [3.0, 5.0], stop, seed=7, threads=1)
    many = evaluate(HardDecisionDecoder(), code, [3.0, 5.0], stop, seed=7, threads=threads)
    assert [r.counters() for r in one.results] == [r.counters() for r in many.results]


def test_same_seed_same_counters_other_seed_differs():
    code = codes.get_code("bch-31-16")
    stop = StopRule(min_frames=1000, min_frame_errors=0)
    a = evaluate(HardDecisionDecoder(), code, 4.0, stop, seed=1).at(4.0)
    b = evaluate(HardDecisionDecoder(), code, 4.0, stop, seed=1).at(4.0)
    c = evaluate(HardDecisionDecoder(), code, 4.0, stop, seed=2).at(4.0)
    assert a.counters() == b.counters()
    assert a.bit_errors != c.bit_errors


def test_report_invariants_and_json():
    code = codes.get_code("bch-15-7")
    report = evaluate(HardDecisionDecoder(), code, [1.0, 2.0], StopRule(min_frames=500, min_frame_errors=0), seed=3)
    for r in report.results:
        assert isinstance(r.bit_errors, int) and isinstance(r.frame_errors, int)
        assert r.bit_errors <= r.frames * code.n and r.frame_errors <= r.frames
        assert r.fer >= r.ber
    doc = json.loads(json.dumps(report.to_dict()))
    assert [row["snr_db"] for row in doc["results"]] == [1.0, 2.0]


def test_model_decoder_code_mismatch(tmp_path):
    cfg = ECCTConfig(code=codes.get_code("bch-15-7"), variant="SM", n_layers=1, embed_dim=8, heads=2)
    params = init_params(cfg)
    with pytest.raises(ConfigMismatch):
        evaluate(ModelDecoder(params, cfg), codes.get_code("bch-15-5"), 3.0, StopRule(min_frames=10))
    save_checkpoint(params, cfg, tmp_path)
    report = evaluate(str(tmp_path), None, 3.0, StopRule(min_frames=100, min_frame_errors=0, block_size=50))
    assert report.code == "bch-15-7" and report.at(3.0).frames == 100


def test_model_decoder_thread_determinism():
    cfg = ECCTConfig(code=codes.get_code("bch-15-7"), variant="DM", n_layers=1, embed_dim=8, heads=2)
    dec = ModelDecoder(init_params(cfg, seed=2), cfg)
    stop = StopRule(min_frames=600, min_frame_errors=50, block_size=100)
    a = evaluate(dec, None, 3.0, stop, threads=1).at(3.0)
    b = evaluate(dec, None, 3.0, stop, threads=8).at(3.0)
    assert a.counters() == b.counters()


def test_zero_codeword_mode_sends_zeros():
    code = codes.get_code("bch-15-7")
    seen = []

    def spy(y, x_s):
        seen.append(x_s)
        return np.ones_like(y)

    evaluate(spy, code, 3.0, StopRule(min_frames=100, min_frame_errors=0, block_size=100), zero_codeword=True)
    assert np.all(seen[0] == 1)


def test_presets_arity():
    desk = PRESETS["desk"]
    assert desk.rows_expected() == 9
    assert desk.cells()[0] == ("polar-64-32", "Conventional", 2, 32)
    paper = PRESETS["paper"]
    assert len(paper.codes) == 7
    assert paper.sizes == ((2, 32), (2, 64), (2, 128), (6, 32), (6, 64), (6, 128))
    assert len(paper.cells()) == 7 * 3 * 6
    assert paper.schedule.epochs == 1000 and paper.schedule.batches_per_epoch == 1000
    assert paper.stop == StopRule()


def test_config_parsing():
    text = """
    # tiny sweep
    preset = desk
    codes = bch-15-7, polar-16-8
    variants = SM,DM
    sizes = 1x8, 2x16
    snr_db = 2, 3.5
    heads = 2
    epochs = 1   # inline comment
    min_frames = 100
    """
    spec = spec_from_mapping(parse_config_text(text))
    assert spec.codes == ("bch-15-7", "polar-16-8")
    assert spec.sizes == ((1, 8), (2, 16))
    assert spec.snr_db == (2.0, 3.5)
    assert spec.schedule.epochs == 1 and spec.stop.min_frames == 100
    assert spec.rows_expected() == 2 * 2 * 2 * 2
    with pytest.raises(ParseError):
        parse_config_text("codes bch-15-7")
    with pytest.raises(ParseError):
        spec_from_mapping({"colour": "blue"})
    with pytest.raises(ParseError):
        spec_from_mapping({"sizes": "2by32"})


def tiny_spec(**kw):
    base = SweepSpec(
        codes=("bch-15-7",),
        variants=("Conventional", "SM", "DM"),
        sizes=((1, 8),),
        snr_db=(2.0, 4.0),
        heads=2,
        schedule=schedule_preset("smoke", epochs=1, batches_per_epoch=2, batch_size=8),
        stop=StopRule(min_frames=200, min_frame_errors=0, block_size=100),
    )
    return base.__class__(**{**base.__dict__, **kw})


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_sweep_outputs_and_resume(tmp_path):
    spec = tiny_spec()
    full = sweep(spec, tmp_path / "full")
    assert len(full) == spec.rows_expected() == 6
    rows = read_csv(tmp_path / "full" / "results.csv")
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 7
    assert {r[4] for r in rows[1:]} == {"Conventional", "SM", "DM"}
    mirror = json.loads((tmp_path / "full" / "results.json").read_text())
    assert len(mirror) == 6 and set(mirror[0]) == set(CSV_COLUMNS)

    # interrupted after one cell, then resumed
    part = sweep(spec, tmp_path / "resumed", max_cells=1)
    assert len(part) == 2
    assert len(read_csv(tmp_path / "resumed" / "results.csv")) == 3
    sweep(spec, tmp_path / "resumed")
    assert (tmp_path / "resumed" / "results.csv").read_text() == (tmp_path / "full" / "results.csv").read_text()


def test_sweep_six_significant_digits(tmp_path):
    sweep(tiny_spec(variants=("SM",)), tmp_path)
    for row in read_csv(tmp_path / "results.csv")[1:]:
        ber = row[CSV_COLUMNS.index("ber")]
        digits = ber.replace(".", "").replace("-", "").split("e")[0].lstrip("0")
        assert len(digits) <= 6


def test_batch_means_stderr():
    code = codes.get_code("bch-15-7")
    r = evaluate(HardDecisionDecoder(), code, 2.0, StopRule(min_frames=2000, min_frame_errors=0, block_size=100)).at(2.0)
    rates = np.array(r.block_bit_errors) / (100 * code.n)
    assert sum(r.block_frames) == r.frames and sum(r.block_bit_errors) == r.bit_errors
    assert r.ber_stderr_batch() == pytest.approx(rates.std(ddof=1) / np.sqrt(len(rates)), rel=1e-12)
    # independent bits: the two estimators agree roughly
    assert 0.5 < r.ber_stderr_batch() / r.ber_stderr() < 2
