import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmecct import channel, codes, rng
from dmecct.errors import BadRate, DimensionMismatch

H = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)


def test_sigma_from_snr():
    assert channel.sigma_from_snr(4.0, 0.5) == pytest.approx(1 / math.sqrt(10 ** 0.4), rel=1e-12)
    assert channel.sigma_from_snr(4.0, 0.5) == pytest.approx(0.6310, abs=5e-5)
    assert channel.sigma_from_snr(0.0, 0.5) == 1.0
    assert channel.sigma_from_snr(6.0, 11 / 31) == pytest.approx((2 * 11 / 31 * 10 ** 0.6) ** -0.5, rel=1e-12)
    assert channel.sigma_from_snr(6.0, 11 / 31) == pytest.approx(0.594935, abs=1e-6)
    with pytest.raises(BadRate):
        channel.sigma_from_snr(4.0, 0.0)
    with pytest.raises(BadRate):
        channel.sigma_from_snr(4.0, 1.5)


def test_transmit_limits():
    x = np.array([0, 1, 1, 0], dtype=np.uint8)
    s = channel.transmit(x, 1e-300, rng.stream(0, "t"))
    assert np.array_equal(s.y, [1.0, -1.0, -1.0, 1.0])
    s = channel.transmit(np.zeros(5, dtype=np.uint8), 0.5, rng.stream(0, "t"))
    assert np.array_equal(s.x_s, np.ones(5))


def test_transmit_noise_mean_within_clt_bound():
    sigma = 0.8
    n = 100_000
    s = channel.transmit(np.zeros(n, dtype=np.uint8), sigma, rng.stream(3, "clt"))
    assert abs((s.y - s.x_s).mean()) <= 4 * sigma / math.sqrt(n)
    assert (s.y - s.x_s).std() == pytest.approx(sigma, rel=0.02)


def test_transmit_reproducible_and_keyed():
    x = np.zeros((4, 7), dtype=np.uint8)
    a = channel.transmit(x, 0.7, rng.stream(1, "eval", 5, 2))
    b = channel.transmit(x, 0.7, rng.stream(1, "eval", 5, 2))
    c = channel.transmit(x, 0.7, rng.stream(1, "eval", 5, 3))
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)


def test_per_frame_sigma():
    x = np.zeros((3, 4), dtype=np.uint8)
    s = channel.transmit(x, np.array([1e-300, 1e-300, 1.0]), rng.stream(0, "x"))
    assert np.array_equal(s.y[:2], np.ones((2, 4)))
    assert not np.array_equal(s.y[2], np.ones(4))


def test_syndrome_examples():
    assert channel.syndrome(H, [0.9, -0.2, 1.1]).tolist() == [1, 1]
    assert channel.syndrome(H, [1.0, 1.0, 1.0]).tolist() == [0, 0]
    # y = 0 maps to bit 0
    assert channel.hard_decision([0.0, -0.0, -1e-12]).tolist() == [0, 0, 1]
    with pytest.raises(DimensionMismatch):
        channel.syndrome(H, [1.0, 1.0])


def test_preprocess_examples():
    inp = channel.preprocess(np.array([0.9, -0.2, 1.1]), H)
    assert np.allclose(inp.magnitude, [0.9, 0.2, 1.1])
    assert inp.syndrome_embed.tolist() == [-1, -1]
    raw = channel.preprocess(np.array([0.9, -0.2, 1.1]), H, bipolar=False)
    assert raw.syndrome_embed.tolist() == [1, 1]
    clean = channel.preprocess(np.ones(3), H)
    assert np.array_equal(clean.magnitude, np.ones(3))
    assert clean.syndrome_embed.tolist() == [1, 1]
    assert clean.concat().shape == (5,)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["bch-15-7", "polar-16-8", "bch-31-16"]), st.integers(0, 2**32 - 1))
def test_preprocess_codeword_invariance(name, seed):
    code = codes.get_code(name)
    g = np.random.default_rng(seed)
    noise = np.abs(g.normal(1.0, 0.6, code.n)) * np.where(g.random(code.n) < 0.2, -1, 1)
    msgs = g.integers(0, 2, (2, code.k))
    words = codes.encode(code, msgs)
    inputs = [channel.preprocess(channel.bpsk(w) * noise, code.h_conv) for w in words]
    assert np.array_equal(inputs[0].magnitude, inputs[1].magnitude)
    assert np.array_equal(inputs[0].syndrome_embed, inputs[1].syndrome_embed)


def test_mult_noise_target_examples():
    assert channel.mult_noise_target(np.array([0.3, -0.4]), np.ones(2)).tolist() == [0, 1]
    xs = np.array([1.0, -1.0, -1.0])
    assert not channel.mult_noise_target(xs, xs).any()
    assert channel.mult_noise_target(np.array([0.2, 0.5]), np.array([-1.0, 1.0])).tolist() == [1, 0]
    with pytest.raises(DimensionMismatch):
        channel.mult_noise_target(np.ones(2), np.ones(3))


def test_postprocess_examples():
    assert channel.postprocess(np.array([0.5, -0.8]), np.array([2.1, -1.3])).tolist() == [0, 0]
    y = np.array([0.4, -0.3, 1.2, -2.0])
    assert np.array_equal(channel.postprocess(y, np.ones(4)), channel.hard_decision(y))
    with pytest.raises(DimensionMismatch):
        channel.postprocess(np.ones(2), np.ones(3))


@pytest.mark.parametrize("name", codes.BUNDLED_CODES)
def test_oracle_identity_and_zero_syndrome(name):
    code = codes.get_code(name)
    gen = rng.stream(7, "oracle", code.n, code.k)
    msgs = gen.integers(0, 2, (1000, code.k))
    x = codes.encode(code, msgs)
    s = channel.transmit(x, channel.sigma_from_snr(2.0, code.rate), gen)
    assert np.array_equal(channel.postprocess(s.y, s.y * s.x_s), x)
    clean = channel.bpsk(x)
    for h in (code.h_conv, code.h_sys, code.h_mod):
        if h is not None:
            assert not channel.syndrome(h, clean).any()


def test_box_muller_moments():
    z = rng.gaussian(rng.stream(11, "bm"), (200_000,))
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert z.var() == pytest.approx(1.0, abs=0.01)
    odd = rng.gaussian(rng.stream(11, "bm"), (3,))
    assert np.array_equal(odd, z[:3])
