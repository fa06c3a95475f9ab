"""Building blocks: secure product, AND gates, fan-in tables, powers."""

import math

import numpy as np
import pytest

from trimpc import ConfigError, RingError, RingParams, Scheme, Session
from trimpc.primitives import (
    and2,
    fanin_and_base,
    filtered_keys,
    mul,
    open_bits,
    power,
    reencrypt,
    scaled_pow,
    share_bits,
)

from conftest import all_pairs, bit_out


def test_mul_worked_examples(run_checked):
    sess = Session(seed=0, lanes=2)
    ring8 = RingParams(8)
    x = sess.new_secret(np.array([5, 0], dtype=np.uint64), ring8, Scheme.ADDITIVE_MOD)
    y = sess.new_secret(np.array([7, 9], dtype=np.uint64), ring8, Scheme.ADDITIVE_MOD)
    z = run_checked(sess, mul(sess, x, y))
    assert list(sess.open(z)) == [35, 0]


def test_mul_exhaustive_l4(run_checked):
    """All (a, b) pairs at 100 random key pairs each: matches (a*b) mod 16."""
    a, b = all_pairs(4)
    a = np.tile(a, 100)
    b = np.tile(b, 100)
    sess = Session(seed=1, lanes=len(a))
    ring = RingParams(4)
    x = sess.new_secret(a, ring, Scheme.ADDITIVE_MOD)
    y = sess.new_secret(b, ring, Scheme.ADDITIVE_MOD)
    z = run_checked(sess, mul(sess, x, y))
    assert np.array_equal(sess.open(z), (a * b) & np.uint64(15))
    assert sess.open(z)[np.flatnonzero((a == 13) & (b == 14))[0]] == 6  # 182 mod 16


def test_mul_budget_32_bits(run_checked):
    """One multiplication of 32-bit operands: 2 rounds, 160 bits total."""
    sess = Session(seed=2, lanes=4)
    ring = RingParams(32)
    x = sess.new_secret(np.array([1, 2, 3, 4], dtype=np.uint64), ring, Scheme.ADDITIVE_MOD)
    y = sess.new_secret(np.array([5, 6, 7, 8], dtype=np.uint64), ring, Scheme.ADDITIVE_MOD)
    run_checked(sess, mul(sess, x, y))
    assert sess.meter.rounds == 2
    assert sess.meter.bits_total == 160


def test_mul_pure_additive_exact_product(run_checked):
    sess = Session(seed=3, lanes=3)
    ring = RingParams(10, b=12)
    a = np.array([1000, 999, 31], dtype=np.uint64)
    b = np.array([1000, 2, 31], dtype=np.uint64)
    x = sess.new_secret(a, ring, Scheme.PURE_ADDITIVE)
    y = sess.new_secret(b, ring, Scheme.PURE_ADDITIVE)
    z = run_checked(sess, mul(sess, x, y))
    assert np.array_equal(sess.open(z), a * b)  # exact, not mod 2^10


def test_mul_fresh_output_key():
    """Output keys decorrelate from input keys across many runs."""
    sess = Session(seed=4, lanes=4000)
    ring = RingParams(16)
    x = sess.new_secret(np.full(4000, 3, dtype=np.uint64), ring, Scheme.ADDITIVE_MOD)
    y = sess.new_secret(np.full(4000, 5, dtype=np.uint64), ring, Scheme.ADDITIVE_MOD)
    z = sess.run(mul(sess, x, y))
    corr = np.corrcoef(x.key.value.astype(float), z.key.value.astype(float))[0, 1]
    assert abs(corr) < 0.05


def test_and2_truth_table(run_checked):
    combos = [(a, b) for a in (0, 1) for b in (0, 1)]
    a = np.repeat([c[0] for c in combos], 64).astype(np.uint64)
    b = np.repeat([c[1] for c in combos], 64).astype(np.uint64)
    sess = Session(seed=5, lanes=len(a))
    z = run_checked(sess, and2(sess, share_bits(sess, a, 1), share_bits(sess, b, 1)))
    assert np.array_equal(bit_out(z), a & b)


def test_and2_budget():
    """32 parallel gates: 2 rounds and 5 bits per gate = 160 bits."""
    sess = Session(seed=6, lanes=8)
    vals = np.arange(8, dtype=np.uint64)
    x = share_bits(sess, vals, 32)
    y = share_bits(sess, vals * 3, 32)
    sess.run(and2(sess, x, y))
    assert sess.meter.rounds == 2
    assert sess.meter.bits_total == 5 * 32


@pytest.mark.parametrize("base", [3, 4])
def test_fanin_gate_exhaustive(base, run_checked):
    """Every input combination of one base-wide gate, many random keys."""
    vals = np.tile(np.arange(1 << base, dtype=np.uint64), 64)
    sess = Session(seed=7, lanes=len(vals))
    bits = share_bits(sess, vals, base)
    out = run_checked(sess, fanin_and_base(sess, bits, base))
    expect = (vals == (1 << base) - 1).astype(np.uint64)
    assert np.array_equal(bit_out(out), expect)
    assert sess.meter.rounds == 2


def test_fanin_gate_cost():
    sess = Session(seed=8, lanes=4)
    bits = share_bits(sess, np.array([7, 5, 0, 7], dtype=np.uint64), 3)
    sess.run(fanin_and_base(sess, bits, 3))
    # base + table + result = 3 + 8 + 1
    assert sess.meter.bits_total == 12


def test_fanin_base_bound():
    sess = Session(seed=9, lanes=1)
    bits = share_bits(sess, np.array([0], dtype=np.uint64), 9)
    with pytest.raises(ConfigError):
        sess.run(fanin_and_base(sess, bits, 9))


@pytest.mark.parametrize("i,expect_rounds", [(1, 0), (2, 2), (4, 4), (5, 6), (7, 6), (10, 8)])
def test_power_rounds(i, expect_rounds, run_checked):
    sess = Session(seed=10, lanes=5)
    ring = RingParams(16)
    a = np.array([3, 2, 7, 1, 5], dtype=np.uint64)
    x = sess.new_secret(a, ring, Scheme.ADDITIVE_MOD)
    z = run_checked(sess, power(sess, x, i))
    expect = np.array([pow(int(v), i, 1 << 16) for v in a], dtype=np.uint64)
    assert np.array_equal(sess.open(z), expect)
    assert sess.meter.rounds == expect_rounds
    if i > 1:
        assert sess.meter.rounds <= 2 * math.ceil(math.log2(i))


def test_power_special_cases(run_checked):
    sess = Session(seed=11, lanes=2)
    ring = RingParams(16)
    x = sess.new_secret(np.array([3, 9], dtype=np.uint64), ring, Scheme.ADDITIVE_MOD)
    one = run_checked(sess, power(sess, x, 0))
    assert list(sess.open(one)) == [1, 1]
    same = run_checked(sess, power(sess, x, 1))
    assert same is x
    assert sess.meter.rounds == 0  # identity and public one cost nothing

    sess2 = Session(seed=12, lanes=1)
    x2 = sess2.new_secret(np.array([3], dtype=np.uint64), RingParams(16), Scheme.ADDITIVE_MOD)
    assert sess2.open(sess2.run(power(sess2, x2, 4)))[0] == 81
    x3 = Session(seed=13, lanes=1)
    a3 = x3.new_secret(np.array([2], dtype=np.uint64), RingParams(8), Scheme.ADDITIVE_MOD)
    assert x3.open(x3.run(power(x3, a3, 10)))[0] == 0  # 1024 mod 256


def test_scaled_pow_examples(run_checked):
    sess = Session(seed=14, lanes=1)
    x = sess.new_secret(np.array([6], dtype=np.uint64), RingParams(12), Scheme.ADDITIVE_MOD)
    z = run_checked(sess, scaled_pow(sess, x, 2, 4))
    assert abs(int(sess.open(z)[0]) - 9) <= 1  # 36/4

    sess2 = Session(seed=15, lanes=1)
    x2 = sess2.new_secret(np.array([5], dtype=np.uint64), RingParams(12), Scheme.ADDITIVE_MOD)
    z2 = run_checked(sess2, scaled_pow(sess2, x2, 3, 4))
    assert abs(int(sess2.open(z2)[0]) - 7) <= 2  # floor(125/16) +- (i-1)

    sess3 = Session(seed=16, lanes=1)
    x3 = sess3.new_secret(np.array([9], dtype=np.uint64), RingParams(12), Scheme.ADDITIVE_MOD)
    assert run_checked(sess3, scaled_pow(sess3, x3, 1, 8)) is x3  # s^0 = 1


def test_scaled_pow_drift_bound(run_checked):
    """|result - floor(a^i / s^(i-1))| <= i - 1 for a <= s (the per-rescale
    unit error amplifies by a/s per level, so the bound needs that domain)."""
    for i in (2, 3, 4):
        for s in (4, 8):
            a = np.arange(0, s + 1, dtype=np.uint64)
            sess = Session(seed=17 + i + s, lanes=len(a))
            x = sess.new_secret(a, RingParams(16), Scheme.ADDITIVE_MOD)
            z = run_checked(sess, scaled_pow(sess, x, i, s))
            exact = np.array([int(v) ** i // s ** (i - 1) for v in a], dtype=np.int64)
            drift = np.abs(sess.open(z).astype(np.int64) - exact)
            assert drift.max() <= i - 1, (i, s, drift.max())


def test_scaled_pow_rejects_bad_scale():
    sess = Session(seed=20, lanes=1)
    x = sess.new_secret(np.array([2], dtype=np.uint64), RingParams(12), Scheme.ADDITIVE_MOD)
    with pytest.raises(ConfigError):
        sess.run(scaled_pow(sess, x, 2, 3))


def test_reencrypt(run_checked):
    sess = Session(seed=21, lanes=10_000)
    ring = RingParams(8, b=16)
    a = np.tile(np.arange(100, dtype=np.uint64), 100)
    x = sess.new_secret(a, ring, Scheme.PURE_ADDITIVE)
    z = run_checked(sess, reencrypt(sess, x))
    assert np.array_equal(sess.open(z), a)
    assert sess.meter.rounds == 1
    assert sess.meter.bits_total == 17  # pure-additive delta needs b + 1 bits
    # ciphertexts collide only when the fresh key equals the old one
    assert (z.ct.value != x.ct.value).mean() > 1 - 2**-12


def test_reencrypt_mod_costs_exactly_key_width(run_checked):
    sess = Session(seed=23, lanes=100)
    x = sess.new_secret(np.arange(100, dtype=np.uint64), RingParams(16), Scheme.ADDITIVE_MOD)
    z = run_checked(sess, reencrypt(sess, x))
    assert np.array_equal(sess.open(z), np.arange(100, dtype=np.uint64))
    assert (sess.meter.rounds, sess.meter.bits_total) == (1, 16)


def test_filtered_keys_top_bits_not_constant():
    sampler = filtered_keys(3)
    rng = np.random.default_rng(0)
    keys = sampler(rng, 8, 50_000)
    top = keys >> np.uint64(5)
    assert not ((top == 0) | (top == 7)).any()


def test_mul_rejects_xor():
    sess = Session(seed=22, lanes=1)
    ring = RingParams(4)
    x = sess.new_secret(np.array([1], dtype=np.uint64), ring, Scheme.XOR)
    y = sess.new_secret(np.array([1], dtype=np.uint64), ring, Scheme.XOR)
    with pytest.raises(RingError):
        sess.run(mul(sess, x, y))
