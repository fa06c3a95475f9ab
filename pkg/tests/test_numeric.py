"""Numerical operations: MSB, series reciprocal/log, public-constant ops, trig."""

import math

import numpy as np
import pytest

from trimpc import ConfigError, RingError, RingParams, Scheme, Session
from trimpc.logic import ComparisonConfig
from trimpc.numeric import (
    TangentConfig,
    TaylorConfig,
    cosine,
    div_by_public,
    division_and_log,
    geometric_truncation_max,
    index_msb,
    mul_by_public,
    open_fixed,
    share_fixed,
    sine,
    suitable_pair_fraction,
    tangent,
    truncation_tail_max,
)
from trimpc.primitives import open_bits

from conftest import bit_out

DET = ComparisonConfig.deterministic()


# ---------------------------------------------------------------------------
# index of the MSB


def test_index_msb_examples(run_checked):
    sess = Session(seed=0, lanes=2)
    x = sess.new_secret(np.array([10, 1], dtype=np.uint64), RingParams(8), Scheme.ADDITIVE_MOD)
    msb, pow2 = run_checked(sess, index_msb(sess, x, DET))
    assert list(sess.open(msb)) == [3, 0]
    assert list(open_bits(sess, pow2)) == [8, 1]


def test_index_msb_exhaustive_l8(run_checked):
    vals = np.repeat(np.arange(1, 32, dtype=np.uint64), 64)
    sess = Session(seed=1, lanes=len(vals))
    x = sess.new_secret(vals, RingParams(8), Scheme.ADDITIVE_MOD)
    msb, pow2 = run_checked(sess, index_msb(sess, x, DET))
    expect = np.array([int(v).bit_length() - 1 for v in vals], dtype=np.uint64)
    assert np.array_equal(sess.open(msb), expect)
    assert np.array_equal(open_bits(sess, pow2), np.uint64(1) << expect)


def test_index_msb_monte_carlo_rate(run_checked):
    """Uniform keys: success probability stays above Theorem-level p^l."""
    vals = np.repeat(np.arange(1, 32, dtype=np.uint64), 600)
    sess = Session(seed=2, lanes=len(vals))
    x = sess.new_secret(vals, RingParams(8), Scheme.ADDITIVE_MOD)
    msb, _ = run_checked(sess, index_msb(sess, x, ComparisonConfig()))
    expect = np.array([int(v).bit_length() - 1 for v in vals], dtype=np.uint64)
    ok = (sess.open(msb) == expect).mean()
    assert ok >= (1 - 2.0**-3) ** 6  # six comparisons, three sign bits each


# ---------------------------------------------------------------------------
# series pipeline


def test_taylor_tail_bounds():
    for n_t in (7, 13):
        bound = TaylorConfig(n_t).error_bound()
        assert truncation_tail_max(n_t, points=10_000) <= bound
    assert TaylorConfig(7).error_bound() < 2.0**-21
    assert TaylorConfig(13).error_bound() < 2.0**-52


def test_geometric_truncation_budget():
    """The implemented series' truncation stays inside the end-to-end budget."""
    assert geometric_truncation_max(7) <= (1 / 3) ** 8 * 1.0001
    assert (1 / 3) ** 8 < 2.0**-21 + 2.0**-10  # fits the l=24 tolerance


def test_division_examples(run_checked):
    sess = Session(seed=3, lanes=1)
    x = sess.new_secret(np.array([3], dtype=np.uint64), RingParams(24), Scheme.ADDITIVE_MOD)
    inv, lg = run_checked(sess, division_and_log(sess, x, TaylorConfig(7), DET))
    assert abs(open_fixed(sess, inv)[0] - 1 / 3) <= (2.0**-21 + 2.0**-10) / 3
    assert abs(open_fixed(sess, lg)[0] - math.log2(3)) <= 10 * 2.0**-12


def test_division_powers_of_two(run_checked):
    vals = np.uint64(1) << np.arange(10, dtype=np.uint64)
    sess = Session(seed=4, lanes=len(vals))
    x = sess.new_secret(vals, RingParams(24), Scheme.ADDITIVE_MOD)
    inv, lg = run_checked(sess, division_and_log(sess, x, TaylorConfig(7), DET))
    got_log = open_fixed(sess, lg)
    assert np.abs(got_log - np.arange(10)).max() <= 10 * 2.0**-12
    got_inv = open_fixed(sess, inv)
    assert np.abs(got_inv * vals.astype(float) - 1).max() <= 2.0**-21 + 2.0**-10


def test_division_sweep_l24(run_checked):
    a = np.arange(1, 1024, dtype=np.uint64)
    sess = Session(seed=5, lanes=len(a))
    x = sess.new_secret(a, RingParams(24), Scheme.ADDITIVE_MOD)
    inv, lg = run_checked(sess, division_and_log(sess, x, TaylorConfig(7), DET))
    rel = np.abs(open_fixed(sess, inv) * a.astype(float) - 1.0)
    log_err = np.abs(open_fixed(sess, lg) - np.log2(a.astype(float)))
    assert rel.max() <= 2.0**-21 + 2.0**-10
    assert log_err.max() <= 10 * 2.0**-12


def test_division_rejects_bad_ring():
    sess = Session(seed=6, lanes=1)
    x = sess.new_secret(np.array([1], dtype=np.uint64), RingParams(9), Scheme.ADDITIVE_MOD)
    with pytest.raises(RingError):
        sess.run(division_and_log(sess, x))


# ---------------------------------------------------------------------------
# public-constant arithmetic


def test_mul_by_public(run_checked):
    sess = Session(seed=7, lanes=2)
    x = sess.new_secret(np.array([5, 1], dtype=np.uint64), RingParams(8), Scheme.ADDITIVE_MOD)
    assert list(sess.open(mul_by_public(sess, x, 3))) == [15, 3]
    assert sess.meter.rounds == 0 and sess.meter.bits_total == 0
    same = mul_by_public(sess, x, 1)
    assert list(sess.open(same)) == [5, 1]


def test_mul_by_public_exhaustive_l6(run_checked):
    for c in range(8):
        vals = np.arange(64, dtype=np.uint64)
        sess = Session(seed=8 + c, lanes=len(vals))
        x = sess.new_secret(vals, RingParams(6), Scheme.ADDITIVE_MOD)
        out = mul_by_public(sess, x, c)
        assert np.array_equal(sess.open(out), (vals * np.uint64(c)) & np.uint64(63))


def test_div_by_public_worked_instance():
    """The a=7, c=3, K=5, k=3, K''=8 walk-through, step by step."""
    a, c, key, k = 7, 3, 5, 3
    e = a + key                        # 12
    u = (e << k) // c                  # floor(96/3)  = 32
    v = (key << k) // c                # floor(40/3)  = 13
    kpp = 8                            # fresh key, multiple of 2^k
    e1 = u + kpp - v                   # 27
    assert (u, v, e1) == (32, 13, 27)
    e2, final_key = e1 >> k, kpp >> k  # (3, 1)
    assert (e2, final_key) == (3, 1)
    assert e2 - final_key == a // c == 2


def test_div_by_public_protocol(run_checked):
    sess = Session(seed=9, lanes=3)
    ring = RingParams(8, b=20)
    x = sess.new_secret(np.array([7, 9, 255], dtype=np.uint64), ring, Scheme.PURE_ADDITIVE)
    out = run_checked(sess, div_by_public(sess, x, 3, k=3))
    assert list(sess.open(out)) == [2, 3, 85]
    assert sess.meter.rounds == 1


def test_div_by_public_identity(run_checked):
    sess = Session(seed=10, lanes=1)
    x = sess.new_secret(np.array([9], dtype=np.uint64), RingParams(8, b=20), Scheme.PURE_ADDITIVE)
    out = run_checked(sess, div_by_public(sess, x, 1, k=1))
    assert sess.open(out)[0] == 9


def test_div_by_public_full_grid(run_checked):
    """Theorem grid: every a < 2^8, c in [1, 16), minimal k, 1000 key pairs."""
    a = np.tile(np.arange(256, dtype=np.uint64), 1000)
    for c in range(1, 16):
        k = max(1, (c - 1).bit_length() + 1)
        assert 1 << (k - 1) >= c
        sess = Session(seed=100 + c, lanes=len(a))
        x = sess.new_secret(a, RingParams(8, b=24), Scheme.PURE_ADDITIVE)
        out = run_checked(sess, div_by_public(sess, x, c, k))
        assert np.array_equal(sess.open(out), a // np.uint64(c)), c


def test_div_by_public_extra_frac(run_checked):
    sess = Session(seed=11, lanes=1)
    x = sess.new_secret(np.array([7], dtype=np.uint64), RingParams(8, b=20), Scheme.PURE_ADDITIVE)
    out = run_checked(sess, div_by_public(sess, x, 3, k=3, extra_frac=4))
    assert sess.open(out)[0] == (7 << 4) // 3


def test_div_by_public_contract_errors():
    sess = Session(seed=12, lanes=1)
    x = sess.new_secret(np.array([7], dtype=np.uint64), RingParams(8, b=20), Scheme.PURE_ADDITIVE)
    with pytest.raises(ConfigError):
        sess.run(div_by_public(sess, x, 0, k=3))
    with pytest.raises(ConfigError):
        sess.run(div_by_public(sess, x, 5, k=3))  # 2^(k-1) = 4 < 5


# ---------------------------------------------------------------------------
# trigonometry


def test_sine_zero_and_half(run_checked):
    sess = Session(seed=13, lanes=2)
    x = share_fixed(sess, np.array([0.0, 0.5]), frac=8)
    out = run_checked(sess, sine(sess, x))
    got = open_fixed(sess, out)
    assert abs(got[0]) <= 2 / 256
    assert abs(got[1] - math.sin(0.5)) <= 2.0**-6


def test_sine_sweep(run_checked):
    rng = np.random.default_rng(3)
    a = rng.uniform(-math.pi, math.pi, size=10_000)
    sess = Session(seed=14, lanes=len(a))
    x = share_fixed(sess, a, frac=8, key_bits=50)
    out = run_checked(sess, sine(sess, x))
    grid = np.round(a * 256) / 256
    err = np.abs(open_fixed(sess, out) - np.sin(grid))
    assert err.max() <= 2.0**-6
    assert sess.meter.rounds == 5
    assert sess.meter.bits_total <= 400


def test_cosine_examples(run_checked):
    sess = Session(seed=15, lanes=2)
    x = share_fixed(sess, np.array([0.0, math.pi / 3]), frac=8)
    out = run_checked(sess, cosine(sess, x))
    got = open_fixed(sess, out)
    assert abs(got[0] - 1.0) <= 2 / 256
    assert abs(got[1] - 0.5) <= 2.0**-6


def test_pythagorean_identity(run_checked):
    rng = np.random.default_rng(4)
    a = rng.uniform(-math.pi, math.pi, size=5_000)
    s1 = Session(seed=16, lanes=len(a))
    s2 = Session(seed=17, lanes=len(a))
    sin_v = open_fixed(s1, s1.run(sine(s1, share_fixed(s1, a, frac=8))))
    cos_v = open_fixed(s2, s2.run(cosine(s2, share_fixed(s2, a, frac=8))))
    assert np.abs(sin_v**2 + cos_v**2 - 1).max() <= 2.0**-5


def test_tangent_key_suitability():
    frac = suitable_pair_fraction(TangentConfig(), n=100_000, seed=0)
    assert frac >= 0.999


def test_tangent_zero(run_checked):
    sess = Session(seed=18, lanes=32)
    x = share_fixed(sess, np.zeros(32), frac=8, key_bits=16)
    out = run_checked(sess, tangent(sess, x, TangentConfig(), DET))
    assert np.abs(open_fixed(sess, out)).max() <= 0.02


def test_tangent_quarter_pi(run_checked):
    """tan(pi/4) comes out near one; medians are tight, tails documented."""
    sess = Session(seed=19, lanes=64)
    vals = np.full(64, math.pi / 4)
    x = share_fixed(sess, vals, frac=8, key_bits=16)
    out = run_checked(sess, tangent(sess, x, TangentConfig(), DET))
    got = open_fixed(sess, out)
    expect = math.tan(round(math.pi / 4 * 256) / 256)
    err = np.abs(got - expect)
    assert np.median(err) <= 0.02
    assert np.quantile(err, 0.9) <= 0.15


def test_tangent_value_sweep(run_checked):
    rng = np.random.default_rng(5)
    a = rng.uniform(-1.2, 1.2, size=256)
    sess = Session(seed=20, lanes=len(a))
    x = share_fixed(sess, a, frac=8, key_bits=16)
    out = run_checked(sess, tangent(sess, x, TangentConfig(), DET))
    err = np.abs(open_fixed(sess, out) - np.tan(np.round(a * 256) / 256))
    assert np.median(err) <= 0.02
    assert np.quantile(err, 0.9) <= 0.2


def test_tangent_unsafe_reveal_flagged(run_checked):
    sess = Session(seed=21, lanes=8)
    x = share_fixed(sess, np.full(8, 0.5), frac=8, key_bits=16)
    out = run_checked(sess, tangent(sess, x, TangentConfig(), DET, unsafe_reveal=True),
                      allow_violations=True)
    assert len(sess.assert_views_legal()) > 0
    err = np.abs(open_fixed(sess, out) - math.tan(0.5))
    assert np.median(err) <= 0.05


def test_trig_plaintext_identities():
    """The identities the protocols rely on, validated on plain reals."""
    rng = np.random.default_rng(6)
    a = rng.uniform(-10, 10, size=1000)
    k = rng.uniform(-10, 10, size=1000)
    lhs = np.sin(a) + np.sin(k)
    rhs = 2 * np.sin((a + k) / 2) * np.cos((a - k) / 2)
    assert np.abs(lhs - rhs).max() < 1e-12
    lhs = np.cos(a) + np.cos(k)
    rhs = 2 * np.cos((a + k) / 2) * np.cos((a - k) / 2)
    assert np.abs(lhs - rhs).max() < 1e-12

    a = rng.uniform(-1.4, 1.4, size=1000)
    kk = rng.uniform(-1.4, 1.4, size=1000)
    kp = rng.uniform(-1.4, 1.4, size=1000)
    num = np.tan(kk) - np.tan(kp) + np.tan(a + kp) - np.tan(a + kk)
    den = np.tan(a + kp) * np.tan(kp) - np.tan(a + kk) * np.tan(kk)
    ok = np.abs(den) > 1e-3
    assert np.abs(num[ok] / den[ok] - np.tan(a[ok])).max() < 1e-9
