"""Plaintext reference implementations and brute-force protocol checkers.

Everything here computes with plain Python integers and floats, sharing no
code with the protocol stack, so a disagreement always means a protocol bug.
Counterexamples serialize to one CSV line each and replay from that line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def ripple_carries(a: int, key: int, width: int) -> list[int]:
    """Carry into each bit position of a + key (c_0 = 0)."""
    out = []
    carry = 0
    for i in range(width):
        out.append(carry)
        if ((a >> i) & 1) + ((key >> i) & 1) + carry >= 2:
            carry = 1
        else:
            carry = 0
    return out


def ripple_carries_vec(a, key, width: int) -> np.ndarray:
    """Lane-wise ripple carries, shape (width, lanes)."""
    a = np.asarray(a, dtype=np.uint64)
    key = np.asarray(key, dtype=np.uint64)
    carry = np.zeros(a.shape, dtype=np.uint64)
    rows = []
    one = np.uint64(1)
    for i in range(width):
        rows.append(carry)
        total = ((a >> np.uint64(i)) & one) + ((key >> np.uint64(i)) & one) + carry
        carry = (total >= 2).astype(np.uint64)
    return np.stack(rows)


def carry_out(a: int, key: int, width: int) -> int:
    return 1 if a + key >= (1 << width) else 0


def popcount(x: int) -> int:
    return bin(x).count("1")


def hamming(x: int, y: int) -> int:
    return popcount(x ^ y)


def msb_index(a: int) -> int:
    if a <= 0:
        raise ValueError("MSB of a non-positive value")
    return a.bit_length() - 1


def floor_scaled_power(a: int, i: int, s: int) -> int:
    return a**i // s ** (i - 1)


_EVALS = {
    "carry_bits": lambda a, k, l: ripple_carries(a, k, l),
    "carry_out": lambda a, k, l: carry_out(a, k, l),
    "hamming": lambda x, y: hamming(x, y),
    "popcount": lambda x: popcount(x),
    "mul": lambda x, y, l: (x * y) % (1 << l),
    "and": lambda x, y: x & y,
    "pow": lambda a, i, l: pow(a, i, 1 << l),
    "scaled_pow": floor_scaled_power,
    "div_public": lambda a, c: a // c,
    "index_msb": lambda a: msb_index(a),
    "inv": lambda a: 1.0 / a,
    "log2": lambda a: math.log2(a),
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "less_zero": lambda a: 1 if a < 0 else 0,
    "equal_zero": lambda a: 1 if a == 0 else 0,
}


def plain_eval(op: str, *args):
    """Reference semantics by operation name; raises KeyError on unknown ops."""
    return _EVALS[op](*args)


@dataclass
class Counterexample:
    op: str
    l: int
    a: int
    keys: str
    seed: int
    expected: object
    actual: object

    def line(self) -> str:
        return f"{self.op},{self.l},{self.a},{self.keys},{self.seed},{self.expected},{self.actual}"


@dataclass
class CheckReport:
    op: str
    total: int
    failures: list
    bad_count: int = 0

    def __post_init__(self):
        if not self.bad_count:
            self.bad_count = len(self.failures)

    @property
    def pass_rate(self) -> float:
        return 1.0 - self.bad_count / max(self.total, 1)

    def dump(self) -> str:
        return "\n".join(c.line() for c in self.failures)


def compare_lanes(op: str, l: int, a_vals, keys, seed: int, expected, actual) -> CheckReport:
    """Lane-wise comparison of protocol output against oracle values.

    Accepts per-lane scalars or per-lane vectors (first axis = lanes);
    only the first 50 counterexamples are materialized.
    """
    expected = np.asarray(expected)
    actual = np.asarray(actual)
    diff = expected != actual
    if diff.ndim > 1:
        diff = diff.reshape(diff.shape[0], -1).any(axis=1)
    bad = np.nonzero(diff)[0]
    failures = [
        Counterexample(op, l, int(a_vals[i]), hex(int(keys[i])) if keys is not None else "-",
                       seed, expected[i], actual[i])
        for i in bad[:50]
    ]
    report = CheckReport(op, int(diff.shape[0]), failures)
    report.bad_count = len(bad)
    return report


def exhaustive_lanes(l: int, key_bits: int, key_samples: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Every plaintext in [0, 2^l) crossed with sampled keys, as flat lanes."""
    n_a = 1 << l
    a = np.repeat(np.arange(n_a, dtype=np.uint64), key_samples)
    k = rng.integers(0, 1 << key_bits, size=n_a * key_samples, dtype=np.uint64)
    return a, k


def exhaustive_check(op: str, l: int, key_samples: int = 4, mode: str = "deterministic",
                     seed: int = 0, exponent: int = 3, scale: int = 4,
                     divisor: int = 3) -> CheckReport:
    """Run a protocol over its full plaintext domain and diff against the
    reference semantics.  Deterministic given the seed; lane budget is
    2^l * key_samples (keep below ~1e7).

    ``mode`` selects the comparison configuration: "deterministic" (Boolean
    carries, filtered keys) makes every listed operation exact;
    "montecarlo" reports the achieved pass rate instead.
    """
    from . import conversions, logic, numeric, primitives
    from .rings import RingParams, Scheme, from_signed, to_signed
    from .session import Session

    if (1 << l) * key_samples > 10**7:
        raise ValueError("lane budget exceeded; shrink l or key_samples")
    cfg = (logic.ComparisonConfig.deterministic() if mode == "deterministic"
           else logic.ComparisonConfig())
    uni = np.uint64

    def fresh(lanes):
        return Session(seed=seed, lanes=lanes)

    def grid1(domain):
        return np.repeat(np.asarray(domain, dtype=np.uint64), key_samples)

    def finish(sess, a_vals, keys, expected, actual):
        rep = compare_lanes(op, l, a_vals, keys, seed, expected, actual)
        if sess.assert_views_legal():
            raise AssertionError(f"view violation while checking {op}")
        return rep

    mask = uni((1 << l) - 1)
    if op == "mul":
        pairs = [(a, b) for a in range(1 << l) for b in range(1 << l)]
        a = grid1([p[0] for p in pairs])
        b = grid1([p[1] for p in pairs])
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        y = sess.new_secret(b, RingParams(l), Scheme.ADDITIVE_MOD)
        z = sess.run(primitives.mul(sess, x, y))
        return finish(sess, a, x.key.value, (a * b) & mask, sess.open(z))
    if op == "and2":
        pairs = [(a, b) for a in range(2) for b in range(2)]
        a = grid1([p[0] for p in pairs])
        b = grid1([p[1] for p in pairs])
        sess = fresh(len(a))
        z = sess.run(primitives.and2(sess, primitives.share_bits(sess, a, 1),
                                     primitives.share_bits(sess, b, 1)))
        return finish(sess, a, None, a & b, (z.e ^ z.k)[0].astype(np.uint64))
    if op in ("fanin_base", "fanin_hamming", "fanin_both"):
        vals = grid1(np.arange(1 << l))
        sess = fresh(len(vals))
        bits = primitives.share_bits(sess, vals, l)
        gen = {"fanin_base": logic.fanin_base(sess, bits, cfg.base),
               "fanin_hamming": logic.fanin_hamming(sess, bits, cfg),
               "fanin_both": logic.fanin_both(sess, bits, cfg)}[op]
        z = sess.run(gen)
        return finish(sess, vals, None, (vals == mask).astype(np.uint64),
                      (z.e ^ z.k)[0].astype(np.uint64))
    if op == "hamming":
        pairs = [(a, b) for a in range(1 << l) for b in range(1 << l)]
        xv = np.array([p[0] for p in pairs], dtype=np.uint64)
        yv = np.array([p[1] for p in pairs], dtype=np.uint64)
        sess = fresh(len(xv))
        z = sess.run(logic.hamming(sess, conversions.bit_planes(xv, l),
                                   conversions.bit_planes(yv, l)))
        exp = np.array([hamming(int(a), int(b)) for a, b in zip(xv, yv)], dtype=np.uint64)
        return finish(sess, xv, None, exp, sess.open(z))
    if op == "carry_bits":
        a, k = exhaustive_lanes(l, l, key_samples, np.random.default_rng(seed))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD, key=k)
        z = sess.run(logic.carry_bits(sess, x, cfg))
        exp = ripple_carries_vec(a, k, l)
        got = (z.e ^ z.k).astype(np.uint64)
        return finish(sess, a, k, exp.T, got.T)
    if op == "add_to_xor":
        a, k = exhaustive_lanes(l, l, key_samples, np.random.default_rng(seed))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD, key=k)
        z = sess.run(conversions.add_to_xor(sess, x, cfg))
        return finish(sess, a, k, a, primitives.open_bits(sess, z))
    if op == "xor_to_add":
        vals = grid1(np.arange(1 << l))
        sess = fresh(len(vals))
        z = sess.run(conversions.xor_to_add(sess, primitives.share_bits(sess, vals, l)))
        return finish(sess, vals, None, vals, sess.open(z))
    if op == "add_to_addmod":
        a, k = exhaustive_lanes(l, l + 4, key_samples, np.random.default_rng(seed))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l, b=l + 4), Scheme.PURE_ADDITIVE, key=k)
        z = conversions.add_to_addmod(sess, x)
        return finish(sess, a, k, a, sess.open(z))
    if op == "addmod_to_add_fast":
        dom = np.arange(1 << max(l - 3, 1))
        a = grid1(dom)
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        z = sess.run(conversions.addmod_to_add_fast(sess, x))
        return finish(sess, a, x.key.value, a, sess.open(z))
    if op == "addmod_to_add_slow":
        a, k = exhaustive_lanes(l, l, key_samples, np.random.default_rng(seed))
        sess = fresh(len(a))
        b = l + 8
        x = sess.new_secret(a, RingParams(l, b=b), Scheme.ADDITIVE_MOD, key=k)
        z = sess.run(conversions.addmod_to_add_slow(sess, x, b=b, cfg=cfg))
        return finish(sess, a, k, a, sess.open(z))
    if op == "equal_zero":
        a = grid1(np.arange(1 << l))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        z = sess.run(logic.equal_zero(sess, x, cfg))
        return finish(sess, a, x.key.value, (a == 0).astype(np.uint64),
                      (z.e ^ z.k)[0].astype(np.uint64))
    if op == "less_zero":
        span = 1 << (l - cfg.n_s)
        dom = np.arange(-span + 1, span)
        a = np.repeat(dom, key_samples)
        sess = fresh(len(a))
        x = sess.new_secret(from_signed(a, l), RingParams(l, n_s=cfg.n_s), Scheme.ADDITIVE_MOD)
        z = sess.run(logic.less_zero(sess, x, cfg))
        return finish(sess, a, x.key.value, (a < 0).astype(np.uint64),
                      (z.e ^ z.k)[0].astype(np.uint64))
    if op == "pow":
        a = grid1(np.arange(1 << l))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        z = sess.run(primitives.power(sess, x, exponent))
        exp = np.array([pow(int(v), exponent, 1 << l) for v in np.arange(1 << l)], dtype=np.uint64)
        return finish(sess, a, x.key.value, np.repeat(exp, key_samples), sess.open(z))
    if op == "scaled_pow":
        top = 1
        while floor_scaled_power(top + 1, exponent, scale) ** 2 < (1 << (l - 3)) and top + 1 < (1 << l):
            top += 1
        a = grid1(np.arange(top))
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        z = sess.run(primitives.scaled_pow(sess, x, exponent, scale))
        exact = np.array([floor_scaled_power(int(v), exponent, scale) for v in a], dtype=np.int64)
        ok = np.abs(sess.open(z).astype(np.int64) - exact) <= exponent - 1
        return finish(sess, a, x.key.value, np.ones(len(a), dtype=bool), ok)
    if op == "mul_by_public":
        pairs = [(a, c) for a in range(1 << l) for c in range(8)]
        a = grid1([p[0] for p in pairs])
        c = np.repeat(np.array([p[1] for p in pairs], dtype=np.uint64), key_samples)
        sess = fresh(len(a))
        outs = np.empty(len(a), dtype=np.uint64)
        for cv in range(8):
            m = c == cv
            if not m.any():
                continue
            sub = fresh(int(m.sum()))
            x = sub.new_secret(a[m], RingParams(l), Scheme.ADDITIVE_MOD)
            outs[m] = sub.open(numeric.mul_by_public(sub, x, cv))
        return compare_lanes(op, l, a, None, seed, (a * c) & mask, outs)
    if op == "div_by_public":
        a = grid1(np.arange(1 << l))
        k = max(1, divisor.bit_length() + 1)
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l, b=l + 10), Scheme.PURE_ADDITIVE)
        z = sess.run(numeric.div_by_public(sess, x, divisor, k))
        return finish(sess, a, x.key.value, a // uni(divisor), sess.open(z))
    if op == "index_msb":
        dom = np.arange(1, 1 << (l - 3))
        a = grid1(dom)
        sess = fresh(len(a))
        x = sess.new_secret(a, RingParams(l), Scheme.ADDITIVE_MOD)
        msb, pow2 = sess.run(numeric.index_msb(sess, x, cfg))
        exp = np.array([msb_index(int(v)) for v in a], dtype=np.uint64)
        return finish(sess, a, x.key.value, exp, sess.open(msb))
    raise KeyError(f"no exhaustive domain for op {op!r}")
