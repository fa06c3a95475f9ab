"""Logical operations: Hamming distance, three fan-in AND strategies,
equality to zero, less-than-zero (single and majority), and carry bits.

The comparison walks the blinded value and its key from the top bit down and
returns the key bit at the most significant position where they differ.  With
uniform keys that equals the sign bit except with probability 2^-n_s; the
``filtered_keys`` switch trades key entropy for an always-correct answer,
which is what the exhaustive test modes rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import conversions
from .primitives import (
    BitShares,
    and2,
    concat_bits,
    fanin_gates,
    filtered_keys,
    new_bits,
    private_bit_products,
    reencrypt,
    xor_bits,
    _wrap,
)
from .rings import ConfigError, RingError, RingParams, Scheme, SharedSecret
from .session import EVH, HE, KH, Session, par

U1 = np.uint64(1)


@dataclass(frozen=True)
class ComparisonConfig:
    """Knobs for the comparison stack.

    n_s     sign bits assumed on comparison inputs (error <= 2^-n_s per run)
    n_e     repetitions for the majority variant (odd)
    n_b     sign bits of the majority stage; derived from n_e/n_s if None
    base    fan-in width for gate trees (2..8)
    strategy   top-level equal-zero fan-in: hamming | base | both
    carry_method   comparison (Monte Carlo) | boolean (deterministic)
    filtered_keys  resample comparison keys so the top sign-region bits are
                   never constant; makes comparisons exact, costs key entropy
    """

    n_s: int = 4
    n_e: int = 1
    n_b: int | None = None
    base: int = 6
    strategy: str = "hamming"
    carry_method: str = "comparison"
    filtered_keys: bool = False

    @classmethod
    def deterministic(cls, **kw) -> "ComparisonConfig":
        """Test mode: Boolean carries plus filtered keys, fully reproducible."""
        kw.setdefault("carry_method", "boolean")
        kw.setdefault("filtered_keys", True)
        return cls(**kw)

    def majority_sign_bits(self) -> int:
        if self.n_b is not None:
            return self.n_b
        chernoff = self.n_e * ((1 << (self.n_s - 1)) - 1) / 6
        return max(2, min(40, math.ceil(chernoff / math.log(2))))


DEFAULT = ComparisonConfig()


def _planes(values, w):
    return conversions.bit_planes(values, w)


# ---------------------------------------------------------------------------
# Hamming distance


def hamming_width(w: int) -> int:
    """Ring width for a distance over w bits: the value plus one headroom bit."""
    return math.ceil(math.log2(w + 1)) + 1


def hamming(sess: Session, x_bits: np.ndarray, y_bits: np.ndarray):
    """Distance between a private bit plane at EVH and one at KH.

    sum(x_i + y_i - 2 x_i y_i) lands additively shared in a ring just wide
    enough for the count; the cross products go through the helper's masked
    tables.  Two rounds.
    """
    if x_bits.shape != y_bits.shape:
        raise RingError("hamming needs equal bit widths")
    w = x_bits.shape[0]
    r = hamming_width(w)
    mask = np.uint64((1 << r) - 1)
    e_p, k_p = yield from private_bit_products(sess, sess.tag("ham"), x_bits, y_bits, r)
    ev = (x_bits.astype(np.uint64).sum(axis=0) - 2 * e_p.sum(axis=0, dtype=np.uint64)) & mask
    kv = (-(y_bits.astype(np.uint64).sum(axis=0)) - 2 * k_p.sum(axis=0, dtype=np.uint64)) & mask
    return _wrap(sess, ev, kv, RingParams(r), Scheme.ADDITIVE_MOD)


def hamming_of_secret(sess: Session, x: SharedSecret):
    """HAM(E, K): zero iff the sharing decrypts to zero (any scheme)."""
    w = x.ring.effective_bits(x.scheme, x.ct.value)
    out = yield from hamming(sess, _planes(x.ct.value, w), _planes(x.key.value, w))
    return out


# ---------------------------------------------------------------------------
# fan-in AND


def _xnor_view(sess: Session, ev, kv, w: int) -> BitShares:
    """Bit i holds [E_i == K_i]; all bits one iff the pair decrypts to zero."""
    return new_bits(sess, _planes(ev, w) ^ 1, _planes(kv, w))


def _gate_tree(sess: Session, bits: BitShares, base: int):
    while bits.w > 1:
        bits = yield from fanin_gates(sess, bits, base)
    return bits


def fanin_base(sess: Session, bits: BitShares, base: int | None = None, cfg: ComparisonConfig = DEFAULT):
    """AND of w shared bits by a tree of base-wide gates: 2*ceil(log_base w) rounds."""
    out = yield from _gate_tree(sess, bits, base or cfg.base)
    return out


def fanin_hamming(sess: Session, bits: BitShares, cfg: ComparisonConfig = DEFAULT):
    """AND of w shared bits by iterated Hamming distances.

    Count the zero bits; the AND holds iff the count is zero, and testing a
    count for zero is the same problem log-many bits smaller.  Between
    iterations the count converts to XOR bits (Boolean carries: the rings
    here are a handful of bits, where the gate network is both cheaper and
    exact).  Once the count fits a single gate, one fan-in finishes it.
    """
    terminal_w = cfg.base
    if bits.w <= terminal_w:
        out = yield from _gate_tree(sess, bits, cfg.base)
        return out
    cur = yield from hamming(sess, bits.e ^ 1, bits.k)  # distance counts zeros
    while True:
        r = cur.ring.l
        if r <= terminal_w:
            out = yield from _gate_tree(sess, _xnor_view(sess, cur.ct.value, cur.key.value, r), cfg.base)
            return out
        bcfg = replace(cfg, carry_method="boolean")
        xbits = yield from conversions.add_to_xor(sess, cur, bcfg)
        cur = yield from hamming(sess, xbits.e, xbits.k)  # popcount of the distance


def fanin_both(sess: Session, bits: BitShares, cfg: ComparisonConfig = DEFAULT):
    """One Hamming pass, then a gate tree over the short distance."""
    if bits.w == 1:
        return new_bits(sess, bits.e.copy(), bits.k.copy())
    cur = yield from hamming(sess, bits.e ^ 1, bits.k)
    out = yield from _gate_tree(sess, _xnor_view(sess, cur.ct.value, cur.key.value, cur.ring.l), cfg.base)
    return out


# ---------------------------------------------------------------------------
# equality and comparison


def equal_zero(sess: Session, x: SharedSecret, cfg: ComparisonConfig = DEFAULT):
    """[a == 0] as an XOR bit: the AND of per-bit agreement between E and K."""
    w = x.ring.effective_bits(x.scheme, x.ct.value)
    bits = _xnor_view(sess, x.ct.value, x.key.value, w)
    if cfg.strategy == "hamming":
        out = yield from fanin_hamming(sess, bits, cfg)
    elif cfg.strategy == "base":
        out = yield from _gate_tree(sess, bits, cfg.base)
    elif cfg.strategy == "both":
        out = yield from fanin_both(sess, bits, cfg)
    else:
        raise ConfigError(f"unknown fan-in strategy {cfg.strategy!r}")
    return out


def _lz_recurse(sess: Session, ev, kv, w: int, cfg: ComparisonConfig):
    """Key bit at the most significant position where E and K differ (0 if none)."""
    if w == 1:
        # differ and key set: (~E0) & K0
        e_p, k_p = yield from private_bit_products(
            sess, sess.tag("lz1"), _planes(ev, 1) ^ 1, _planes(kv, 1), 1)
        return new_bits(sess, e_p.astype(np.uint8), k_p.astype(np.uint8))
    lh = (w + 1) // 2
    rw = w - lh
    shift = np.uint64(rw)
    lo_mask = np.uint64((1 << rw) - 1)
    el, kl = ev >> shift, kv >> shift
    er, kr = ev & lo_mask, kv & lo_mask

    def eq_gen():
        out = yield from _gate_tree(sess, _xnor_view(sess, el, kl, lh), cfg.base)
        return out

    b, lle0, rle0 = yield from par(
        eq_gen(),
        _lz_recurse(sess, el, kl, lh, cfg),
        _lz_recurse(sess, er, kr, rw, cfg),
    )
    # top halves equal -> answer lives in the low half
    not_b = new_bits(sess, b.e ^ 1, b.k)
    both = yield from and2(sess, concat_bits(sess, [b, not_b]), concat_bits(sess, [rle0, lle0]))
    return new_bits(sess, both.e[0:1] ^ both.e[1:2], both.k[0:1] ^ both.k[1:2])


def less_zero(sess: Session, x: SharedSecret, cfg: ComparisonConfig = DEFAULT,
              rerandomize: bool | None = None):
    """[a < 0] for a two's-complement additive-mod sharing.

    Monte Carlo with uniform keys (error <= 2^-n_s); exact under
    ``filtered_keys`` provided the plaintext leaves n_s sign bits free.
    """
    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("comparison expects an additive-mod sharing")
    if rerandomize is None:
        rerandomize = cfg.filtered_keys
    if rerandomize:
        ns = min(cfg.n_s, x.ring.l)
        if ns >= 2:
            x = yield from reencrypt(sess, x, key_filter=filtered_keys(ns))
    out = yield from _lz_recurse(sess, x.ct.value, x.key.value, x.ring.l, cfg)
    return out


def multi_less_zero(sess: Session, x: SharedSecret, cfg: ComparisonConfig = DEFAULT):
    """Majority over n_e fresh encryptions of the same value, then one more
    comparison on the tally (Chernoff-driven sign width).

    Odd n_e makes the majority strict; an even count is accepted and breaks
    the (vanishingly unlikely) tie toward "not negative".
    """
    if cfg.n_e < 1:
        raise ConfigError("need at least one repetition")
    if cfg.n_e == 1:
        out = yield from less_zero(sess, x, cfg)
        return out
    ring = x.ring
    mask = np.uint64(ring.mask)
    n_e = cfg.n_e
    n_b = cfg.majority_sign_bits()
    sampler = filtered_keys(min(cfg.n_s, ring.l)) if cfg.filtered_keys and min(cfg.n_s, ring.l) >= 2 else None

    t = sess.tag("mlz")
    fresh = np.empty((n_e, sess.lanes), dtype=np.uint64)
    for i in range(n_e):
        fresh[i] = (sampler or (lambda rng, b, n: rng.integers(0, 1 << b, size=n, dtype=np.uint64)))(
            sess.rng(KH), ring.l, sess.lanes)
    deltas = (fresh - x.key.value) & mask
    sess.send(KH, EVH, f"{t}.d", deltas, n_e * ring.l)
    yield
    deltas = sess.recv(EVH, f"{t}.d")
    evs = (x.ct.value[None, :] + deltas) & mask
    shares = [_wrap(sess, evs[i], fresh[i], ring, Scheme.ADDITIVE_MOD) for i in range(n_e)]

    results = yield from par(*[less_zero(sess, s, cfg, rerandomize=False) for s in shares])

    m = 1 + int(math.floor(math.log2(n_e))) + n_b
    lifted = yield from par(*[conversions.xor_to_add(sess, r, total_l=m) for r in results])
    mmask = np.uint64((1 << m) - 1)
    se = sum(s.ct.value for s in lifted) & mmask
    sk = sum(s.key.value for s in lifted) & mmask
    # majority of ones <=> floor(n_e/2) - sum < 0
    tally = _wrap(sess, (np.uint64(n_e // 2) - se) & mmask, (-sk) & mmask, RingParams(m), Scheme.ADDITIVE_MOD)
    out = yield from less_zero(sess, tally, replace(cfg, n_s=n_b), rerandomize=cfg.filtered_keys)
    return out


# ---------------------------------------------------------------------------
# carry bits


def _generate_propagate(sess: Session, ev, kv, w: int):
    """g_i = (~E_i) & K_i (helper tables), p_i = (~E_i) xor K_i (local)."""
    ue = _planes(ev, w) ^ 1
    vk = _planes(kv, w)
    e_g, k_g = yield from private_bit_products(sess, sess.tag("gen"), ue, vk, 1)
    g = new_bits(sess, e_g.astype(np.uint8), k_g.astype(np.uint8))
    p = new_bits(sess, ue, vk)
    return g, p


def _prefix_scan(sess: Session, g: BitShares, p: BitShares):
    """Kogge-Stone scan of the carry operator; entry j ends up holding the
    carry generated by bits [0..j]."""
    ge, gk = g.e.copy(), g.k.copy()
    pe, pk = p.e.copy(), p.k.copy()
    n = g.e.shape[0]
    offset = 1
    while offset < n:
        span = n - offset
        hi_p = new_bits(sess, np.concatenate([pe[offset:], pe[offset:]]),
                        np.concatenate([pk[offset:], pk[offset:]]))
        lo = new_bits(sess, np.concatenate([ge[:span], pe[:span]]),
                      np.concatenate([gk[:span], pk[:span]]))
        prod = yield from and2(sess, hi_p, lo)
        ge[offset:] ^= prod.e[:span]
        gk[offset:] ^= prod.k[:span]
        pe[offset:] = prod.e[span:]
        pk[offset:] = prod.k[span:]
        offset *= 2
    return ge, gk


def _carries_boolean(sess: Session, x: SharedSecret, w: int, include_out: bool):
    """Deterministic carry network from the observable bit planes.

    The carry out of position i is maj(~E_i, K_i, c_i); a parallel-prefix
    scan evaluates every position in 2 + 2*ceil(log2 w) rounds.
    """
    g, p = yield from _generate_propagate(sess, x.ct.value, x.key.value, w)
    ge, gk = yield from _prefix_scan(sess, g, p)
    zeros = np.zeros((1, sess.lanes), dtype=np.uint8)
    hi = w if include_out else w - 1
    return new_bits(sess, np.concatenate([zeros, ge[:hi]]), np.concatenate([zeros, gk[:hi]]))


def _carries_comparison(sess: Session, x: SharedSecret, w: int, include_out: bool, cfg: ComparisonConfig):
    """c_i = [E mod 2^i < K mod 2^i], one comparison per bit position.

    Each difference is re-keyed into a ring with n_s extra sign bits; the
    result inherits the comparison's error per bit.
    """
    h = max(2, cfg.n_s)
    t = sess.tag("cmp")
    ev, kv = x.ct.value, x.key.value
    top = w + 1 if include_out else w
    positions = list(range(1, top))
    sampler = filtered_keys(h) if cfg.filtered_keys else None
    fresh, deltas, widths = [], [], []
    for i in positions:
        ring_i = RingParams(i + h)
        mask_i = np.uint64(ring_i.mask)
        ki = (sampler or (lambda rng, b, n: rng.integers(0, 1 << b, size=n, dtype=np.uint64)))(
            sess.rng(KH), i + h, sess.lanes)
        kmod = kv & np.uint64((1 << i) - 1)
        fresh.append(ki)
        deltas.append((ki - kmod) & mask_i)
        widths.append(i + h)
    sess.send(KH, EVH, f"{t}.d", deltas, sum(widths))
    yield
    deltas = sess.recv(EVH, f"{t}.d")
    shares = []
    for idx, i in enumerate(positions):
        ring_i = RingParams(i + h)
        mask_i = np.uint64(ring_i.mask)
        emod = ev & np.uint64((1 << i) - 1)
        e_i = (emod + deltas[idx]) & mask_i
        shares.append(_wrap(sess, e_i, fresh[idx], ring_i, Scheme.ADDITIVE_MOD))
    sub_cfg = replace(cfg, n_s=h)
    bits = yield from par(*[less_zero(sess, s, sub_cfg, rerandomize=False) for s in shares])
    zeros = np.zeros((1, sess.lanes), dtype=np.uint8)
    out = concat_bits(sess, [new_bits(sess, zeros, zeros)] + list(bits))
    return out


def carry_bits(sess: Session, x: SharedSecret, cfg: ComparisonConfig | None = None,
               width: int | None = None):
    """Carries of the blinding addition a + K, as XOR bit sharings.

    c_0 is always zero; bit i is the carry into position i.  The Boolean
    method is exact; the comparison method errs per bit with the comparison's
    probability.
    """
    cfg = cfg or DEFAULT
    if not x.scheme.additive:
        raise RingError("carry bits are defined for additive sharings")
    w = width or x.ring.effective_bits(x.scheme, x.ct.value)
    if cfg.carry_method == "boolean":
        out = yield from _carries_boolean(sess, x, w, include_out=False)
    elif cfg.carry_method == "comparison":
        out = yield from _carries_comparison(sess, x, w, include_out=False, cfg=cfg)
    else:
        raise ConfigError(f"unknown carry method {cfg.carry_method!r}")
    return out


def carry_out(sess: Session, x: SharedSecret, cfg: ComparisonConfig | None = None):
    """The carry discarded by the modulus: [E < K], a single XOR bit."""
    cfg = cfg or DEFAULT
    w = x.ring.l
    if cfg.carry_method == "boolean":
        bits = yield from _carries_boolean(sess, x, w, include_out=True)
    else:
        bits = yield from _carries_comparison(sess, x, w, include_out=True, cfg=cfg)
    return bits.bit(w)
