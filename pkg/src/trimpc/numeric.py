"""Numerical operations: MSB index, Taylor-series reciprocal and log2,
public-constant multiplication/division, sine, cosine, and tangent.

The reciprocal pipeline scales the secret by a power of two derived from its
MSB so the scaled value always lands in [2^(L-1), 2^L); one series developed
at the fixed centre 1.5 * 2^(L-1) then serves every input.  Series terms are
evaluated with scaled powers, guard bits soak up the per-rescale drift, and
the integer coefficient grid is fine enough that quantization stays inside
the end-to-end tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import conversions, logic
from .primitives import (
    BitShares,
    add_const,
    add_shares,
    mul,
    mul_const,
    new_bits,
    scaled_powers,
    share_own,
    sub_shares,
    _shift_down,
    _wrap,
)
from .rings import ConfigError, RingError, RingParams, Scheme, SharedSecret, to_signed
from .session import EVH, HE, KH, Session, par

I64 = np.int64
U64 = np.uint64

# series working parameters: guard bits on scaled powers, coefficient grid,
# and the ring headroom they need on top of the nominal width
POW_GUARD = 12
COEFF_BITS = 24
LOG_COEFF_BITS = 26
RING_HEADROOM = 26


@dataclass(frozen=True)
class TaylorConfig:
    """Series order and derived tables for the reciprocal/log pipeline."""

    n_t: int = 7

    def error_bound(self) -> float:
        """Closed-form tail bound 1/((n_t+2)! * 2^(n_t+1))."""
        return 1.0 / (math.factorial(self.n_t + 2) * 2 ** (self.n_t + 1))


def truncation_tail_max(n_t: int, points: int = 100_000) -> float:
    """Grid maximum of the dropped series tail, in the bound's own term
    convention (terms x^i / (i+1)! on the centre-normalized offset x).

    The scaled offset satisfies |x| <= 1/3 < 1/2, so this must stay below
    :meth:`TaylorConfig.error_bound`.  Terms are summed smallest-exponent
    first from i = n_t + 1, which is cancellation-free in doubles.
    """
    x = np.linspace(-1.0 / 3.0, 1.0 / 3.0, points)
    term = (-x) ** (n_t + 1) / math.factorial(n_t + 2)
    tail = term.copy()
    for i in range(n_t + 2, n_t + 40):
        term = term * (-x) / (i + 1)
        tail += term
    return float(np.abs(tail).max())


def geometric_truncation_max(n_t: int, points: int = 100_000) -> float:
    """Max relative truncation error of the implemented reciprocal series
    (exact geometric remainder |x|^(n_t+1) on the normalized offset)."""
    x = np.linspace(-1.0 / 3.0, 1.0 / 3.0, points)
    return float((np.abs(x) ** (n_t + 1)).max())


@dataclass(frozen=True)
class TangentConfig:
    """Key-pair handling for the two-encryption tangent.

    min_tan is the magnitude floor on the key-side tangents (the published
    suitability figure of 0.999 holds at c_2, not k*c_2); 1/k bounds the
    value-side tangents away from zero, t_cap keeps everything inside the
    fixed-point working range.
    """

    n_p: int = 3
    c2: float = 1e-4
    c3: float = 1e19
    t_cap: float = 16.0
    key_frac: int = 40
    dummies: tuple = (1.0, 2.0, 3.0, 7.0)

    @property
    def k(self) -> float:
        return 1.0 / math.sqrt(self.c2)

    @property
    def min_tan(self) -> float:
        return self.c2

    def keys_suitable(self, tk: np.ndarray, tkp: np.ndarray, working: bool = True) -> np.ndarray:
        """KH-side conditions on a key pair's tangents."""
        ok = (
            (np.abs(tk) >= self.min_tan)
            & (np.abs(tkp) >= self.min_tan)
            & (np.abs(tk - tkp) >= self.min_tan)
            & (np.abs(tk) < self.c3)
            & (np.abs(tkp) < self.c3)
        )
        if working:
            ok &= (np.abs(tk) <= self.t_cap) & (np.abs(tkp) <= self.t_cap)
        return ok

    def values_suitable(self, te: np.ndarray, tep: np.ndarray) -> np.ndarray:
        """EVH-side conditions on the blinded-argument tangents."""
        return (
            (np.abs(te) > 1.0 / self.k)
            & (np.abs(tep) > 1.0 / self.k)
            & (np.abs(te) < self.c3)
            & (np.abs(tep) < self.c3)
            & (np.abs(te) <= self.t_cap)
            & (np.abs(tep) <= self.t_cap)
        )


def suitable_pair_fraction(cfg: TangentConfig, n: int, seed: int = 0) -> float:
    """Measured probability that a uniform key pair satisfies the key-side
    conditions (engineering cap excluded; this is the published figure)."""
    rng = np.random.default_rng(seed)
    k1 = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
    k2 = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
    return float(cfg.keys_suitable(np.tan(k1), np.tan(k2), working=False).mean())


@dataclass(eq=False)
class FixedPoint:
    """A shared secret whose raw value carries ``frac`` fractional bits."""

    share: SharedSecret
    frac: int

    @property
    def scale(self) -> int:
        return 1 << self.frac


def open_fixed(sess: Session, x: FixedPoint) -> np.ndarray:
    raw = sess.open(x.share)
    if x.share.scheme is Scheme.PURE_ADDITIVE:
        signed = raw.astype(I64)
    else:
        signed = to_signed(raw, x.share.ring.l)
    return signed.astype(np.float64) / float(x.scale)


def share_fixed(sess: Session, values, frac: int, key_bits: int = 50) -> FixedPoint:
    """Pure-additive sharing of real values on a 2^-frac grid.

    Keys take the top bit so the blinded value stays non-negative for any
    representable input.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 0:
        v = np.full(sess.lanes, float(v), dtype=np.float64)
    raw = np.round(v * (1 << frac)).astype(I64)
    width = int(np.abs(raw).max()).bit_length() + 2 if raw.size else frac + 2
    if width + 1 > key_bits:
        raise RingError("key width too small for the value range")
    key = sess.rng(KH).integers(1 << (key_bits - 1), 1 << key_bits, size=sess.lanes, dtype=U64)
    ev = (key.astype(I64) + raw).astype(U64)
    share = sess.derived(ev, key, RingParams(max(width, 2), b=key_bits), Scheme.PURE_ADDITIVE)
    return FixedPoint(share, frac)


# ---------------------------------------------------------------------------
# public-constant arithmetic


def mul_by_public(sess: Session, x: SharedSecret, c: int) -> SharedSecret:
    """a * c with zero communication: both halves scale locally."""
    return mul_const(sess, x, c)


def div_by_public(sess: Session, x: SharedSecret, c: int, k: int, extra_frac: int = 0):
    """floor(a / c) for a public divisor, one round, no comparisons.

    Requires a pure-additive sharing and 2^(k-1) >= c; the fresh key is a
    multiple of 2^k so both sides discard k bits exactly.  ``extra_frac``
    keeps that many additional quotient bits (fixed-point mode).
    """
    if c <= 0:
        raise ConfigError("divisor must be a positive integer")
    if 1 << (k - 1) < c:
        raise ConfigError(f"scaling exponent k={k} violates 2^(k-1) >= c={c}")
    if x.scheme is not Scheme.PURE_ADDITIVE:
        raise RingError("public division expects a pure-additive sharing")
    ring = x.ring
    p = extra_frac
    if ring.b + k + p + 2 > 63:
        raise RingError("key width plus scaling exceeds the 64-bit lane")
    out_kb = ring.b - k
    if out_kb < ring.l:
        raise RingError("key width leaves no room to discard k bits")
    t = sess.tag("divc")
    cc = U64(c)
    sh = U64(k + p)
    u = (x.ct.value << sh) // cc
    v = (x.key.value << sh) // cc
    fresh = sess.rng(KH).integers(0, 1 << out_kb, size=sess.lanes, dtype=U64)
    w = (fresh << U64(k)) - v  # wraps mod 2^64; the sum below wraps back
    sess.send(KH, EVH, f"{t}.w", w, ring.b + k + 2)
    yield
    w = sess.recv(EVH, f"{t}.w")
    e2 = (u + w) >> U64(k)
    return _wrap(sess, e2, fresh, RingParams(ring.l + p, b=max(out_kb, ring.l + p)), Scheme.PURE_ADDITIVE)


# ---------------------------------------------------------------------------
# index of the most significant bit


def index_msb(sess: Session, x: SharedSecret, cfg: logic.ComparisonConfig = logic.DEFAULT):
    """floor(log2 a) plus its one-hot power, for 0 < a < 2^(l-3).

    l-2 comparisons [a - 2^i < 0] run in parallel under fresh keys; their
    bits convert to a small additive ring and sum to the index.  Success
    probability is the comparison's raised to the number of positions.
    """
    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("MSB index expects an additive-mod sharing")
    l = x.ring.l
    if l < 5:
        raise RingError("need l >= 5 for sign headroom")
    mask = U64(x.ring.mask)
    positions = l - 2
    t = sess.tag("msb")

    sampler = logic.filtered_keys(3) if cfg.filtered_keys else None
    fresh = np.empty((positions, sess.lanes), dtype=U64)
    for i in range(positions):
        fresh[i] = (sampler or (lambda rng, b, n: rng.integers(0, 1 << b, size=n, dtype=U64)))(
            sess.rng(KH), l, sess.lanes)
    deltas = (fresh - x.key.value[None, :]) & mask
    sess.send(KH, EVH, f"{t}.d", deltas, positions * l)
    yield
    deltas = sess.recv(EVH, f"{t}.d")
    shifted = (x.ct.value[None, :] - (U64(1) << np.arange(positions, dtype=U64))[:, None] + deltas) & mask
    shares = [_wrap(sess, shifted[i], fresh[i], x.ring, Scheme.ADDITIVE_MOD) for i in range(positions)]
    sub = logic.ComparisonConfig(n_s=3, base=cfg.base,
                                 carry_method=cfg.carry_method, filtered_keys=cfg.filtered_keys)
    les = yield from par(*[logic.less_zero(sess, s, sub, rerandomize=False) for s in shares])

    r_m = math.ceil(math.log2(l + 1)) + 4
    lifted = yield from par(*[conversions.xor_to_add(sess, b, total_l=r_m) for b in les])
    mm = U64((1 << r_m) - 1)
    se = sum(s.ct.value for s in lifted) & mm
    sk = sum(s.key.value for s in lifted) & mm
    msb = _wrap(sess, (U64(l - 3) - se) & mm, (-sk) & mm, RingParams(r_m), Scheme.ADDITIVE_MOD)

    le_e = np.concatenate([b.e for b in les])
    le_k = np.concatenate([b.k for b in les])
    pos_e = le_e.copy()
    pos_e[:-1] ^= le_e[1:]
    pos_e[-1] ^= 1  # [a < 2^(l-2)] always holds on the declared domain
    pos_k = le_k.copy()
    pos_k[:-1] ^= le_k[1:]
    pow2 = new_bits(sess, pos_e, pos_k)
    return msb, pow2


# ---------------------------------------------------------------------------
# reciprocal and base-2 logarithm by a fixed-centre series


def _series_coefficients(L: int, n_t: int) -> tuple[int, list[int], int, list[int]]:
    """Integer coefficient tables for the reciprocal and log2 series.

    Reciprocal terms target scale 2^(2L-1+COEFF_BITS); log2 terms target
    2^(L+LOG_COEFF_BITS).  Scaled powers arrive as t^i * 2^(G - L(i-1)).
    """
    a_t = 3 << (L - 2)
    inv_c0 = round(Fraction(1 << (2 * L - 1 + COEFF_BITS), a_t))
    inv = []
    for i in range(1, n_t + 1):
        num = Fraction(1 << (2 * L - 1 + COEFF_BITS + L * (i - 1) - POW_GUARD), a_t ** (i + 1))
        inv.append(int(round(num)) * (-1) ** i)
    log_c0 = round(math.log2(a_t) * (1 << (L + LOG_COEFF_BITS)))
    lg = []
    for i in range(1, n_t + 1):
        mag = 2.0 ** (L + LOG_COEFF_BITS + L * (i - 1) - POW_GUARD) / (i * math.log(2) * float(a_t) ** i)
        lg.append(round(mag) * (-1) ** (i + 1))
    return inv_c0, inv, log_c0, lg


def division_and_log(sess: Session, x: SharedSecret, cfg: TaylorConfig = TaylorConfig(),
                     cmp_cfg: logic.ComparisonConfig = logic.DEFAULT):
    """(1/a, log2 a) for 1 <= a < 2^(l/2), both as fixed-point sharings.

    Returns (inv, log) with inv.frac = l-1 and log.frac = l/2.  The input
    ring must be even-width with l <= 36 (the working ring needs headroom).
    Inherits the MSB stage's Monte Carlo behavior unless the comparison
    config is deterministic.
    """
    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("expected an additive-mod sharing")
    l = x.ring.l
    if l % 2 or l < 8 or l + RING_HEADROOM > 62:
        raise RingError("series pipeline supports even 8 <= l <= 36")
    L = l // 2
    G, Q, QL = POW_GUARD, COEFF_BITS, LOG_COEFF_BITS
    W = l + RING_HEADROOM
    ring_w = RingParams(W)
    a_t = 3 << (L - 2)

    msb, pow2 = yield from index_msb(sess, x, cmp_cfg)

    rev = new_bits(sess, pow2.e[L - 1 :: -1], pow2.k[L - 1 :: -1])  # 2^(L-1-msb)
    rev_w, x_pure = yield from par(
        conversions.xor_to_add(sess, rev, total_l=W),
        conversions.addmod_to_add_fast(sess, x),
    )
    x_w = conversions.add_to_addmod(sess, x_pure, target_l=W)
    aprime = yield from mul(sess, x_w, rev_w)  # in [2^(L-1), 2^L)

    t1 = mul_const(sess, add_const(sess, aprime, (1 << W) - a_t), 1 << G)
    powers = yield from scaled_powers(sess, t1, cfg.n_t, sigma=L + G, signed=True)

    inv_c0, inv_cs, log_c0, log_cs = _series_coefficients(L, cfg.n_t)
    inv_sum = add_const(sess, mul_const(sess, powers[1], inv_cs[0]), inv_c0)
    log_sum = add_const(sess, mul_const(sess, powers[1], log_cs[0]), log_c0)
    for i in range(2, cfg.n_t + 1):
        inv_sum = add_shares(sess, inv_sum, mul_const(sess, powers[i], inv_cs[i - 1]))
        log_sum = add_shares(sess, log_sum, mul_const(sess, powers[i], log_cs[i - 1]))

    inv_p, log_p = yield from par(
        _shift_down(sess, inv_sum, Q, signed=False, rounding=True),
        _shift_down(sess, log_sum, QL, signed=False, rounding=True),
    )
    inv_a = yield from mul(sess, inv_p, rev_w)  # 2^(2L-1) / a

    # log2 a = log2 a' - (L-1) + msb
    msb_pure = yield from conversions.addmod_to_add_fast(sess, msb)
    msb_w = conversions.add_to_addmod(sess, msb_pure, target_l=W)
    log_a = add_shares(sess, add_const(sess, log_p, ((1 << W) - ((L - 1) << L))),
                       mul_const(sess, msb_w, 1 << L))
    return FixedPoint(inv_a, 2 * L - 1), FixedPoint(log_a, L)


# ---------------------------------------------------------------------------
# trigonometry


def _sum_to_product_trig(sess: Session, x: FixedPoint, kind: str, key_bits: int, guard: int):
    """Shared core of sine and cosine.

    The EVH evaluates its factor on the blinded value, the helper evaluates
    the other on value-minus-key (re-randomized in transit), one secure
    multiplication joins them, and the KH's key-side term cancels in its
    output key.  Exactly five rounds.
    """
    share = x.share
    if share.scheme is not Scheme.PURE_ADDITIVE:
        raise RingError("trig protocols expect pure-additive fixed-point inputs")
    c = x.frac
    g = guard
    s = float(1 << c)
    wm = 2 * (c + g) + 4
    ring_m = RingParams(wm)
    mask_m = U64(ring_m.mask)
    kb = key_bits
    t = sess.tag(kind)

    ev = share.ct.value.astype(np.float64)  # a + K, exact in doubles below 2^52
    kv = share.key.value.astype(np.float64)
    evh_fn = np.sin if kind == "sin" else np.cos
    kh_fn = evh_fn

    kp = sess.preshared(KH, HE, kb)  # K', straight from the pair stream
    kpp = kp.astype(I64) - 2 * share.key.value.astype(I64)  # K'' = K' - 2K
    sess.send(KH, EVH, f"{t}.k2", kpp, kb + 2)
    yield
    kpp = sess.recv(EVH, f"{t}.k2")
    a_mk = share.ct.value.astype(I64) + kpp  # a - K + K'
    sess.send(EVH, HE, f"{t}.a", a_mk, kb + 2, view=[(share.secret_id, "ct")])
    yield
    a_mk = sess.recv(HE, f"{t}.a")
    with sess.timed(HE):
        diff = (a_mk - kp.astype(I64)).astype(np.float64)  # a - K
        t1 = np.round((1 << (c + g)) * np.cos(diff / (2 * s))).astype(I64)
    kh_he = sess.preshared(HE, KH, wm)
    e_t1 = (t1 + kh_he.astype(I64)) % (1 << wm)
    sess.send(HE, EVH, f"{t}.t1", e_t1.astype(U64), wm)
    yield
    e_t1 = sess.recv(EVH, f"{t}.t1")
    t1_sh = sess.derived(e_t1, kh_he, ring_m, Scheme.ADDITIVE_MOD, origin=HE)
    with sess.timed(EVH):
        t0 = np.round(2 * (1 << (c + g)) * evh_fn(ev / (2 * s))).astype(I64)
    k3 = sess.preshared(EVH, KH, wm)
    t0_sh = sess.derived((t0 + k3.astype(I64)).astype(U64) & mask_m, k3, ring_m,
                         Scheme.ADDITIVE_MOD, origin=EVH)
    prod = yield from mul(sess, t0_sh, t1_sh)

    # local truncation into the output ring; the key side absorbs f(K)
    sigma = c + 2 * g
    w_out = wm - sigma
    out_mask = U64((1 << w_out) - 1)
    off = U64(1 << (wm - 2))
    half = U64(1 << (sigma - 1))
    with sess.timed(EVH):
        e_f = (((prod.ct.value + off + half) & mask_m) >> U64(sigma)) - U64(1 << (wm - 2 - sigma))
    with sess.timed(KH):
        sk = np.round(s * kh_fn(kv / s)).astype(I64)
        k_f = (prod.key.value >> U64(sigma)).astype(I64) + sk
    out = _wrap(sess, e_f & out_mask, (k_f % (1 << w_out)).astype(U64), RingParams(w_out),
                Scheme.ADDITIVE_MOD)
    return FixedPoint(out, c)


def sine(sess: Session, x: FixedPoint, key_bits: int = 50, guard: int = 4):
    """Fixed-point sin(a) via sin a + sin K = 2 sin((a+K)/2) cos((a-K)/2)."""
    out = yield from _sum_to_product_trig(sess, x, "sin", key_bits, guard)
    return out


def cosine(sess: Session, x: FixedPoint, key_bits: int = 50, guard: int = 4):
    """Fixed-point cos(a) via cos a + cos K = 2 cos((a+K)/2) cos((a-K)/2)."""
    out = yield from _sum_to_product_trig(sess, x, "cos", key_bits, guard)
    return out


# tangent working layout: see module docstring of the function
_TAN_RING = 58       # working ring for all tangent-side arithmetic
_TAN_FACTOR = 14     # fixed-point bits of the tan factors and of N
_TAN_DEN = 9         # fixed-point bits of the assembled denominator
_TAN_DIV_RING = 36   # ring fed into the secure reciprocal (headroom-capped)


def tangent(sess: Session, x: FixedPoint, cfg: TangentConfig = TangentConfig(),
            cmp_cfg: logic.ComparisonConfig = logic.DEFAULT, unsafe_reveal: bool = False):
    """tan(a) from two independent encryptions per key pair.

    For every pair the numerator and denominator of the two-encryption
    identity are assembled from party-local tangent evaluations (dummy values
    substituted where a side's suitability conditions fail), the denominator
    is inverted securely through the series pipeline, and the weighted
    average over valid pairs is returned.  If every pair is unsuitable the
    result decrypts to an unspecified value; with uniform keys that happens
    with probability well below 1e-5 per instance at n_p = 3.

    ``unsafe_reveal`` routes the reciprocal through the helper in the clear,
    which is cheaper and flagged by the view checker.
    """
    share = x.share
    if share.scheme is not Scheme.PURE_ADDITIVE:
        raise RingError("tangent expects a pure-additive fixed-point input")
    if share.ring.b > 16:
        raise RingError("tangent input keys must stay below 17 bits (transport lift)")
    c = x.frac
    ck = cfg.key_frac
    sk_scale = float(1 << ck)
    ring_w = RingParams(_TAN_RING)
    t = sess.tag("tan")

    lift = U64(1 << (ck - c))
    e40 = share.ct.value * lift
    k40 = share.key.value * lift

    half_pi = math.pi / 2
    kh_rng = sess.rng(KH)
    keys = np.round(kh_rng.uniform(-half_pi, half_pi, size=(cfg.n_p, 2, sess.lanes)) * sk_scale).astype(I64)
    deltas = keys - k40.astype(I64)[None, None, :]
    sess.send(KH, EVH, f"{t}.d", deltas, cfg.n_p * 2 * (ck + 12))
    yield
    deltas = sess.recv(EVH, f"{t}.d")
    args = (e40.astype(I64)[None, None, :] + deltas).astype(np.float64) / sk_scale  # a + K^i, a + K'^i

    with sess.timed(KH):
        tk = np.tan(keys.astype(np.float64) / sk_scale)
        s_k = cfg.keys_suitable(tk[:, 0], tk[:, 1])
        tk_use = tk.copy()
        tk_use[:, 0][~s_k] = cfg.dummies[0]
        tk_use[:, 1][~s_k] = cfg.dummies[1]
    with sess.timed(EVH):
        te = np.tan(args)
        s_e = cfg.values_suitable(te[:, 0], te[:, 1])
        te_use = te.copy()
        te_use[:, 0][~s_e] = cfg.dummies[2]
        te_use[:, 1][~s_e] = cfg.dummies[3]

    f_scale = 1 << _TAN_FACTOR
    pair_outputs = yield from par(*[
        _tangent_pair(
            sess, ring_w,
            np.round(te_use[i] * f_scale).astype(I64),
            np.round(tk_use[i] * f_scale).astype(I64),
            s_e[i], s_k[i], cmp_cfg, unsafe_reveal)
        for i in range(cfg.n_p)
    ])

    total = pair_outputs[0][0]
    count = pair_outputs[0][1]
    for tw, w in pair_outputs[1:]:
        total = add_shares(sess, total, tw)
        count = add_shares(sess, count, w)

    # 1 / (number of valid pairs), then scale the sum back to frac bits
    count16 = conversions.add_to_addmod(sess, (yield from conversions.addmod_to_add_fast(sess, count)), target_l=16)
    inv_c, _ = yield from division_and_log(sess, count16, TaylorConfig(), cmp_cfg)
    invc_pure = yield from conversions.addmod_to_add_fast(sess, inv_c.share)
    invc_w = conversions.add_to_addmod(sess, invc_pure, target_l=_TAN_RING)
    prod = yield from mul(sess, total, invc_w)
    out = yield from _shift_down(sess, prod, _TAN_FACTOR + inv_c.frac - c, signed=True)
    return FixedPoint(out, c)


def _tangent_pair(sess: Session, ring_w: RingParams, te_fp, tk_fp, s_e, s_k,
                  cmp_cfg, unsafe_reveal: bool):
    """One key pair: weighted tan estimate t*w and weight w, additively shared."""
    mask = U64(ring_w.mask)
    # numerator (tk - tk') + (te' - te) splits across the two parties' keys
    n_e = (te_fp[1] - te_fp[0]) % (1 << _TAN_RING)
    n_k = (-(tk_fp[0] - tk_fp[1])) % (1 << _TAN_RING)
    num = sess.derived(n_e.astype(U64), n_k.astype(U64), ring_w, Scheme.ADDITIVE_MOD)

    te0 = yield from share_own(sess, EVH, te_fp[0] % (1 << _TAN_RING), ring_w)
    te1 = yield from share_own(sess, EVH, te_fp[1] % (1 << _TAN_RING), ring_w)
    se_sh = yield from share_own(sess, EVH, s_e.astype(U64), ring_w)
    tk0, tk1, sk_sh = yield from par(
        share_own(sess, KH, tk_fp[0] % (1 << _TAN_RING), ring_w),
        share_own(sess, KH, tk_fp[1] % (1 << _TAN_RING), ring_w),
        share_own(sess, KH, s_k.astype(U64), ring_w),
    )

    p1, p0, weight = yield from par(
        mul(sess, te1, tk1), mul(sess, te0, tk0), mul(sess, se_sh, sk_sh))
    den_wide = sub_shares(sess, p1, p0)
    den = yield from _shift_down(sess, den_wide, 2 * _TAN_FACTOR - _TAN_DEN, signed=True)

    if unsafe_reveal:
        inv = yield from _reveal_reciprocal(sess, den)
        signed_num = num
    else:
        sign_bit = yield from logic.less_zero(sess, den, cmp_cfg)
        sign_add = yield from conversions.xor_to_add(sess, sign_bit, total_l=_TAN_RING)
        sgn = add_const(sess, mul_const(sess, sign_add, (1 << _TAN_RING) - 2), 1)  # 1 - 2b
        abs_den, signed_num = yield from par(mul(sess, den, sgn), mul(sess, num, sgn))
        den32 = conversions.add_to_addmod(
            sess, (yield from conversions.addmod_to_add_fast(sess, abs_den)), target_l=_TAN_DIV_RING)
        inv_fp, _ = yield from division_and_log(sess, den32, TaylorConfig(), cmp_cfg)
        inv_pure = yield from conversions.addmod_to_add_fast(sess, inv_fp.share)
        inv = conversions.add_to_addmod(sess, inv_pure, target_l=_TAN_RING)

    t_wide = yield from mul(sess, signed_num, inv)
    t_val = yield from _shift_down(sess, t_wide, _TAN_DIV_RING - 1 - _TAN_DEN, signed=True)
    tw = yield from mul(sess, t_val, weight)
    return tw, weight


def _reveal_reciprocal(sess: Session, den: SharedSecret):
    """Helper-computed 1/denominator: leaks the denominator to the helper."""
    t = sess.tag("rev")
    sess.send(EVH, HE, f"{t}.e", den.ct.value, den.ring.l, view=[(den.secret_id, "ct")])
    sess.send(KH, HE, f"{t}.k", den.key.value, den.ring.l, view=[(den.secret_id, "key")])
    yield
    ev = sess.recv(HE, f"{t}.e")
    kv = sess.recv(HE, f"{t}.k")
    with sess.timed(HE):
        d = to_signed((ev - kv) & U64(den.ring.mask), den.ring.l).astype(np.float64) / (1 << _TAN_DEN)
        with np.errstate(divide="ignore"):
            inv = np.where(d != 0, 1.0 / d, 0.0)
        raw = np.round(inv * (1 << (_TAN_DIV_RING - 1 - _TAN_DEN))).astype(I64) % (1 << _TAN_RING)
    out = yield from share_own(sess, HE, raw.astype(U64), RingParams(_TAN_RING))
    return out
