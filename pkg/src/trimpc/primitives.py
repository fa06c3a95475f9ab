"""Building-block protocols: secure multiplication, bit AND, table-based
fan-in gates, powers, scaled powers, and re-randomization.

The cross terms that mix one party's ciphertext with the other's key are
evaluated by the helper on one-time-blinded copies; the blinds come from the
pre-shared pair streams, so a multiplication costs two rounds and 5*l bits
(160 bits for 32-bit operands) and an AND gate costs 5 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rings import ConfigError, RingError, RingParams, Scheme, SharedSecret
from .session import EVH, HE, KH, PartyId, Session, par

MAX_FANIN_BASE = 8

U64 = np.uint64


def _u(x) -> np.uint64:
    return np.uint64(x)


# ---------------------------------------------------------------------------
# bit-share vectors


@dataclass(eq=False)
class BitShares:
    """w single-bit XOR sharings: e-plane at EVH, k-plane at KH.

    Arrays have shape (w, lanes), dtype uint8.
    """

    e: np.ndarray
    k: np.ndarray
    secret_id: int
    origin: PartyId | None = None

    @property
    def w(self) -> int:
        return self.e.shape[0]

    @property
    def lanes(self) -> int:
        return self.e.shape[1]

    def bit(self, i: int) -> "BitShares":
        return BitShares(self.e[i : i + 1], self.k[i : i + 1], self.secret_id, self.origin)

    def slice(self, lo: int, hi: int) -> "BitShares":
        return BitShares(self.e[lo:hi], self.k[lo:hi], self.secret_id, self.origin)


def new_bits(sess: Session, e, k, origin: PartyId | None = None) -> BitShares:
    e = np.asarray(e, dtype=np.uint8)
    k = np.asarray(k, dtype=np.uint8)
    sid = sess.new_id()
    sess.note_generated(EVH, sid, "ct")
    sess.note_generated(KH, sid, "key")
    if origin is not None:
        sess.exempt_origin(origin, sid)
    return BitShares(e, k, sid, origin)


def share_bits(sess: Session, values, w: int) -> BitShares:
    """Fresh XOR bit-sharing of plaintext values (one w-bit number per lane)."""
    v = np.asarray(values, dtype=np.uint64)
    if v.ndim == 0:
        v = np.full(sess.lanes, int(v), dtype=np.uint64)
    k = sess.rng(KH).integers(0, 2, size=(w, sess.lanes), dtype=np.uint64).astype(np.uint8)
    planes = ((v[None, :] >> np.arange(w, dtype=np.uint64)[:, None]) & _u(1)).astype(np.uint8)
    return new_bits(sess, planes ^ k, k)


def open_bits(sess: Session, x: BitShares) -> np.ndarray:
    """Harness decode of a bit vector to integers (little-endian)."""
    bits = (x.e ^ x.k).astype(np.uint64)
    weights = (np.uint64(1) << np.arange(x.w, dtype=np.uint64))[:, None]
    return (bits * weights).sum(axis=0, dtype=np.uint64)


def const_bits(sess: Session, bit: int, w: int) -> BitShares:
    """Public constant bits (key plane zero)."""
    e = np.full((w, sess.lanes), bit, dtype=np.uint8)
    k = np.zeros((w, sess.lanes), dtype=np.uint8)
    return new_bits(sess, e, k)


def xor_bits(sess: Session, x: BitShares, y: BitShares) -> BitShares:
    return new_bits(sess, x.e ^ y.e, x.k ^ y.k)


def not_bits(sess: Session, x: BitShares) -> BitShares:
    return new_bits(sess, x.e ^ 1, x.k)  # negation happens at the EVH only


def concat_bits(sess: Session, parts: list[BitShares]) -> BitShares:
    return new_bits(sess, np.concatenate([p.e for p in parts]), np.concatenate([p.k for p in parts]))


# ---------------------------------------------------------------------------
# local share algebra (no communication)


def _wrap(sess, ev, kv, ring, scheme, origin=None) -> SharedSecret:
    return sess.derived(ev, kv, ring, scheme, origin)


def add_shares(sess: Session, x: SharedSecret, y: SharedSecret) -> SharedSecret:
    if x.ring.l != y.ring.l or x.scheme is not y.scheme:
        raise RingError("share addition needs matching rings and schemes")
    if x.scheme is Scheme.ADDITIVE_MOD:
        m = _u(x.ring.mask)
        return _wrap(sess, (x.ct.value + y.ct.value) & m, (x.key.value + y.key.value) & m, x.ring, x.scheme)
    if x.scheme is Scheme.PURE_ADDITIVE:
        return _wrap(sess, x.ct.value + y.ct.value, x.key.value + y.key.value, x.ring, x.scheme)
    return _wrap(sess, x.ct.value ^ y.ct.value, x.key.value ^ y.key.value, x.ring, x.scheme)


def sub_shares(sess: Session, x: SharedSecret, y: SharedSecret) -> SharedSecret:
    if x.scheme is not Scheme.ADDITIVE_MOD or y.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("share subtraction implemented for additive-mod only")
    m = _u(x.ring.mask)
    return _wrap(sess, (x.ct.value - y.ct.value) & m, (x.key.value - y.key.value) & m, x.ring, x.scheme)


def add_const(sess: Session, x: SharedSecret, c) -> SharedSecret:
    """EVH shifts its ciphertext; the key is untouched."""
    c = np.asarray(c)
    if x.scheme is Scheme.ADDITIVE_MOD:
        ev = (x.ct.value + c.astype(np.uint64)) & _u(x.ring.mask)
    elif x.scheme is Scheme.PURE_ADDITIVE:
        ev = x.ct.value + c.astype(np.uint64)
    else:
        raise RingError("constant addition needs an additive scheme")
    return _wrap(sess, ev, x.key.value, x.ring, x.scheme, origin=x.origin)


def mul_const(sess: Session, x: SharedSecret, c: int) -> SharedSecret:
    """Both parties scale locally; zero rounds, zero bits."""
    if not x.scheme.additive:
        raise RingError("public multiplication needs an additive scheme")
    if x.scheme is Scheme.ADDITIVE_MOD:
        m = _u(x.ring.mask)
        cc = _u(c % x.ring.modulus)
        return _wrap(sess, (x.ct.value * cc) & m, (x.key.value * cc) & m, x.ring, x.scheme, origin=x.origin)
    if c < 0:
        raise RingError("negative constants need the modular scheme")
    return _wrap(sess, x.ct.value * _u(c), x.key.value * _u(c), x.ring, x.scheme, origin=x.origin)


def neg_share(sess: Session, x: SharedSecret) -> SharedSecret:
    return mul_const(sess, x, x.ring.modulus - 1)


def mod_embed(sess: Session, x: SharedSecret, ring: RingParams) -> SharedSecret:
    """Reduce an additive sharing into a (smaller or larger) power-of-two ring.

    Pure-additive values embed into any ring; modular ones only shrink.
    """
    if x.scheme is Scheme.ADDITIVE_MOD and ring.l > x.ring.l:
        raise RingError("cannot widen a modular sharing without a conversion")
    m = _u(ring.mask)
    return _wrap(sess, x.ct.value & m, x.key.value & m, ring, Scheme.ADDITIVE_MOD, origin=x.origin)


def share_own(sess: Session, party: PartyId, values, ring: RingParams,
              scheme: Scheme = Scheme.ADDITIVE_MOD):
    """Wrap a party's local data as a fresh sharing (generator protocol).

    EVH origination is free (key from the EVH/KH pair stream).  KH and HE
    origination ship the fresh ciphertext to the EVH: one round, l_E bits.
    The originator is exempt from the view rule for this secret.
    """
    v = np.asarray(values, dtype=np.uint64)
    if v.ndim == 0:
        v = np.full(sess.lanes, int(v), dtype=np.uint64)
    kb = ring.key_bits(scheme)
    if party is EVH:
        key = sess.preshared(KH, EVH, kb)
        ev = _encrypt_vals(v, key, scheme, ring)
        return _wrap(sess, ev, key, ring, scheme, origin=EVH)
    if party is KH:
        key = sess.rng(KH).integers(0, 1 << kb, size=sess.lanes, dtype=np.uint64)
    else:
        key = sess.preshared(HE, KH, kb)
    ev = _encrypt_vals(v, key, scheme, ring)
    out = _wrap(sess, ev, key, ring, scheme, origin=party)
    t = sess.tag("own")
    sess.send(party, EVH, t, ev, ring.l + (1 if scheme is Scheme.PURE_ADDITIVE else 0),
              view=[(out.secret_id, "ct")])
    yield
    sess.recv(EVH, t)
    return out


def _encrypt_vals(v, key, scheme, ring):
    if scheme is Scheme.PURE_ADDITIVE:
        return v + key
    if scheme is Scheme.ADDITIVE_MOD:
        return (v + key) & _u(ring.mask)
    return v ^ key


# ---------------------------------------------------------------------------
# helper-mediated gadgets


def private_bit_products(sess: Session, tag: str, u: np.ndarray, v: np.ndarray, r: int):
    """Additive-mod-2^r sharings of u_j & v_j for private bit planes.

    ``u`` lives at the EVH, ``v`` at the KH, both shape (w, lanes).  The
    helper evaluates a two-entry masked table per bit: 2 rounds, 3r+1 bits
    per bit.  Returns raw (e, k) uint64 arrays of shape (w, lanes).
    """
    w = u.shape[0]
    mask = _u((1 << r) - 1)
    alpha = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    pads = sess.preshared(KH, EVH, r, shape=(2, w))
    kappa = sess.rng(KH).integers(0, 1 << r, size=(w, sess.lanes), dtype=np.uint64)

    m = u.astype(np.uint8) ^ alpha
    # table entry b answers "what if the masked bit were b"
    vv = v.astype(np.uint64)
    t0 = ((alpha.astype(np.uint64) * vv) + pads[0] + kappa) & mask
    t1 = (((alpha ^ 1).astype(np.uint64) * vv) + pads[1] + kappa) & mask
    sess.send(EVH, HE, f"{tag}.m", m, w)
    sess.send(KH, HE, f"{tag}.t", np.stack([t0, t1]), 2 * r * w)
    yield
    m_he = sess.recv(HE, f"{tag}.m")
    table = sess.recv(HE, f"{tag}.t")
    sel = np.where(m_he.astype(bool), table[1], table[0])
    sess.send(HE, EVH, f"{tag}.s", sel, r * w)
    yield
    sel_evh = sess.recv(EVH, f"{tag}.s")
    pad_used = np.where(m.astype(bool), pads[1], pads[0])
    e_out = (sel_evh - pad_used) & mask
    return e_out, kappa


def and2(sess: Session, x: BitShares, y: BitShares):
    """Bitwise AND of two XOR-shared bit vectors: 2 rounds, 5 bits per gate."""
    if x.w != y.w:
        raise RingError("AND needs equal widths")
    t = sess.tag("and")
    w = x.w
    a = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    b = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    g = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    d = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    rho = sess.preshared(KH, HE, 1, shape=(w,)).astype(np.uint8)

    sess.send(EVH, HE, f"{t}.e", np.stack([x.e ^ a, y.e ^ b]), 2 * w)
    sess.send(KH, HE, f"{t}.k", np.stack([x.k ^ g, y.k ^ d]), 2 * w)
    yield
    me = sess.recv(HE, f"{t}.e")
    mk = sess.recv(HE, f"{t}.k")
    c = (me[0] & mk[1]) ^ (me[1] & mk[0]) ^ rho
    sess.send(HE, EVH, f"{t}.c", c, w)
    yield
    c = sess.recv(EVH, f"{t}.c")
    c1 = c ^ (d & x.e) ^ (g & y.e) ^ (a & d) ^ (b & g)
    e_z = (x.e & y.e) ^ c1
    k_z = (x.k & y.k) ^ (a & y.k) ^ (b & x.k) ^ rho
    return new_bits(sess, e_z, k_z)


def fanin_gates(sess: Session, x: BitShares, base: int):
    """AND over groups of ``base`` adjacent bits via helper-evaluated tables.

    One gate costs 2 rounds and base + 2^base + 1 bits; all gates created by
    the grouping share the same two rounds.  The final partial group may be
    narrower than ``base``.  Returns a BitShares of width ceil(w / base).
    """
    if base < 2 or base > MAX_FANIN_BASE:
        raise ConfigError(f"fan-in base {base} outside [2, {MAX_FANIN_BASE}]")
    groups = [(i, min(i + base, x.w)) for i in range(0, x.w, base)]
    gens = [_fanin_one_width(sess, x.slice(lo, hi)) for lo, hi in groups]
    parts = yield from par(*gens)
    return concat_bits(sess, parts)


def _fanin_one_width(sess: Session, x: BitShares):
    """All-gates-same-width kernel: table of 2^w entries per gate."""
    w = x.w
    if w == 1:
        return new_bits(sess, x.e.copy(), x.k.copy())
    t = sess.tag("fan")
    n = 1 << w
    alpha = sess.preshared(EVH, KH, 1, shape=(w,)).astype(np.uint8)
    pads = sess.preshared(KH, EVH, 1, shape=(n,)).astype(np.uint8)
    kappa = sess.rng(KH).integers(0, 2, size=(1, sess.lanes), dtype=np.uint8)

    m = x.e ^ alpha
    combos = ((np.arange(n, dtype=np.uint64)[:, None] >> np.arange(w, dtype=np.uint64)[None, :]) & _u(1)).astype(np.uint8)
    # entry v: AND_j (v_j ^ alpha_j ^ k_j), padded per entry and keyed
    cand = combos[:, :, None] ^ alpha[None, :, :] ^ x.k[None, :, :]
    table = (cand.min(axis=1) ^ pads.astype(np.uint8) ^ kappa).astype(np.uint8)
    sess.send(EVH, HE, f"{t}.m", m, w)
    sess.send(KH, HE, f"{t}.t", table, n)
    yield
    m_he = sess.recv(HE, f"{t}.m").astype(np.uint64)
    table_he = sess.recv(HE, f"{t}.t")
    idx = np.zeros(sess.lanes, dtype=np.uint64)
    for j in range(w):
        idx |= m_he[j] << _u(j)
    sel = np.take_along_axis(table_he, idx[None, :].astype(np.intp), axis=0)[0]
    sess.send(HE, EVH, f"{t}.r", sel, 1)
    yield
    sel = sess.recv(EVH, f"{t}.r")
    idx_evh = np.zeros(sess.lanes, dtype=np.uint64)
    for j in range(w):
        idx_evh |= m[j].astype(np.uint64) << _u(j)
    pad_used = np.take_along_axis(pads.astype(np.uint8), idx_evh[None, :].astype(np.intp), axis=0)[0]
    e_out = sel ^ pad_used
    return new_bits(sess, e_out[None, :], kappa)


def fanin_and_base(sess: Session, x: BitShares, base: int):
    """Single fan-in gate: AND of exactly ``base`` shared bits, two rounds."""
    if base > MAX_FANIN_BASE:
        raise ConfigError(f"fan-in base {base} exceeds {MAX_FANIN_BASE} (2^base message blowup)")
    if x.w != base:
        raise ConfigError("fanin_and_base expects width == base")
    out = yield from _fanin_one_width(sess, x)
    return out


# ---------------------------------------------------------------------------
# multiplication and powers


def _require_mod(x: SharedSecret):
    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("operation defined on additive-mod sharings")


def mul(sess: Session, x: SharedSecret, y: SharedSecret):
    """Secure product of two additively shared values: 2 rounds, 5l bits.

    Additive-mod inputs multiply in their ring.  Pure-additive inputs are
    lifted into a ring with doubled width first, so the decrypted result is
    the exact integer product (RingError if 2l+2 exceeds the 62-bit cap).
    """
    if x.scheme is Scheme.XOR or y.scheme is Scheme.XOR:
        raise RingError("mul needs additive sharings")
    if x.scheme is Scheme.PURE_ADDITIVE or y.scheme is Scheme.PURE_ADDITIVE:
        wide = 2 * max(x.ring.l, y.ring.l) + 2
        if wide > 62:
            raise RingError(f"pure-additive product needs {wide} bits of headroom")
        ring = RingParams(wide)
        x = mod_embed(sess, x, ring)
        y = mod_embed(sess, y, ring)
    if x.ring.l != y.ring.l:
        raise RingError("mul needs matching rings")
    out = yield from _mul_mod(sess, x, y)
    return out


def _mul_mod(sess: Session, x: SharedSecret, y: SharedSecret):
    ring = x.ring
    l = ring.l
    mask = _u(ring.mask)
    t = sess.tag("mul")
    a = sess.preshared(EVH, KH, l)
    b = sess.preshared(EVH, KH, l)
    g = sess.preshared(EVH, KH, l)
    d = sess.preshared(EVH, KH, l)
    rho = sess.preshared(KH, HE, l)

    ex, ey = x.ct.value, y.ct.value
    kx, ky = x.key.value, y.key.value
    sess.send(EVH, HE, f"{t}.e", np.stack([(ex + a) & mask, (ey + b) & mask]), 2 * l)
    sess.send(KH, HE, f"{t}.k", np.stack([(kx + g) & mask, (ky + d) & mask]), 2 * l)
    yield
    eb = sess.recv(HE, f"{t}.e")
    kb = sess.recv(HE, f"{t}.k")
    with sess.timed(HE):
        c = (eb[0] * kb[1] + eb[1] * kb[0] + rho) & mask
    sess.send(HE, EVH, f"{t}.c", c, l)
    yield
    c = sess.recv(EVH, f"{t}.c")
    with sess.timed(EVH):
        c1 = (c - d * ex - g * ey - a * d - b * g) & mask
        e_z = (ex * ey - c1) & mask
    with sess.timed(KH):
        k_z = (-(kx * ky + a * ky + b * kx + rho)) & mask
    return _wrap(sess, e_z, k_z, ring, Scheme.ADDITIVE_MOD)


def power(sess: Session, x: SharedSecret, i: int):
    """x^i for a public exponent via a parallel multiplication ladder.

    The ladder keeps (x^m, x^{m+1}) and doubles m per level, so the cost is
    at most 2*ceil(log2 i) rounds; i = 1 is the identity (no traffic) and
    i = 0 returns a public one.
    """
    if i < 0:
        raise ConfigError("exponent must be non-negative")
    if i == 0:
        return _wrap(sess, np.ones(sess.lanes, dtype=np.uint64), np.zeros(sess.lanes, dtype=np.uint64),
                     x.ring, x.scheme)
    if i == 1:
        return x
    _require_mod(x)
    if i & (i - 1) == 0:
        acc = x
        while i > 1:
            acc = yield from _mul_mod(sess, acc, acc)
            i >>= 1
        return acc
    bits = bin(i)[2:]
    lo, hi = x, (yield from _mul_mod(sess, x, x))
    for j in range(1, len(bits)):
        need_hi = "1" in bits[j + 1 :]
        if bits[j] == "0":
            gens = [_mul_mod(sess, lo, lo)] + ([_mul_mod(sess, lo, hi)] if need_hi else [])
        else:
            gens = [_mul_mod(sess, lo, hi)] + ([_mul_mod(sess, hi, hi)] if need_hi else [])
        res = yield from par(*gens)
        lo = res[0]
        hi = res[1] if need_hi else None
    return lo


def scaled_pow(sess: Session, x: SharedSecret, i: int, s: int):
    """a^i / s^{i-1} for a public power-of-two scale.

    Every multiplication is followed by an exact re-randomized shift; each
    shift floors once, so for a <= s the result drifts from
    floor(a^i / s^{i-1}) by at most i-1 units (beyond that the unit errors
    amplify by a/s per level).  Intermediates need ring headroom below
    2^{l-3}.
    """
    if s < 2 or s & (s - 1):
        raise ConfigError("scale must be a power of two >= 2")
    if i == 1:
        return x
    _require_mod(x)
    sigma = s.bit_length() - 1
    powers = yield from scaled_powers(sess, x, i, sigma)
    return powers[i]


def scaled_powers(sess: Session, t1: SharedSecret, n: int, sigma: int, signed: bool = False):
    """All scaled powers t^i / s^{i-1} for i in [1, n], s = 2^sigma.

    Iterated squaring with cross products: every level multiplies in
    parallel, then rescales in parallel; ceil(log2 n) levels.
    Returns a dict {i: share}.
    """
    if n < 1:
        raise ConfigError("need at least the first power")
    have = {1: t1}
    top = 1
    while top < n:
        pairs = [(top, top)] if 2 * top <= n else []
        for j in range(1, top):
            if top + j <= n:
                pairs.append((top, j))
        prods = yield from par(*[_mul_mod(sess, have[a], have[b]) for a, b in pairs])
        rescaled = yield from par(*[_shift_down(sess, p, sigma, signed) for p in prods])
        for (a_, b_), r in zip(pairs, rescaled):
            have[a_ + b_] = r
        top *= 2
    return have


def _shift_down(sess: Session, x: SharedSecret, sigma: int, signed: bool = False, rounding: bool = False):
    """Divide an additive-mod sharing by 2^sigma, exactly re-randomized.

    KH re-keys with a fresh key whose low sigma bits are zero, so both sides
    can discard sigma bits without a truncation gap; the only loss is the
    floor of the true value.  One round, l bits.  ``signed`` offsets into the
    positive range first and needs |value| < 2^{l-5}.
    """
    _require_mod(x)
    ring = x.ring
    l = ring.l
    if sigma <= 0:
        return x
    mask = _u(ring.mask)
    t = sess.tag("shr")
    r_w = l - 3 - sigma
    if r_w <= 0:
        raise RingError(f"no headroom to shift {sigma} bits in a {l}-bit ring")
    rnd = sess.rng(KH).integers(0, 1 << r_w, size=sess.lanes, dtype=np.uint64)
    kp = rnd << _u(sigma)
    d = (x.key.value - kp) & mask
    sess.send(KH, EVH, f"{t}.d", d, l)
    yield
    d = sess.recv(EVH, f"{t}.d")
    ev = (x.ct.value - d) & mask  # = value + kp, exact if value < 2^{l-3}
    offset = _u(1 << (l - 4)) if signed else _u(0)
    half = _u(1 << (sigma - 1)) if rounding else _u(0)
    e2 = ((ev + offset + half) & mask) >> _u(sigma)
    if signed:
        e2 = (e2 - _u(1 << (l - 4 - sigma))) & mask
    return _wrap(sess, e2 & mask, rnd, ring, Scheme.ADDITIVE_MOD)


def reencrypt(sess: Session, x: SharedSecret, key_filter=None):
    """Same plaintext under an independent fresh key: 1 round, key-width bits."""
    if not x.scheme.additive:
        raise RingError("re-encryption implemented for additive sharings")
    ring = x.ring
    kb = ring.key_bits(x.scheme)
    fresh = (key_filter or _uniform_keys)(sess.rng(KH), kb, sess.lanes)
    t = sess.tag("rk")
    if x.scheme is Scheme.ADDITIVE_MOD:
        mask = _u(ring.mask)
        d = (fresh - x.key.value) & mask
        sess.send(KH, EVH, f"{t}.d", d, kb)
        yield
        ev = (x.ct.value + sess.recv(EVH, f"{t}.d")) & mask
    else:
        d = fresh + (_u(1 << kb) - x.key.value)  # keep the delta non-negative
        sess.send(KH, EVH, f"{t}.d", d, kb + 1)
        yield
        ev = x.ct.value + sess.recv(EVH, f"{t}.d") - _u(1 << kb)
    return _wrap(sess, ev, fresh, ring, x.scheme)


def _uniform_keys(rng, bits: int, lanes: int) -> np.ndarray:
    return rng.integers(0, 1 << bits, size=lanes, dtype=np.uint64)


def filtered_keys(n_s: int):
    """Key sampler whose top n_s bits are never all-equal.

    Under this filter the comparison protocol is exact for plaintexts that
    leave n_s sign bits free, at the cost of statistical security.
    """

    def sample(rng, bits: int, lanes: int) -> np.ndarray:
        if n_s < 2 or n_s > bits:
            raise ConfigError("filter needs 2 <= n_s <= key width")
        top = _u((1 << n_s) - 1)
        shift = _u(bits - n_s)
        out = rng.integers(0, 1 << bits, size=lanes, dtype=np.uint64)
        while True:
            high = out >> shift
            bad = (high == 0) | (high == top)
            if not bad.any():
                return out
            out[bad] = rng.integers(0, 1 << bits, size=int(bad.sum()), dtype=np.uint64)

    return sample
