"""Conversions between the three encryption schemes.

Additive -> XOR rides on the carry bits of the blinding addition; XOR ->
additive runs one helper-assisted exchange per bit, with bit i living in the
ring 2^(l-i) so the scaled sum lands exactly in the target ring.  Between the
two additive schemes, dropping the modulus is the interesting direction: the
fast path trades three bits of key headroom for a single message, the slow
path recovers the chopped carry with a comparison.
"""

from __future__ import annotations

import numpy as np

from .primitives import BitShares, new_bits, _wrap
from .rings import RingError, RingParams, Scheme, SharedSecret
from .session import EVH, HE, KH, Session

U1 = np.uint64(1)


def bit_planes(values: np.ndarray, w: int) -> np.ndarray:
    """Little-endian bit planes of ring values: shape (w, lanes), uint8."""
    v = np.asarray(values, dtype=np.uint64)
    return ((v[None, :] >> np.arange(w, dtype=np.uint64)[:, None]) & U1).astype(np.uint8)


def bits_as_xor_secret(sess: Session, x: BitShares) -> SharedSecret:
    """Repack bit planes as one XOR-scheme sharing of a w-bit number."""
    weights = (U1 << np.arange(x.w, dtype=np.uint64))[:, None]
    ev = (x.e.astype(np.uint64) * weights).sum(axis=0, dtype=np.uint64)
    kv = (x.k.astype(np.uint64) * weights).sum(axis=0, dtype=np.uint64)
    return _wrap(sess, ev, kv, RingParams(x.w), Scheme.XOR, origin=x.origin)


def xor_secret_as_bits(sess: Session, x: SharedSecret) -> BitShares:
    if x.scheme is not Scheme.XOR:
        raise RingError("expected an XOR sharing")
    return new_bits(sess, bit_planes(x.ct.value, x.ring.l), bit_planes(x.key.value, x.ring.l), origin=x.origin)


def add_to_xor(sess: Session, x: SharedSecret, cfg=None):
    """Additive (either kind) -> per-bit XOR sharing.

    Both sides fold the carry-bit sharings into their own bit planes; the
    only traffic is whatever the carry computation costs.
    """
    from . import logic  # circular at import time: logic builds on conversions

    if not x.scheme.additive:
        raise RingError("input is already XOR-shared")
    w = x.ring.l if x.scheme is Scheme.ADDITIVE_MOD else x.ring.effective_bits(x.scheme, x.ct.value)
    carries = yield from logic.carry_bits(sess, x, cfg, width=w)
    e = bit_planes(x.ct.value, w) ^ carries.e
    k = bit_planes(x.key.value, w) ^ carries.k
    return new_bits(sess, e, k)


def xor_to_add(sess: Session, x: BitShares, total_l: int | None = None):
    """Per-bit XOR sharings -> one additive-mod sharing of sum(2^i a_i).

    Bit i is double-encrypted into the ring 2^(total_l - i); the helper
    applies the key-bit branch (identity or arithmetic negation) and returns
    fresh encryptions, which both sides scale by 2^i and sum mod 2^total_l.
    Two rounds; the helper legitimately sees the XOR key plane.
    """
    l = total_l or x.w
    if l < x.w or l > 62:
        raise RingError(f"target ring width {l} incompatible with {x.w} bits")
    t = sess.tag("x2a")
    w = x.w
    lanes = sess.lanes
    widths = l - np.arange(w, dtype=np.uint64)  # ring of bit i is 2^(l-i)
    masks = ((U1 << widths) - U1)[:, None]

    kpp = np.empty((w, lanes), dtype=np.uint64)   # EVH's blinding keys K''
    kppp = np.empty((w, lanes), dtype=np.uint64)  # helper's fresh keys K'''
    for i in range(w):  # per-bit widths differ, draw rows at their own width
        kpp[i] = sess.preshared(EVH, KH, int(widths[i]))
        kppp[i] = sess.preshared(HE, KH, int(widths[i]))

    d = (x.e.astype(np.uint64) + kpp) & masks
    sess.send(EVH, HE, f"{t}.d", d, int(widths.sum()))
    sess.send(KH, HE, f"{t}.k", x.k, w, view=[(x.secret_id, "key")])
    yield
    d_he = sess.recv(HE, f"{t}.d")
    k_he = sess.recv(HE, f"{t}.k").astype(bool)
    f = np.where(k_he, (kppp - d_he) & masks, (d_he + kppp) & masks)
    sess.send(HE, EVH, f"{t}.f", f, int(widths.sum()))
    yield
    f = sess.recv(EVH, f"{t}.f")
    scale = (U1 << np.arange(w, dtype=np.uint64))[:, None]
    out_mask = np.uint64((1 << l) - 1)
    ef = (f * scale).sum(axis=0, dtype=np.uint64) & out_mask
    kf_bits = np.where(x.k.astype(bool), (kppp - kpp - U1) & masks, (kpp + kppp) & masks)
    kf = (kf_bits * scale).sum(axis=0, dtype=np.uint64) & out_mask
    return _wrap(sess, ef, kf, RingParams(l), Scheme.ADDITIVE_MOD)


def xor_bit_to_pure(sess: Session, x: BitShares, key_w: int):
    """One XOR-shared bit -> a pure-additive sharing with a key_w-bit key.

    Same helper exchange as :func:`xor_to_add` but over the integers; a fixed
    offset keeps the negation branch non-negative on the wire.
    """
    if x.w != 1:
        raise RingError("pure-additive lift is per single bit")
    t = sess.tag("x2p")
    kpp = sess.preshared(EVH, KH, key_w)
    kppp = sess.preshared(HE, KH, key_w)
    kap = np.uint64((1 << key_w) + 1)

    d = x.e[0].astype(np.uint64) + kpp
    sess.send(EVH, HE, f"{t}.d", d, key_w + 1)
    sess.send(KH, HE, f"{t}.k", x.k[0], 1, view=[(x.secret_id, "key")])
    yield
    d_he = sess.recv(HE, f"{t}.d")
    k_he = sess.recv(HE, f"{t}.k").astype(bool)
    f = np.where(k_he, kppp + kap - d_he, d_he + kppp)
    sess.send(HE, EVH, f"{t}.f", f, key_w + 2)
    yield
    f = sess.recv(EVH, f"{t}.f")
    kf = np.where(x.k[0].astype(bool), kppp + np.uint64(1 << key_w) - kpp, kpp + kppp)
    return _wrap(sess, f, kf, RingParams(2, b=max(2, key_w + 1)), Scheme.PURE_ADDITIVE)


def add_to_addmod(sess: Session, x: SharedSecret, target_l: int | None = None) -> SharedSecret:
    """Pure additive -> additive modulo: both halves reduce locally; free."""
    if x.scheme is not Scheme.PURE_ADDITIVE:
        raise RingError("expected a pure-additive sharing")
    l = target_l or x.ring.l
    ring = RingParams(l)
    m = np.uint64(ring.mask)
    return _wrap(sess, x.ct.value & m, x.key.value & m, ring, Scheme.ADDITIVE_MOD, origin=x.origin)


def addmod_to_add_fast(sess: Session, x: SharedSecret):
    """Additive-mod -> pure additive with an l-3 bit key: 1 round, l bits.

    Sound only when the plaintext promises fewer than l-3 bits; with that
    headroom the mod never wraps the re-keyed value and the result is exact.
    """
    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("expected an additive-mod sharing")
    l = x.ring.l
    if l < 4:
        raise RingError("fast conversion needs l >= 4")
    t = sess.tag("fast")
    mask = np.uint64(x.ring.mask)
    kp = sess.rng(KH).integers(0, 1 << (l - 3), size=sess.lanes, dtype=np.uint64)
    sess.send(KH, EVH, f"{t}.d", (x.key.value - kp) & mask, l)
    yield
    d = sess.recv(EVH, f"{t}.d")
    ev = (x.ct.value - d) & mask  # equals a + K' exactly when a < 2^{l-3}
    return _wrap(sess, ev, kp, RingParams(l, b=l), Scheme.PURE_ADDITIVE)


def addmod_to_add_slow(sess: Session, x: SharedSecret, b: int, cfg=None):
    """Additive-mod -> pure additive with a b-bit key and no plaintext bound.

    Recovers the carry chopped by the modulus (le = [E < K]) and prepends its
    pure-additive encryption above bit l.  Inherits the comparison's Monte
    Carlo behavior unless the carry method is the Boolean one.
    """
    from . import logic

    if x.scheme is not Scheme.ADDITIVE_MOD:
        raise RingError("expected an additive-mod sharing")
    l = x.ring.l
    if b < l + 3:
        raise RingError("slow conversion needs key width b >= l + 3")
    le = yield from logic.carry_out(sess, x, cfg)
    lifted = yield from xor_bit_to_pure(sess, le, key_w=b - l - 2)
    shift = np.uint64(l)
    ef = (lifted.ct.value << shift) + x.ct.value
    kf = (lifted.key.value << shift) + x.key.value
    return _wrap(sess, ef, kf, RingParams(l, b=b), Scheme.PURE_ADDITIVE)
