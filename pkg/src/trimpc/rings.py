"""Ring parameters, the three linear encryption schemes, and shared-secret handles.

A secret is blinded with a key under one of three schemes (plain addition,
addition modulo a power of two, or XOR).  The holder of the blinded value and
the holder of the key are different parties; decryption only ever happens in
the test harness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MAX_PLAINTEXT_BITS = 62  # everything fits a uint64 lane, products fit after masking


class RingError(ValueError):
    """Width, range, or scheme violation on ring values."""


class ConfigError(ValueError):
    """Invalid protocol parameter combination."""


class Scheme(enum.Enum):
    PURE_ADDITIVE = "pure_additive"   # E = a + K over the integers
    ADDITIVE_MOD = "additive_mod"     # E = (a + K) mod 2^l
    XOR = "xor"                       # E = a ^ K

    @property
    def additive(self) -> bool:
        return self is not Scheme.XOR


@dataclass(frozen=True)
class RingParams:
    """Bit widths of one arithmetic domain.

    l     plaintext width (values live in [0, 2^l))
    b     key width, b >= l; only pure-additive encryption uses keys wider
          than the plaintext
    n_s   sign bits assumed by two's-complement comparisons
    frac  fractional bits for fixed-point interpretation (0 = integers)
    """

    l: int
    b: int = 0
    n_s: int = 1
    frac: int = 0

    def __post_init__(self):
        if self.b == 0:
            object.__setattr__(self, "b", self.l)
        if not 1 <= self.l <= MAX_PLAINTEXT_BITS:
            raise RingError(f"plaintext width l={self.l} outside [1, {MAX_PLAINTEXT_BITS}]")
        if self.b < self.l or self.b > MAX_PLAINTEXT_BITS:
            raise RingError(f"key width b={self.b} must satisfy l <= b <= {MAX_PLAINTEXT_BITS}")
        if self.n_s < 1:
            raise RingError("need at least one sign bit")
        if not 0 <= self.frac < self.l:
            raise RingError("fractional bits must be < l")

    @property
    def mask(self) -> int:
        return (1 << self.l) - 1

    @property
    def modulus(self) -> int:
        return 1 << self.l

    def key_bits(self, scheme: Scheme) -> int:
        return self.b if scheme is Scheme.PURE_ADDITIVE else self.l

    def effective_bits(self, scheme: Scheme, ciphertext) -> int:
        """Width actually occupied by a ciphertext (l_E).

        Pure-additive blinding can overflow the key width by one bit when
        a + K >= 2^b; the other schemes never exceed l.
        """
        if scheme is Scheme.PURE_ADDITIVE:
            top = int(np.max(ciphertext))
            return self.b + 1 if top >= (1 << self.b) else self.b
        return self.l


def _as_lane_array(value, lanes: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.uint64)
    if arr.ndim == 0:
        arr = np.full(lanes, int(arr), dtype=np.uint64)
    if arr.shape != (lanes,):
        raise RingError(f"expected {lanes} lanes, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Ciphertext:
    """Blinded value held by the encrypted-value holder."""

    value: np.ndarray
    scheme: Scheme
    ring: RingParams
    secret_id: int


@dataclass(frozen=True, eq=False)
class KeyShare:
    """Key half held by the key holder."""

    value: np.ndarray
    scheme: Scheme
    ring: RingParams
    secret_id: int


@dataclass(eq=False)
class SharedSecret:
    """Handle pairing one ciphertext (at EVH) with one key (at KH).

    ``origin`` names a party that legitimately knows the plaintext (it built
    the sharing from its own local data); the view checker exempts it.
    """

    ct: Ciphertext
    key: KeyShare
    origin: object = None
    meta: dict = field(default_factory=dict)

    @property
    def secret_id(self) -> int:
        return self.ct.secret_id

    @property
    def scheme(self) -> Scheme:
        return self.ct.scheme

    @property
    def ring(self) -> RingParams:
        return self.ct.ring


def sample_key(ring: RingParams, scheme: Scheme, rng, lanes: int = 1) -> np.ndarray:
    """Uniform key draw: [0, 2^b) for pure-additive, [0, 2^l) otherwise."""
    bits = ring.key_bits(scheme)
    return rng.integers(0, 1 << bits, size=lanes, dtype=np.uint64)


def encrypt(a, key, scheme: Scheme, ring: RingParams) -> np.ndarray:
    """ENC_K(a) under the given scheme; a must be < 2^l."""
    lanes = np.asarray(key).shape[0] if np.ndim(key) else 1
    a = _as_lane_array(a, lanes)
    key = _as_lane_array(key, lanes)
    if np.any(a > np.uint64(ring.mask)):
        raise RingError(f"plaintext out of range for l={ring.l}")
    if scheme is Scheme.PURE_ADDITIVE:
        return a + key  # < 2^{b+1} <= 2^63, no uint64 wrap
    if scheme is Scheme.ADDITIVE_MOD:
        return (a + key) & np.uint64(ring.mask)
    return a ^ key


def decrypt(ct: Ciphertext, key: KeyShare) -> np.ndarray:
    """Test-harness decryption; parties never run this jointly."""
    if ct.secret_id != key.secret_id:
        raise RingError(f"secret id mismatch: ct {ct.secret_id} vs key {key.secret_id}")
    if ct.scheme is not key.scheme:
        raise RingError(f"scheme mismatch: {ct.scheme} vs {key.scheme}")
    if ct.scheme is Scheme.PURE_ADDITIVE:
        return ct.value - key.value
    if ct.scheme is Scheme.ADDITIVE_MOD:
        return (ct.value - key.value) & np.uint64(ct.ring.mask)
    return ct.value ^ key.value


def to_signed(values, l: int) -> np.ndarray:
    """Two's-complement reading of ring values (l <= 62 so int64 is safe)."""
    v = np.asarray(values, dtype=np.uint64).astype(np.int64)
    half = np.int64(1 << (l - 1))
    return np.where(v >= half, v - np.int64(1 << l), v)


def from_signed(values, l: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    return (v % np.int64(1 << l)).astype(np.uint64)


def bit_of(values, i: int) -> np.ndarray:
    return (np.asarray(values, dtype=np.uint64) >> np.uint64(i)) & np.uint64(1)
