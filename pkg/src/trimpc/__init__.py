"""trimpc: three-party secure computation over linear secret sharing.

A secret is a blinded value at the encrypted-value holder (EVH) plus the key
at the key holder (KH); a third helper (HE) evaluates the mixed terms no
single party may see.  Protocols run over a simulated network that counts
rounds and bits exactly and checks the access rule (no party ever pairs a
ciphertext with its matching key).

Protocols are generator functions driven by ``Session.run``; payloads are
numpy arrays with one lane per independent trial, so statistical acceptance
runs execute as a single vectorized trace.
"""

from .rings import (
    Ciphertext,
    ConfigError,
    KeyShare,
    RingError,
    RingParams,
    Scheme,
    SharedSecret,
    decrypt,
    encrypt,
    from_signed,
    sample_key,
    to_signed,
)
from .session import EVH, HE, KH, CostMeter, Message, PartyId, PartyView, ProtocolError, Session, par
from .primitives import (
    BitShares,
    and2,
    add_const,
    add_shares,
    fanin_and_base,
    mul,
    mul_const,
    open_bits,
    power,
    reencrypt,
    scaled_pow,
    share_bits,
    sub_shares,
)
from .conversions import (
    add_to_addmod,
    add_to_xor,
    addmod_to_add_fast,
    addmod_to_add_slow,
    xor_to_add,
)
from .logic import (
    ComparisonConfig,
    carry_bits,
    carry_out,
    equal_zero,
    fanin_base,
    fanin_both,
    fanin_hamming,
    hamming,
    less_zero,
    multi_less_zero,
)
from .numeric import (
    FixedPoint,
    TangentConfig,
    TaylorConfig,
    cosine,
    div_by_public,
    division_and_log,
    index_msb,
    mul_by_public,
    open_fixed,
    share_fixed,
    sine,
    suitable_pair_fraction,
    tangent,
)
from .oracle import exhaustive_check, plain_eval
from .bench import BenchParams, BenchRecord, run_bench

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
