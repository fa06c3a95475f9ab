"""Simulated three-party network: round barriers, per-message bit metering,
and the access-rule view log.

Protocols are written as generators.  A ``yield`` marks the end of a round:
everything sent before it becomes readable after, and the scheduler counts one
round per barrier.  Independent protocol instances composed with :func:`par`
share barriers, so parallel phases cost one round, not one per instance.

All payloads are numpy arrays with one lane per simulated trial; a single
message trace therefore carries an arbitrary number of statistically
independent protocol executions.
"""

from __future__ import annotations

import enum
import time
import zlib
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .rings import (
    Ciphertext,
    KeyShare,
    RingParams,
    Scheme,
    SharedSecret,
    encrypt,
    decrypt,
    sample_key,
)


class ProtocolError(RuntimeError):
    """Transport misuse: reading unsent or undelivered messages, etc."""


class PartyId(enum.Enum):
    KH = "KH"    # key holder
    EVH = "EVH"  # encrypted value holder
    HE = "HE"    # helper

    def __repr__(self):
        return self.value


KH, EVH, HE = PartyId.KH, PartyId.EVH, PartyId.HE


@dataclass
class Message:
    sender: PartyId
    receiver: PartyId
    round: int
    tag: str
    payload: object
    payload_bits: int


@dataclass
class CostMeter:
    """Rounds and bit totals by ordered (sender, receiver) pair, per run."""

    rounds: int = 0
    bits: dict = field(default_factory=lambda: defaultdict(int))
    by_label: dict = field(default_factory=lambda: defaultdict(int))

    @property
    def bits_total(self) -> int:
        return sum(self.bits.values())

    def snapshot(self) -> dict:
        return {
            "rounds": self.rounds,
            "bits_total": self.bits_total,
            "bits_by_pair": {f"{a.value}->{b.value}": v for (a, b), v in sorted(self.bits.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value))},
        }


@dataclass
class Violation:
    party: PartyId
    secret_id: int


class PartyView:
    """What one party has seen: (secret_id, kind) for kind in {ct, key}.

    The rule: a view must never pair a ciphertext with the matching key,
    unless the secret originated at that party (it knew the plaintext anyway).
    """

    def __init__(self, party: PartyId):
        self.party = party
        self.items: set[tuple[int, str]] = set()

    def note(self, secret_id: int, kind: str):
        self.items.add((secret_id, kind))

    def violations(self, exempt: set[tuple[PartyId, int]]) -> list[Violation]:
        out = []
        for sid, kind in self.items:
            if kind == "ct" and (sid, "key") in self.items:
                if (self.party, sid) not in exempt:
                    out.append(Violation(self.party, sid))
        return out


class Session:
    """One protocol run: scheduler, meter, views, and randomness streams.

    ``lanes`` is the number of independent trials carried by every payload.
    ``meter_preshared`` additionally charges pair-stream randomness to the
    meter (off by default, matching the pre-shared-key evaluation setup).
    """

    def __init__(self, seed: int = 0, lanes: int = 1, meter_preshared: bool = False):
        self.seed = seed
        self.lanes = lanes
        self.meter_preshared = meter_preshared
        self.meter = CostMeter()
        self.views = {p: PartyView(p) for p in PartyId}
        self._exempt: set[tuple[PartyId, int]] = set()
        self._pending: list[Message] = []
        self._inbox: dict[tuple[PartyId, str], Message] = {}
        self._next_id = 0
        self._next_tag = 0
        self._rngs: dict[str, np.random.Generator] = {}
        self._party_us = {p: 0.0 for p in PartyId}
        self._label = None

    # -- randomness ---------------------------------------------------

    def _stream(self, name: str) -> np.random.Generator:
        rng = self._rngs.get(name)
        if rng is None:
            digest = zlib.crc32(name.encode())  # stable across processes, unlike hash()
            child = np.random.SeedSequence(entropy=self.seed, spawn_key=(digest,))
            rng = np.random.Generator(np.random.Philox(child))
            self._rngs[name] = rng
        return rng

    def rng(self, party: PartyId) -> np.random.Generator:
        """Party-local randomness."""
        return self._stream(f"party:{party.value}")

    def preshared(self, frm: PartyId, to: PartyId, width: int, shape: tuple = ()) -> np.ndarray:
        """Common randomness of a party pair, modeled as one shared stream.

        Returns uniform values < 2^width with shape (*shape, lanes).  Free by
        default; with ``meter_preshared`` it costs width * prod(shape) bits
        from ``frm`` to ``to`` (the instance-level cost, once per lane set).
        """
        pair = "-".join(sorted([frm.value, to.value]))
        full = (*shape, self.lanes)
        vals = self._stream(f"pair:{pair}").integers(0, 1 << width, size=full, dtype=np.uint64)
        if self.meter_preshared:
            count = 1
            for dim in shape:
                count *= dim
            self._meter_bits(frm, to, width * count)
        return vals

    # -- identities ---------------------------------------------------

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def tag(self, stem: str) -> str:
        self._next_tag += 1
        return f"{stem}.{self._next_tag}"

    # -- transport ----------------------------------------------------

    def _meter_bits(self, frm: PartyId, to: PartyId, nbits: int):
        self.meter.bits[(frm, to)] += nbits
        if self._label:
            self.meter.by_label[self._label] += nbits

    @contextmanager
    def cost_label(self, label: str):
        """Attribute bits sent inside the block to a named line item."""
        prev, self._label = self._label, label
        try:
            yield
        finally:
            self._label = prev

    def send(self, frm: PartyId, to: PartyId, tag: str, payload, bits: int, view=()):
        """Queue a message for the next round and meter its declared width.

        ``view`` lists (secret_id, kind) items the payload hands the receiver.
        """
        if frm is to:
            raise ProtocolError("a party cannot message itself")
        self._pending.append(Message(frm, to, self.meter.rounds + 1, tag, payload, bits))
        self._meter_bits(frm, to, bits)
        for sid, kind in view:
            self.views[to].note(sid, kind)

    def round_barrier(self) -> int:
        """Deliver everything queued; one unit of protocol latency."""
        self.meter.rounds += 1
        for msg in self._pending:
            key = (msg.receiver, msg.tag)
            if key in self._inbox:
                raise ProtocolError(f"duplicate undrained message tag {msg.tag!r} at {msg.receiver}")
            self._inbox[key] = msg
        self._pending.clear()
        return self.meter.rounds

    def recv(self, to: PartyId, tag: str):
        msg = self._inbox.pop((to, tag), None)
        if msg is None:
            raise ProtocolError(f"no delivered message {tag!r} for {to} (sent this round but no barrier yet?)")
        return msg.payload

    # -- per-party local compute timing --------------------------------

    @contextmanager
    def timed(self, party: PartyId):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self._party_us[party] += (time.perf_counter() - t0) * 1e6

    def slowest_party_us(self) -> float:
        return max(self._party_us.values())

    # -- secrets --------------------------------------------------------

    def note_generated(self, party: PartyId, secret_id: int, kind: str):
        self.views[party].note(secret_id, kind)

    def exempt_origin(self, party: PartyId, secret_id: int):
        self._exempt.add((party, secret_id))

    def new_secret(self, values, ring: RingParams, scheme: Scheme, key=None) -> SharedSecret:
        """Fresh input sharing: ciphertext materializes at EVH, key at KH."""
        if key is None:
            key = sample_key(ring, scheme, self.rng(KH), self.lanes)
        else:
            key = np.asarray(key, dtype=np.uint64)
            if key.ndim == 0:
                key = np.full(self.lanes, int(key), dtype=np.uint64)
        ct = encrypt(values, key, scheme, ring)
        sid = self.new_id()
        self.note_generated(KH, sid, "key")
        self.note_generated(EVH, sid, "ct")
        return SharedSecret(Ciphertext(ct, scheme, ring, sid), KeyShare(key, scheme, ring, sid))

    def derived(self, ct_values, key_values, ring: RingParams, scheme: Scheme,
                origin: PartyId | None = None) -> SharedSecret:
        """Wrap locally computed halves as a new shared secret."""
        sid = self.new_id()
        ct_values = np.asarray(ct_values, dtype=np.uint64)
        key_values = np.asarray(key_values, dtype=np.uint64)
        if key_values.ndim == 0:
            key_values = np.full(ct_values.shape, int(key_values), dtype=np.uint64)
        self.note_generated(EVH, sid, "ct")
        self.note_generated(KH, sid, "key")
        if origin is not None:
            self.exempt_origin(origin, sid)
        return SharedSecret(Ciphertext(ct_values, scheme, ring, sid),
                            KeyShare(key_values, scheme, ring, sid),
                            origin=origin)

    def open(self, secret: SharedSecret) -> np.ndarray:
        """Harness-level decrypt (never part of a protocol)."""
        return decrypt(secret.ct, secret.key)

    # -- security rule ----------------------------------------------------

    def assert_views_legal(self, raise_on_fail: bool = False) -> list[Violation]:
        """The access rule: no party may pair a ciphertext with its key."""
        found = []
        for view in self.views.values():
            found.extend(view.violations(self._exempt))
        if found and raise_on_fail:
            detail = ", ".join(f"{v.party.value}#{v.secret_id}" for v in found)
            raise ProtocolError(f"view violations: {detail}")
        return found

    # -- scheduler ---------------------------------------------------------

    def run(self, gen):
        """Drive a protocol generator to completion, one barrier per yield."""
        while True:
            try:
                next(gen)
            except StopIteration as stop:
                return stop.value
            self.round_barrier()


def par(*gens):
    """Run protocol generators in lockstep under shared barriers.

    Finishes when all have finished; rounds used = deepest branch.
    Returns the list of results in argument order.
    """
    gens = list(gens)
    results = [None] * len(gens)
    live = set(range(len(gens)))
    while live:
        for i in sorted(live):
            try:
                next(gens[i])
            except StopIteration as stop:
                results[i] = stop.value
                live.discard(i)
        if live:
            yield
    return results


def seq(*gens):
    """Run generators one after another; returns the last result."""
    result = None
    for g in gens:
        result = yield from g
    return result
