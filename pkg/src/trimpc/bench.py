"""Benchmark driver: run any protocol at configured parameters and emit
correctness, round, bit, and timing records.

Each record is one protocol at one parameter point; the trial count is the
lane width of a single vectorized run, so rounds and bit totals are exact
meter readings for one logical instance.  Microsecond figures are simulator
local-compute times (slowest party) and are not comparable across machines.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field

import click
import numpy as np

from . import conversions, logic, numeric, oracle
from .primitives import and2, mul, open_bits, power, reencrypt, scaled_pow, share_bits
from .rings import RingParams, Scheme, from_signed, to_signed
from .session import Session

CSV_HEADER = "op,l,key_bits,trials,rounds,bits_total,wall_us_per_op,error_rate,seed"


@dataclass
class BenchRecord:
    op: str
    l: int
    key_bits: int
    trials: int
    rounds: int
    bits_total: int
    bits_by_pair: dict
    wall_us_per_op: float
    error_rate: float
    seed: int
    bits_by_label: dict = field(default_factory=dict)

    def csv_row(self) -> str:
        return (f"{self.op},{self.l},{self.key_bits},{self.trials},{self.rounds},"
                f"{self.bits_total},{self.wall_us_per_op:.4f},{self.error_rate:.8f},{self.seed}")

    def json_obj(self) -> dict:
        return {
            "op": self.op,
            "l": self.l,
            "key_bits": self.key_bits,
            "trials": self.trials,
            "rounds": self.rounds,
            "bits_total": self.bits_total,
            "wall_us_per_op": round(self.wall_us_per_op, 4),
            "error_rate": round(self.error_rate, 8),
            "seed": self.seed,
        }


@dataclass
class BenchParams:
    op: str
    l: int = 8
    key_bits: int = 0
    trials: int = 1000
    seed: int = 0
    base: int = 6
    n_t: int = 7
    n_e: int = 1
    n_s: int = 4
    n_p: int = 3
    exponent: int = 3
    divisor: int = 3
    deterministic_carry: bool = False
    unsafe_reveal: bool = False
    meter_preshared: bool = False

    def cmp_cfg(self) -> logic.ComparisonConfig:
        kw = dict(n_s=self.n_s, n_e=self.n_e, base=self.base)
        if self.deterministic_carry:
            return logic.ComparisonConfig.deterministic(**kw)
        return logic.ComparisonConfig(**kw)


def _mismatch(expected, actual) -> float:
    expected = np.asarray(expected)
    actual = np.asarray(actual)
    return float((expected != actual).mean())


def _bit_out(sess, bits) -> np.ndarray:
    return (bits.e ^ bits.k)[0].astype(np.uint64)


# Each runner: (sess, p: BenchParams, rng) -> error_rate ------------------------


def _run_mul(sess, p, rng):
    ring = RingParams(p.l)
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    b = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, ring, Scheme.ADDITIVE_MOD)
    y = sess.new_secret(b, ring, Scheme.ADDITIVE_MOD)
    z = sess.run(mul(sess, x, y))
    return _mismatch((a * b) & np.uint64(ring.mask), sess.open(z))


def _run_and2(sess, p, rng):
    a = rng.integers(0, 2, size=sess.lanes, dtype=np.uint64)
    b = rng.integers(0, 2, size=sess.lanes, dtype=np.uint64)
    z = sess.run(and2(sess, share_bits(sess, a, 1), share_bits(sess, b, 1)))
    return _mismatch(a & b, _bit_out(sess, z))


def _run_hamming(sess, p, rng):
    x = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    y = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    z = sess.run(logic.hamming(sess, conversions.bit_planes(x, p.l), conversions.bit_planes(y, p.l)))
    exp = np.array([oracle.hamming(int(a), int(b)) for a, b in zip(x, y)], dtype=np.uint64)
    return _mismatch(exp, sess.open(z))


def _fanin(kind):
    def run(sess, p, rng):
        vals = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
        vals[rng.random(sess.lanes) < 0.3] = np.uint64((1 << p.l) - 1)  # exercise the all-ones branch
        bits = share_bits(sess, vals, p.l)
        cfg = p.cmp_cfg()
        gen = {"base": logic.fanin_base(sess, bits, cfg.base),
               "hamming": logic.fanin_hamming(sess, bits, cfg),
               "both": logic.fanin_both(sess, bits, cfg)}[kind]
        z = sess.run(gen)
        exp = (vals == (1 << p.l) - 1).astype(np.uint64)
        return _mismatch(exp, _bit_out(sess, z))

    return run


def _run_equal_zero(sess, p, rng):
    vals = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    vals[rng.random(sess.lanes) < 0.5] = np.uint64(0)
    x = sess.new_secret(vals, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(logic.equal_zero(sess, x, p.cmp_cfg()))
    return _mismatch((vals == 0).astype(np.uint64), _bit_out(sess, z))


def _signed_inputs(sess, p, rng):
    span = 1 << (p.l - p.n_s)
    vals = rng.integers(-span + 1, span, size=sess.lanes)
    return vals, sess.new_secret(from_signed(vals, p.l), RingParams(p.l, n_s=p.n_s), Scheme.ADDITIVE_MOD)


def _run_less_zero(sess, p, rng):
    vals, x = _signed_inputs(sess, p, rng)
    z = sess.run(logic.less_zero(sess, x, p.cmp_cfg()))
    return _mismatch((vals < 0).astype(np.uint64), _bit_out(sess, z))


def _run_multi_less_zero(sess, p, rng):
    vals, x = _signed_inputs(sess, p, rng)
    z = sess.run(logic.multi_less_zero(sess, x, p.cmp_cfg()))
    return _mismatch((vals < 0).astype(np.uint64), _bit_out(sess, z))


def _run_carry_bits(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(logic.carry_bits(sess, x, p.cmp_cfg()))
    got = (z.e ^ z.k).astype(np.uint64)
    exp = np.stack([np.array(oracle.ripple_carries(int(v), int(k), p.l), dtype=np.uint64)
                    for v, k in zip(a, x.key.value)], axis=1)
    return float((exp != got).any(axis=0).mean())


def _run_add_to_xor(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(conversions.add_to_xor(sess, x, p.cmp_cfg()))
    return _mismatch(a, open_bits(sess, z))


def _run_xor_to_add(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    z = sess.run(conversions.xor_to_add(sess, share_bits(sess, a, p.l)))
    return _mismatch(a, sess.open(z))


def _run_addmod_to_add_fast(sess, p, rng):
    a = rng.integers(0, 1 << max(p.l - 3, 1), size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(conversions.addmod_to_add_fast(sess, x))
    return _mismatch(a, sess.open(z))


def _run_addmod_to_add_slow(sess, p, rng):
    b = p.key_bits or p.l + 8
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l, b=b), Scheme.ADDITIVE_MOD,
                        key=rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64))
    z = sess.run(conversions.addmod_to_add_slow(sess, x, b=b, cfg=p.cmp_cfg()))
    return _mismatch(a, sess.open(z))


def _run_reencrypt(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(reencrypt(sess, x))
    return _mismatch(a, sess.open(z))


def _run_pow(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(power(sess, x, p.exponent))
    exp = np.array([pow(int(v), p.exponent, 1 << p.l) for v in a], dtype=np.uint64)
    return _mismatch(exp, sess.open(z))


def _run_scaled_pow(sess, p, rng):
    s = 1 << max(2, p.l // 4)
    bound = int((1 << (p.l - 3)) ** (1 / p.exponent) * s ** ((p.exponent - 1) / p.exponent))
    a = rng.integers(0, max(bound, 2), size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = sess.run(scaled_pow(sess, x, p.exponent, s))
    exact = np.array([oracle.floor_scaled_power(int(v), p.exponent, s) for v in a], dtype=np.int64)
    got = sess.open(z).astype(np.int64)
    return float((np.abs(got - exact) > p.exponent - 1).mean())


def _run_mul_by_public(sess, p, rng):
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    z = numeric.mul_by_public(sess, x, p.divisor)
    return _mismatch((a * np.uint64(p.divisor)) & np.uint64((1 << p.l) - 1), sess.open(z))


def _run_div_by_public(sess, p, rng):
    b = p.key_bits or p.l + 10
    k = max(1, p.divisor.bit_length() + 1)
    a = rng.integers(0, 1 << p.l, size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l, b=b), Scheme.PURE_ADDITIVE)
    z = sess.run(numeric.div_by_public(sess, x, p.divisor, k))
    return _mismatch(a // np.uint64(p.divisor), sess.open(z))


def _run_index_msb(sess, p, rng):
    a = rng.integers(1, 1 << (p.l - 3), size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    msb, _ = sess.run(numeric.index_msb(sess, x, p.cmp_cfg()))
    exp = np.array([oracle.msb_index(int(v)) for v in a], dtype=np.uint64)
    return _mismatch(exp, sess.open(msb))


def _run_division_and_log(sess, p, rng):
    half = p.l // 2
    a = rng.integers(1, 1 << min(half, 10), size=sess.lanes, dtype=np.uint64)
    x = sess.new_secret(a, RingParams(p.l), Scheme.ADDITIVE_MOD)
    inv, lg = sess.run(numeric.division_and_log(sess, x, numeric.TaylorConfig(p.n_t), p.cmp_cfg()))
    rel = np.abs(numeric.open_fixed(sess, inv) * a.astype(float) - 1.0)
    log_err = np.abs(numeric.open_fixed(sess, lg) - np.log2(a.astype(float)))
    tol_inv = 2.0**-21 + 2.0 ** (-half + 2)
    tol_log = 10 * 2.0**-half
    return float(((rel > tol_inv) | (log_err > tol_log)).mean())


def _trig(kind):
    def run(sess, p, rng):
        a = rng.uniform(-math.pi, math.pi, size=sess.lanes)
        if kind == "tangent":
            a = np.clip(a / 2.2, -1.25, 1.25)
        kb = p.key_bits or (16 if kind == "tangent" else 50)
        x = numeric.share_fixed(sess, a, frac=8, key_bits=kb)
        grid = np.round(a * 256) / 256
        if kind == "sine":
            out = sess.run(numeric.sine(sess, x, key_bits=kb))
            err = np.abs(numeric.open_fixed(sess, out) - np.sin(grid))
            return float((err > 2.0**-6).mean())
        if kind == "cosine":
            out = sess.run(numeric.cosine(sess, x, key_bits=kb))
            err = np.abs(numeric.open_fixed(sess, out) - np.cos(grid))
            return float((err > 2.0**-6).mean())
        cfg = numeric.TangentConfig(n_p=p.n_p)
        out = sess.run(numeric.tangent(sess, x, cfg, p.cmp_cfg(), unsafe_reveal=p.unsafe_reveal))
        err = np.abs(numeric.open_fixed(sess, out) - np.tan(grid))
        return float((err > 0.25).mean())

    return run


RUNNERS = {
    "mul": _run_mul,
    "and2": _run_and2,
    "hamming": _run_hamming,
    "fanin_base": _fanin("base"),
    "fanin_hamming": _fanin("hamming"),
    "fanin_both": _fanin("both"),
    "equal_zero": _run_equal_zero,
    "less_zero": _run_less_zero,
    "multi_less_zero": _run_multi_less_zero,
    "carry_bits": _run_carry_bits,
    "add_to_xor": _run_add_to_xor,
    "xor_to_add": _run_xor_to_add,
    "addmod_to_add_fast": _run_addmod_to_add_fast,
    "addmod_to_add_slow": _run_addmod_to_add_slow,
    "reencrypt": _run_reencrypt,
    "pow": _run_pow,
    "scaled_pow": _run_scaled_pow,
    "mul_by_public": _run_mul_by_public,
    "div_by_public": _run_div_by_public,
    "index_msb": _run_index_msb,
    "division_and_log": _run_division_and_log,
    "sine": _trig("sine"),
    "cosine": _trig("cosine"),
    "tangent": _trig("tangent"),
}


def run_bench(params: BenchParams) -> BenchRecord:
    """One vectorized run of one operation; exact meter readings."""
    if params.op not in RUNNERS:
        raise KeyError(f"unknown op {params.op!r}; known: {', '.join(sorted(RUNNERS))}")
    sess = Session(seed=params.seed, lanes=params.trials,
                   meter_preshared=params.meter_preshared)
    rng = np.random.default_rng(params.seed)
    t0 = time.perf_counter()
    error_rate = RUNNERS[params.op](sess, params, rng)
    wall = time.perf_counter() - t0
    tracked = sess.slowest_party_us()
    per_op = tracked / params.trials if tracked > 0 else wall * 1e6 / (3 * params.trials)
    violations = sess.assert_views_legal()
    if violations and not params.unsafe_reveal:
        raise RuntimeError(f"view violations in {params.op}: {violations}")
    snap = sess.meter.snapshot()
    return BenchRecord(
        op=params.op,
        l=params.l,
        key_bits=params.key_bits or RingParams(params.l).b,
        trials=params.trials,
        rounds=snap["rounds"],
        bits_total=snap["bits_total"],
        bits_by_pair=snap["bits_by_pair"],
        wall_us_per_op=per_op,
        error_rate=error_rate,
        seed=params.seed,
        bits_by_label=dict(sess.meter.by_label),
    )


def emit(records: list[BenchRecord], fmt: str) -> str:
    if fmt == "csv":
        return "\n".join([CSV_HEADER] + [r.csv_row() for r in records])
    return json.dumps([r.json_obj() for r in records], indent=2)


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


# config-file key -> click parameter name (dashes already normalized away)
_CONFIG_ALIASES = {"bits": "l", "np": "n_p", "exp": "exponent", "format": "fmt",
                   "keybits": "keybits", "nt": "nt", "ne": "ne", "ns": "ns"}


@click.command()
@click.option("--op", required=True, help="operation name; a wrong one lists all")
@click.option("--bits", "l", type=int, default=8, help="plaintext width l")
@click.option("--keybits", type=int, default=0, help="key width b (0 = derive)")
@click.option("--trials", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--base", type=int, default=6, help="fan-in base")
@click.option("--nt", type=int, default=7, help="series terms")
@click.option("--ne", type=int, default=1, help="comparison repetitions")
@click.option("--ns", type=int, default=4, help="sign bits")
@click.option("--np", "n_p", type=int, default=3, help="tangent key pairs")
@click.option("--exp", "exponent", type=int, default=3, help="public exponent / power")
@click.option("--divisor", type=int, default=3, help="public divisor / multiplier")
@click.option("--deterministic-carry", is_flag=True, default=False)
@click.option("--unsafe-reveal", is_flag=True, default=False)
@click.option("--meter-preshared", is_flag=True, default=False)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="key=value file; explicit flags override it")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--max-rounds", type=int, default=None, help="fail if rounds exceed this")
@click.option("--max-bits", type=int, default=None, help="fail if bits_total exceeds this")
@click.option("--max-error", type=float, default=None, help="fail if error_rate exceeds this")
def main(op, l, keybits, trials, seed, fmt, base, nt, ne, ns, n_p, exponent, divisor,
         deterministic_carry, unsafe_reveal, meter_preshared, config_path, out_path,
         max_rounds, max_bits, max_error):
    """Run one protocol benchmark and emit a record."""
    ctx = click.get_current_context()
    values = {"op": op, "l": l, "keybits": keybits, "trials": trials, "seed": seed,
              "fmt": fmt, "base": base, "nt": nt, "ne": ne, "ns": ns, "n_p": n_p,
              "exponent": exponent, "divisor": divisor,
              "deterministic_carry": deterministic_carry, "unsafe_reveal": unsafe_reveal,
              "meter_preshared": meter_preshared}
    if config_path:
        for key, raw in _load_config(config_path).items():
            name = _CONFIG_ALIASES.get(key, key)
            if name not in values:
                raise click.UsageError(f"unknown config key {key!r}")
            if ctx.get_parameter_source(name).name != "DEFAULT":
                continue  # explicit flag wins
            cur = values[name]
            values[name] = raw.lower() in ("1", "true", "yes") if isinstance(cur, bool) else type(cur)(raw)
    fmt = values["fmt"]
    params = BenchParams(
        op=values["op"], l=values["l"], key_bits=values["keybits"], trials=values["trials"],
        seed=values["seed"], base=values["base"], n_t=values["nt"], n_e=values["ne"],
        n_s=values["ns"], n_p=values["n_p"], exponent=values["exponent"],
        divisor=values["divisor"], deterministic_carry=values["deterministic_carry"],
        unsafe_reveal=values["unsafe_reveal"], meter_preshared=values["meter_preshared"],
    )
    try:
        record = run_bench(params)
    except KeyError as exc:
        raise click.UsageError(str(exc))
    text = emit([record], fmt)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)
    if record.bits_by_label:
        click.echo("# bits by stage: " + json.dumps(record.bits_by_label), err=True)
    failed = []
    if max_rounds is not None and record.rounds > max_rounds:
        failed.append(f"rounds {record.rounds} > {max_rounds}")
    if max_bits is not None and record.bits_total > max_bits:
        failed.append(f"bits {record.bits_total} > {max_bits}")
    if max_error is not None and record.error_rate > max_error:
        failed.append(f"error {record.error_rate} > {max_error}")
    if failed:
        click.echo("threshold failures: " + "; ".join(failed), err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
