"""Interval codes for model-generated sequences.

Two coders share one geometry.  The reference coder works in exact rationals:
each token narrows [0, 1) to the sub-interval that the ordered cumulative
distribution assigns it, END included, and any point of the final interval
identifies the sequence.  The bit coder is a 64-bit integer range coder over
per-node distributions quantized to a common denominator; at flush time its
integer window is intersected with the exact interval (tracked in parallel)
and the shortest dyadic interval inside the intersection is emitted.  The
emitted point therefore lies in the exact interval as well, so the rational
decoder and the integer decoder agree on every well-formed stream.

Quantization can only starve a token whose probability is below roughly
2^-31; such streams still round-trip through the integer coder (the flush
falls back to the window alone) but are no longer decodable by point.
"""

from __future__ import annotations

import struct
from fractions import Fraction
from functools import lru_cache

from .errors import DecodeError, PltError, ZeroProbabilityError
from .model import ConditionalDistribution, GenerativeModel, Sequence

RANGE_BITS = 64
RENORM_BITS = 32
_RANGE_TOP = 1 << RANGE_BITS
_RENORM_FLOOR = 1 << RENORM_BITS
_LOW_MASK = _RENORM_FLOOR - 1

QUANT_TOTAL = (1 << 31) - 1

MAX_RECORD_BITS = 0xFFFF
DEFAULT_MAX_LEN = 4096


class Bitstream:
    """Immutable MSB-first bit string with an exact bit count."""

    __slots__ = ("data", "bit_count")

    def __init__(self, data: bytes, bit_count: int):
        if bit_count < 0:
            raise ValueError("bit_count must be >= 0")
        if len(data) != (bit_count + 7) // 8:
            raise ValueError("data length does not match bit_count")
        pad = 8 * len(data) - bit_count
        if pad and data[-1] & ((1 << pad) - 1):
            raise ValueError("padding bits must be zero")
        self.data = bytes(data)
        self.bit_count = bit_count

    @classmethod
    def from_int(cls, value: int, bit_count: int) -> "Bitstream":
        if value < 0 or value >> bit_count:
            raise ValueError("value does not fit in bit_count bits")
        pad = -bit_count % 8
        data = (value << pad).to_bytes((bit_count + 7) // 8, "big")
        return cls(data, bit_count)

    def to_int(self) -> int:
        pad = -self.bit_count % 8
        return int.from_bytes(self.data, "big") >> pad

    def to_record(self) -> bytes:
        """Length-prefixed wire form: u16-le bit count, then padded payload."""
        if self.bit_count > MAX_RECORD_BITS:
            raise PltError(
                f"record format caps codes at {MAX_RECORD_BITS} bits, got {self.bit_count}"
            )
        return struct.pack("<H", self.bit_count) + self.data

    @classmethod
    def from_record(cls, buf: bytes, offset: int = 0) -> tuple["Bitstream", int]:
        """Parse one record at offset; returns (bitstream, next offset)."""
        if offset + 2 > len(buf):
            raise DecodeError(f"truncated record header at byte {offset}")
        (bit_count,) = struct.unpack_from("<H", buf, offset)
        nbytes = (bit_count + 7) // 8
        end = offset + 2 + nbytes
        if end > len(buf):
            raise DecodeError(f"truncated record payload at byte {offset + 2}")
        try:
            stream = cls(buf[offset + 2 : end], bit_count)
        except ValueError as exc:
            raise DecodeError(f"malformed record at byte {offset}: {exc}") from None
        return stream, end

    def __eq__(self, other):
        return (
            isinstance(other, Bitstream)
            and self.bit_count == other.bit_count
            and self.data == other.data
        )

    def __hash__(self):
        return hash((self.data, self.bit_count))

    def __repr__(self):
        return f"Bitstream({self.to_int():#x}, bits={self.bit_count})"


class Interval:
    """Half-open rational sub-interval of [0, 1)."""

    __slots__ = ("low", "high")

    def __init__(self, low: Fraction, high: Fraction):
        if not 0 <= low < high <= 1:
            raise ValueError("interval must satisfy 0 <= low < high <= 1")
        self.low = low
        self.high = high

    @property
    def width(self) -> Fraction:
        return self.high - self.low

    def __contains__(self, z) -> bool:
        return self.low <= z < self.high

    def __eq__(self, other):
        return isinstance(other, Interval) and self.low == other.low and self.high == other.high

    def __hash__(self):
        return hash((self.low, self.high))

    def __repr__(self):
        return f"Interval({self.low!r}, {self.high!r})"


def ceil_neg_log2(p: Fraction) -> int:
    """Smallest k with 2**-k <= p, i.e. ceil(-log2 p), exactly."""
    if p <= 0 or p > 1:
        raise ValueError("argument must lie in (0, 1]")
    num, den = p.numerator, p.denominator
    k = max(den.bit_length() - num.bit_length(), 0)
    while (num << k) < den:
        k += 1
    while k > 0 and (num << (k - 1)) >= den:
        k -= 1
    return k


def code_length(model: GenerativeModel, seq: Sequence) -> int:
    """Analytic bit budget for seq: ceil(-log2 P(seq, then END)) + 1."""
    p = model.sequence_probability(seq)
    if not p:
        raise ZeroProbabilityError(f"sequence has probability zero under the model: {seq!r}")
    return ceil_neg_log2(p) + 1


class _Layout:
    """Cumulative bounds of one conditional under a fixed token order."""

    __slots__ = ("tokens", "starts", "masses", "bounds", "index")

    def __init__(self, dist: ConditionalDistribution, order: tuple[int, ...] | None):
        items = dist.items()
        if order is not None:
            rank = {token: pos for pos, token in enumerate(order)}
            missing = [t for t, _ in items if t not in rank]
            if missing:
                raise ValueError(f"token order does not cover support: {missing}")
            items = sorted(items, key=lambda kv: rank[kv[0]])
        self.tokens = tuple(t for t, _ in items)
        self.masses = tuple(m for _, m in items)
        starts = []
        acc = Fraction(0)
        for _, mass in items:
            starts.append(acc)
            acc += mass
        self.starts = tuple(starts)
        self.bounds = {t: (s, m) for t, s, m in zip(self.tokens, starts, self.masses)}
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def locate(self, z: Fraction) -> tuple[int, Fraction, Fraction]:
        """Token whose slot contains z in [0, 1), with its bounds."""
        lo, hi = 0, len(self.tokens) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= z:
                lo = mid
            else:
                hi = mid - 1
        return self.tokens[lo], self.starts[lo], self.masses[lo]


def _normalize_order(sigma, vocabulary) -> tuple[int, ...] | None:
    if sigma is None:
        return None
    order = tuple(sigma)
    if sorted(order) != list(range(vocabulary.escape_id + 1)):
        raise ValueError("sigma must be a permutation of all token ids including reserved")
    return order


@lru_cache(maxsize=4096)
def _layout(dist: ConditionalDistribution, order: tuple[int, ...] | None) -> _Layout:
    return _Layout(dist, order)


@lru_cache(maxsize=4096)
def _quantized(masses: tuple[Fraction, ...]) -> tuple[int, ...]:
    """Largest-remainder apportionment of QUANT_TOTAL over the given masses.

    Returns cumulative integer bounds (len + 1 entries, 0 .. QUANT_TOTAL);
    every positive mass receives at least one unit.
    """
    quotas = [m * QUANT_TOTAL for m in masses]
    units = [int(q) for q in quotas]
    leftover = QUANT_TOTAL - sum(units)
    by_remainder = sorted(range(len(masses)), key=lambda i: (units[i] - quotas[i], i))
    for i in by_remainder[:leftover]:
        units[i] += 1
    for i, mass in enumerate(masses):
        if mass and not units[i]:
            donor = max(range(len(units)), key=lambda j: (units[j], -j))
            if units[donor] < 2:
                raise PltError("distribution support too large to quantize")
            units[donor] -= 1
            units[i] += 1
    cums = [0]
    for u in units:
        cums.append(cums[-1] + u)
    return tuple(cums)




def encode_interval(model, seq: Sequence, sigma=None) -> tuple[Interval, int]:
    """Exact interval of seq under the model, and its analytic bit length."""
    vocab = model.vocabulary
    vocab.check_sequence(seq)
    order = _normalize_order(sigma, vocab)
    low = Fraction(0)
    width = Fraction(1)
    walk = tuple(seq) + (vocab.end_id,)
    for pos, token in enumerate(walk):
        layout = _layout(model.conditional(walk[:pos]), order)
        bound = layout.bounds.get(token)
        if bound is None:
            raise ZeroProbabilityError(
                f"token {token} has probability zero at position {pos}"
            )
        start, mass = bound
        low += width * start
        width *= mass
    return Interval(low, low + width), ceil_neg_log2(width) + 1


def decode_interval(model, z: Fraction, sigma=None, max_len: int = DEFAULT_MAX_LEN) -> Sequence:
    """Sequence whose exact interval contains the point z."""
    z = Fraction(z)
    if not 0 <= z < 1:
        raise DecodeError("decode point must lie in [0, 1)")
    vocab = model.vocabulary
    order = _normalize_order(sigma, vocab)
    out: list[int] = []
    while True:
        layout = _layout(model.conditional(tuple(out)), order)
        token, start, mass = layout.locate(z)
        if token == vocab.end_id:
            return tuple(out)
        if token == vocab.escape_id:
            raise DecodeError("decode point fell in an escape slot")
        out.append(token)
        if len(out) > max_len:
            raise DecodeError(f"no END marker within {max_len} tokens")
        z = (z - start) / mass


class _RangeState:
    """Shared encoder/decoder arithmetic-coding state.

    acc holds all bits already shifted out (as one big integer), emitted
    counts them; low is the pending 64-bit window base and range its width.
    The global window is [acc * 2^64 + low, + range) at scale emitted + 64.
    """

    __slots__ = ("acc", "low", "range", "emitted")

    def __init__(self):
        self.acc = 0
        self.low = 0
        self.range = _RANGE_TOP
        self.emitted = 0

    def offsets(self, cums: tuple[int, ...]) -> list[int]:
        return [(self.range * c) // QUANT_TOTAL for c in cums]

    def commit(self, lo_off: int, hi_off: int) -> None:
        self.low += lo_off
        if self.low >= _RANGE_TOP:
            self.low -= _RANGE_TOP
            self.acc += 1
        self.range = hi_off - lo_off
        while self.range < _RENORM_FLOOR:
            self.acc = (self.acc << RENORM_BITS) | (self.low >> RENORM_BITS)
            self.low = (self.low & _LOW_MASK) << RENORM_BITS
            self.range <<= RENORM_BITS
            self.emitted += RENORM_BITS

    def window_base(self) -> int:
        return self.acc * _RANGE_TOP + self.low

    @property
    def scale(self) -> int:
        return self.emitted + RANGE_BITS


def _shortest_dyadic(low: Fraction, high: Fraction) -> tuple[int, int]:
    """Shortest dyadic interval [m/2^k, (m+1)/2^k) inside [low, high)."""
    k = ceil_neg_log2(high - low)
    while True:
        m = -((-low.numerator << k) // low.denominator)
        if Fraction(m + 1, 1 << k) <= high:
            return m, k
        k += 1


def encode_bits(model, seq: Sequence, sigma=None) -> Bitstream:
    """Quantized range-coder bits for seq; the encoded point is exact.

    The emitted dyadic interval lies inside both the coder window and, except
    for sub-quantum tokens, the exact rational interval of the sequence.
    """
    vocab = model.vocabulary
    vocab.check_sequence(seq)
    order = _normalize_order(sigma, vocab)
    state = _RangeState()
    exact_low = Fraction(0)
    exact_width = Fraction(1)
    walk = tuple(seq) + (vocab.end_id,)
    for pos, token in enumerate(walk):
        dist = model.conditional(walk[:pos])
        layout = _layout(dist, order)
        bound = layout.bounds.get(token)
        if bound is None:
            raise ZeroProbabilityError(
                f"token {token} has probability zero at position {pos}"
            )
        start, mass = bound
        exact_low += exact_width * start
        exact_width *= mass
        cums = _quantized(layout.masses)
        idx = layout.index[token]
        offs = state.offsets((cums[idx], cums[idx + 1]))
        state.commit(offs[0], offs[1])
    denom = 1 << state.scale
    base = state.window_base()
    window_low = Fraction(base, denom)
    window_high = Fraction(base + state.range, denom)
    low = max(window_low, exact_low)
    high = min(window_high, exact_low + exact_width)
    if low >= high:
        low, high = window_low, window_high
    m, k = _shortest_dyadic(low, high)
    return Bitstream.from_int(m, k)


def decode_bits(model, stream: Bitstream, sigma=None, max_len: int = DEFAULT_MAX_LEN) -> Sequence:
    """Invert encode_bits by replaying the coder against the bit string.

    A stream that is not the canonical encoding of the decoded sequence
    (truncated, tampered, or otherwise stray) raises DecodeError rather than
    returning a wrong answer; the check is a re-encode comparison.
    """
    vocab = model.vocabulary
    order = _normalize_order(sigma, vocab)
    m, k = stream.to_int(), stream.bit_count
    state = _RangeState()
    out: list[int] = []
    while True:
        layout = _layout(model.conditional(tuple(out)), order)
        cums = _quantized(layout.masses)
        offs = state.offsets(cums)
        base = state.window_base()
        # Containment test for m / 2^k in [base + off, base + off') / 2^scale,
        # cross-multiplied to integers.
        scaled = m << state.scale
        idx = None
        lo, hi = 0, len(layout.tokens) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            lo_bound = (base + offs[mid]) << k
            hi_bound = (base + offs[mid + 1]) << k
            if scaled < lo_bound:
                hi = mid - 1
            elif scaled >= hi_bound:
                lo = mid + 1
            else:
                idx = mid
                break
        if idx is None:
            raise DecodeError("bit string does not identify a token at this node")
        token = layout.tokens[idx]
        state.commit(offs[idx], offs[idx + 1])
        if token == vocab.end_id:
            seq = tuple(out)
            if encode_bits(model, seq, order) != stream:
                raise DecodeError("bit string is not a canonical sequence encoding")
            return seq
        if token == vocab.escape_id:
            raise DecodeError("bit string selects the escape symbol")
        out.append(token)
        if len(out) > max_len:
            raise DecodeError(f"no END marker within {max_len} tokens")


def encode_record(model, seq: Sequence, sigma=None) -> bytes:
    return encode_bits(model, seq, sigma).to_record()


def decode_record(
    model, buf: bytes, offset: int = 0, sigma=None, max_len: int = DEFAULT_MAX_LEN
) -> tuple[Sequence, int]:
    stream, end = Bitstream.from_record(buf, offset)
    return decode_bits(model, stream, sigma, max_len), end
