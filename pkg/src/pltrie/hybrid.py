"""Two-route archives: model-coded sequences plus a raw residual store.

A dataset is split against a model and a bit budget: sequences whose
analytic code length fits the budget are stored as range-coder records under
the escape-wrapped model, everything else (too long, probability zero, or
out-of-vocabulary) goes to the residual store verbatim at a fixed token
width.  Lossy mode replaces each residual with a pointer to the covered
sequence sharing the longest prefix.

Container layout (PLTA, all integers little-endian, varints LEB128):

    magic "PLTA" | version u8 | mode u8 | tau u32 | epsilon u64/u64 |
    size u32 | model u32+utf8 |
    covered u32 count, entries: varint index + bit record |
    residual u8 token_bits, u32 count, entries:
        lossless: varint index + varint ntokens + packed tokens (MSB-first)
        lossy:    varint index + varint covered ordinal
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

from .codec import Bitstream, code_length, decode_bits, encode_bits
from .errors import ModelFormatError, SequenceError, ZeroProbabilityError
from .model import (
    GenerativeModel,
    Sequence,
    as_fraction,
    format_rational,
    parse_model,
    with_escape,
)
from .trie import Plt

MAGIC = b"PLTA"
VERSION = 1
LOSSLESS = "lossless"
LOSSY = "lossy"
_MODE_CODES = {LOSSLESS: 0, LOSSY: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}

DEFAULT_EPSILON = Fraction(1, 256)

_U32_MAX = (1 << 32) - 1
_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class TierThresholds:
    """Ascending code-length boundaries separating four storage tiers."""

    hot: int
    warm: int
    cold: int

    def __post_init__(self):
        if not 0 < self.hot < self.warm < self.cold:
            raise ValueError("thresholds must be positive and strictly ascending")


def route_tier(length_bits: int, thresholds: TierThresholds) -> int:
    """Tier 1-4 for a code length; boundaries belong to the cheaper tier."""
    if length_bits <= 0:
        raise ValueError("length_bits must be positive")
    if length_bits <= thresholds.hot:
        return 1
    if length_bits <= thresholds.warm:
        return 2
    if length_bits <= thresholds.cold:
        return 3
    return 4


class HybridArchive:
    """Packed dataset: covered bit records plus residuals, with its model."""

    __slots__ = ("model", "epsilon", "tau", "mode", "size", "covered", "residual", "token_bits")

    def __init__(self, model, epsilon, tau, mode, size, covered, residual, token_bits):
        self.model = model
        self.epsilon = epsilon
        self.tau = tau
        self.mode = mode
        self.size = size
        self.covered = tuple(covered)
        self.residual = tuple(residual)
        self.token_bits = token_bits

    def _key(self):
        return (
            self.mode,
            self.tau,
            self.epsilon,
            self.size,
            self.covered,
            self.residual,
            self.token_bits,
            self.model.serialize(),
        )

    def __eq__(self, other):
        return isinstance(other, HybridArchive) and self._key() == other._key()

    def covered_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.covered)

    def residual_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.residual)


@dataclass(frozen=True)
class DescriptionLength:
    """Bit accounting of an archive: model + covered + residual sections."""

    model_bits: int
    covered_bits: int
    residual_bits: int
    covered_fraction: Fraction

    @property
    def total_bits(self) -> int:
        return self.model_bits + self.covered_bits + self.residual_bits

    def lines(self) -> list[str]:
        return [
            f"model_bits {self.model_bits}",
            f"covered_bits {self.covered_bits}",
            f"residual_bits {self.residual_bits}",
            f"total_bits {self.total_bits}",
            f"covered_fraction {format_rational(self.covered_fraction)}",
        ]


def split(model: GenerativeModel, dataset, tau: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Partition dataset indices into (covered, residual) by code length <= tau."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    covered, residual = [], []
    for i, seq in enumerate(dataset):
        try:
            fits = code_length(model, seq) <= tau
        except (SequenceError, ZeroProbabilityError):
            fits = False
        (covered if fits else residual).append(i)
    return tuple(covered), tuple(residual)


def _residual_width(vocab_size: int, dataset, residual_idx) -> int:
    """Fixed per-token width: wide enough for reserved ids and any stray id."""
    width = max((vocab_size + 1).bit_length(), 1)
    for i in residual_idx:
        for token in dataset[i]:
            if token < 0:
                raise SequenceError(f"negative token id {token} cannot be archived")
            width = max(width, token.bit_length())
    if width > 64:
        raise SequenceError("token ids too large for the residual store")
    return width


def pack(model: GenerativeModel, dataset, tau: int, epsilon=DEFAULT_EPSILON) -> HybridArchive:
    """Lossless archive: covered sequences bit-coded, the rest stored raw."""
    epsilon = as_fraction(epsilon)
    dataset = [tuple(s) for s in dataset]
    covered_idx, residual_idx = split(model, dataset, tau)
    coder = with_escape(model, epsilon)
    covered, demoted = [], []
    for i in covered_idx:
        stream = encode_bits(coder, dataset[i])
        if stream.bit_count > 0xFFFF:
            demoted.append(i)
        else:
            covered.append((i, stream))
    residual_idx = tuple(sorted(residual_idx + tuple(demoted)))
    token_bits = _residual_width(model.vocabulary.size, dataset, residual_idx)
    residual = [(i, dataset[i]) for i in residual_idx]
    return HybridArchive(
        model, epsilon, tau, LOSSLESS, len(dataset), covered, residual, token_bits
    )


def lossy_pack(model: GenerativeModel, plt: Plt, dataset, tau: int, epsilon=DEFAULT_EPSILON):
    """Archive where residuals become pointers to their nearest covered twin.

    The trie supplies the nearest-prefix lookup and the probability used for
    distortion accounting.  Returns (archive, distortions): one surprisal
    value, in bits, per residual entry of the archive — the information
    content of the longest prefix each replaced sequence shares with its
    stand-in.  Requires a nonempty covered side.
    """
    lossless = pack(model, dataset, tau, epsilon)
    if not lossless.covered:
        raise ValueError("lossy packing needs at least one covered sequence")
    dataset = [tuple(s) for s in dataset]
    reps = [dataset[i] for i, _ in lossless.covered]
    first_ordinal = {}
    for ordinal, seq in enumerate(reps):
        first_ordinal.setdefault(seq, ordinal)
    residual = []
    distortions = []
    for i, seq in lossless.residual:
        stand_in = plt.nearest_covered(first_ordinal, seq)
        residual.append((i, first_ordinal[stand_in]))
        distortions.append(plt.prefix_information(seq, stand_in))
    archive = HybridArchive(
        model,
        lossless.epsilon,
        tau,
        LOSSY,
        lossless.size,
        lossless.covered,
        residual,
        lossless.token_bits,
    )
    return archive, distortions


def unpack(archive: HybridArchive) -> list[Sequence]:
    """Rebuild the dataset in original order; lossy residuals are stand-ins."""
    coder = with_escape(archive.model, archive.epsilon)
    out: dict[int, Sequence] = {}
    decoded = []
    for i, stream in archive.covered:
        seq = decode_bits(coder, stream)
        decoded.append(seq)
        out[i] = seq
    for i, payload in archive.residual:
        out[i] = decoded[payload] if archive.mode == LOSSY else tuple(payload)
    if len(out) != archive.size:
        raise ModelFormatError("archive entries do not cover the dataset")
    return [out[i] for i in range(archive.size)]


def description_length(archive: HybridArchive) -> DescriptionLength:
    """Bookkeeping split of the archive's storage cost.

    Covered cost is the analytic per-sequence bit budget under the base
    model; model and residual costs are actual serialized sizes.
    """
    covered_bits = sum(
        code_length(archive.model, seq) for seq in _covered_sequences(archive)
    )
    # Entry bytes only: the 5-byte section header (width + count) is container
    # plumbing, so an empty residual store costs zero bits.
    residual_bits = 8 * (len(_residual_block(archive)) - 5)
    fraction = (
        Fraction(len(archive.covered), archive.size) if archive.size else Fraction(1)
    )
    return DescriptionLength(
        model_bits=archive.model.description_length_bits(),
        covered_bits=covered_bits,
        residual_bits=residual_bits,
        covered_fraction=fraction,
    )


def _covered_sequences(archive: HybridArchive) -> list[Sequence]:
    coder = with_escape(archive.model, archive.epsilon)
    return [decode_bits(coder, stream) for _, stream in archive.covered]


def _write_varint(out: bytearray, value: int) -> None:
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


def _read_varint(buf: bytes, offset: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if offset >= len(buf):
            raise ModelFormatError(f"truncated varint at byte {offset}")
        byte = buf[offset]
        offset += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, offset
        shift += 7
        if shift > 63:
            raise ModelFormatError(f"varint too long at byte {offset}")


def _pack_tokens(seq: Sequence, width: int) -> bytes:
    acc = 0
    for token in seq:
        acc = (acc << width) | token
    nbits = width * len(seq)
    pad = -nbits % 8
    return (acc << pad).to_bytes((nbits + 7) // 8, "big")


def _unpack_tokens(data: bytes, count: int, width: int) -> Sequence:
    acc = int.from_bytes(data, "big") >> (-(width * count) % 8)
    mask = (1 << width) - 1
    out = [0] * count
    for pos in range(count - 1, -1, -1):
        out[pos] = acc & mask
        acc >>= width
    return tuple(out)


def _residual_block(archive: HybridArchive) -> bytes:
    out = bytearray()
    out.append(archive.token_bits)
    out += struct.pack("<I", len(archive.residual))
    for i, payload in archive.residual:
        _write_varint(out, i)
        if archive.mode == LOSSY:
            _write_varint(out, payload)
        else:
            _write_varint(out, len(payload))
            out += _pack_tokens(payload, archive.token_bits)
    return bytes(out)


def serialize_archive(archive: HybridArchive) -> bytes:
    if not 0 <= archive.tau <= _U32_MAX:
        raise ModelFormatError("tau does not fit the container field")
    eps = archive.epsilon
    if not (0 < eps.numerator <= _U64_MAX and eps.denominator <= _U64_MAX):
        raise ModelFormatError("epsilon does not fit the container field")
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out.append(_MODE_CODES[archive.mode])
    out += struct.pack("<I", archive.tau)
    out += struct.pack("<QQ", eps.numerator, eps.denominator)
    out += struct.pack("<I", archive.size)
    model_text = archive.model.serialize().encode("utf-8")
    out += struct.pack("<I", len(model_text))
    out += model_text
    out += struct.pack("<I", len(archive.covered))
    for i, stream in archive.covered:
        _write_varint(out, i)
        out += stream.to_record()
    out += _residual_block(archive)
    return bytes(out)


def parse_archive(buf: bytes) -> HybridArchive:
    if buf[:4] != MAGIC:
        raise ModelFormatError("not a PLTA archive (bad magic)")
    if len(buf) < 6:
        raise ModelFormatError("truncated archive header")
    if buf[4] != VERSION:
        raise ModelFormatError(f"unsupported archive version {buf[4]}")
    mode = _MODE_NAMES.get(buf[5])
    if mode is None:
        raise ModelFormatError(f"unknown archive mode byte {buf[5]}")
    offset = 6
    try:
        (tau,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        num, den = struct.unpack_from("<QQ", buf, offset)
        offset += 16
        (size,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        (model_len,) = struct.unpack_from("<I", buf, offset)
        offset += 4
    except struct.error:
        raise ModelFormatError(f"truncated archive header at byte {offset}") from None
    if den == 0:
        raise ModelFormatError("epsilon denominator is zero")
    if offset + model_len > len(buf):
        raise ModelFormatError(f"truncated model block at byte {offset}")
    model = parse_model(buf[offset : offset + model_len].decode("utf-8"))
    offset += model_len
    if offset + 4 > len(buf):
        raise ModelFormatError(f"truncated covered block at byte {offset}")
    (covered_count,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    covered = []
    for _ in range(covered_count):
        i, offset = _read_varint(buf, offset)
        try:
            stream, offset = Bitstream.from_record(buf, offset)
        except Exception as exc:
            raise ModelFormatError(str(exc)) from None
        covered.append((i, stream))
    if offset + 5 > len(buf):
        raise ModelFormatError(f"truncated residual block at byte {offset}")
    token_bits = buf[offset]
    (residual_count,) = struct.unpack_from("<I", buf, offset + 1)
    offset += 5
    if not 1 <= token_bits <= 64:
        raise ModelFormatError(f"residual token width {token_bits} out of range")
    residual = []
    for _ in range(residual_count):
        i, offset = _read_varint(buf, offset)
        if mode == LOSSY:
            ordinal, offset = _read_varint(buf, offset)
            if ordinal >= covered_count:
                raise ModelFormatError(f"residual pointer {ordinal} out of range")
            residual.append((i, ordinal))
        else:
            ntok, offset = _read_varint(buf, offset)
            nbytes = (ntok * token_bits + 7) // 8
            if offset + nbytes > len(buf):
                raise ModelFormatError(f"truncated residual entry at byte {offset}")
            residual.append((i, _unpack_tokens(buf[offset : offset + nbytes], ntok, token_bits)))
            offset += nbytes
    if offset != len(buf):
        raise ModelFormatError(f"{len(buf) - offset} trailing bytes after archive")
    return HybridArchive(
        model, Fraction(num, den), tau, mode, size, covered, residual, token_bits
    )


def save_archive(archive: HybridArchive, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_archive(archive))


def load_archive(path) -> HybridArchive:
    with open(path, "rb") as fh:
        return parse_archive(fh.read())
