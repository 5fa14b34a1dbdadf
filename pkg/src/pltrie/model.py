"""Generative sequence models over a finite token vocabulary.

A model assigns every prefix x an exact conditional distribution over the
vocabulary plus two reserved symbols: END ("$"), which terminates a sequence,
and ESCAPE ("E"), used by escape-wrapped models.  All probabilities are
fractions.Fraction, so chain-rule products and mass checks are exact.

Model kinds:

* table  -- explicit prefix -> distribution rows with a default row
* ngram  -- order-n counts with add-k smoothing, END counted at sequence ends
* zipf   -- depth-1 item generator with power-law ranks
* policy -- normalized action weights per decision state
* escape -- wrapper scaling another model's mass by (1 - epsilon)

Canonical serialization is a text format with header "PLTMODEL 1"; identical
models serialize byte-identically (rows sorted, rationals as num/den).
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import (
    AbsoluteContinuityError,
    ModelFormatError,
    SequenceError,
    VocabularyError,
)
from . import zipfmath

END_NAME = "$"
ESCAPE_NAME = "E"

# Denominator grid for rounding non-integral zipf weights to exact rationals.
ZIPF_ROUND_DENOMINATOR = 1 << 200

Sequence = tuple[int, ...]


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like "3/7", and exact binary floats to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelFormatError(f"bad rational {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ModelFormatError(f"bad integer {text!r}") from None


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


_FORBIDDEN_NAMES = {END_NAME, ESCAPE_NAME, "-", "."}


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token names; ids 0..size-1, END at size, ESCAPE at size+1."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise VocabularyError("vocabulary must not be empty")
        seen = set()
        for name in self.names:
            if not name or any(c.isspace() for c in name) or name in _FORBIDDEN_NAMES:
                raise VocabularyError(f"invalid token name {name!r}")
            if name in seen:
                raise VocabularyError(f"duplicate token name {name!r}")
            seen.add(name)

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def end_id(self) -> int:
        return len(self.names)

    @property
    def escape_id(self) -> int:
        return len(self.names) + 1

    @cached_property
    def _ids(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def token_id(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise VocabularyError(f"unknown token {name!r}") from None

    def token_name(self, token: int) -> str:
        if token == self.end_id:
            return END_NAME
        if token == self.escape_id:
            return ESCAPE_NAME
        if 0 <= token < len(self.names):
            return self.names[token]
        raise VocabularyError(f"token id {token} out of range")

    def parse_tokens(self, text: str) -> Sequence:
        """Parse a sequence: whitespace/comma separated names, or, when every
        vocabulary name is a single character, a bare concatenation like "BA"."""
        text = text.strip()
        if not text:
            return ()
        parts = text.replace(",", " ").split()
        if len(parts) == 1 and parts[0] not in self._ids:
            if all(len(n) == 1 for n in self.names):
                return tuple(self.token_id(c) for c in parts[0])
        return tuple(self.token_id(p) for p in parts)

    def format_tokens(self, seq: Sequence) -> str:
        return " ".join(self.token_name(t) for t in seq)

    def check_sequence(self, seq: Sequence) -> None:
        """Reject reserved or out-of-range ids in a user sequence."""
        for t in seq:
            if not isinstance(t, int) or not 0 <= t < self.size:
                raise SequenceError(f"token id {t!r} invalid for vocabulary of size {self.size}")


class ConditionalDistribution:
    """Exact distribution over token ids; mass must sum to exactly 1."""

    __slots__ = ("_mass",)

    def __init__(self, mass):
        clean: dict[int, Fraction] = {}
        total = Fraction(0)
        for token, p in dict(mass).items():
            p = as_fraction(p)
            if p < 0:
                raise ValueError(f"negative mass {p} for token {token}")
            if p:
                clean[int(token)] = p
                total += p
        if total != 1:
            raise ValueError(f"mass sums to {total}, not 1")
        self._mass = clean

    def mass(self, token: int) -> Fraction:
        return self._mass.get(token, Fraction(0))

    def items(self) -> list[tuple[int, Fraction]]:
        """(token, mass) pairs with positive mass, ascending token id."""
        return sorted(self._mass.items())

    def support(self) -> frozenset[int]:
        return frozenset(self._mass)

    def cache_key(self) -> tuple:
        return tuple((t, p.numerator, p.denominator) for t, p in self.items())

    def with_escape(self, epsilon: Fraction, escape_id: int) -> "ConditionalDistribution":
        scale = 1 - epsilon
        mass = {t: p * scale for t, p in self._mass.items()}
        mass[escape_id] = mass.get(escape_id, Fraction(0)) + epsilon
        return ConditionalDistribution(mass)

    def mix(self, other: "ConditionalDistribution", alpha: Fraction) -> "ConditionalDistribution":
        """(1 - alpha) * self + alpha * other, exact."""
        alpha = as_fraction(alpha)
        if not 0 <= alpha <= 1:
            raise ValueError("mixing weight must lie in [0, 1]")
        mass: dict[int, Fraction] = {}
        for t, p in self._mass.items():
            mass[t] = (1 - alpha) * p
        for t, p in other._mass.items():
            mass[t] = mass.get(t, Fraction(0)) + alpha * p
        return ConditionalDistribution(mass)

    def __eq__(self, other):
        return isinstance(other, ConditionalDistribution) and self._mass == other._mass

    def __hash__(self):
        return hash(self.cache_key())

    def __repr__(self):
        inner = ", ".join(f"{t}: {p}" for t, p in self.items())
        return f"ConditionalDistribution({{{inner}}})"


class GenerativeModel(abc.ABC):
    """Deterministic, immutable conditional-probability source."""

    @property
    @abc.abstractmethod
    def vocabulary(self) -> Vocabulary: ...

    @abc.abstractmethod
    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        """Distribution over the next token given an END-free prefix."""

    @abc.abstractmethod
    def serialize(self) -> str: ...

    def description_length_bits(self) -> int:
        """Bit length of the canonical serialized model file."""
        return 8 * len(self._serialized().encode("utf-8"))

    def prefix_probability(self, prefix: Sequence) -> Fraction:
        """Chain-rule product of the prefix's token conditionals (END excluded)."""
        prefix = tuple(prefix)
        self.vocabulary.check_sequence(prefix)
        p = Fraction(1)
        for i, token in enumerate(prefix):
            p *= self.conditional(prefix[:i]).mass(token)
            if not p:
                return Fraction(0)
        return p

    def sequence_probability(self, seq: Sequence) -> Fraction:
        """Probability of emitting seq and then terminating."""
        seq = tuple(seq)
        p = self.prefix_probability(seq)
        if not p:
            return Fraction(0)
        return p * self.conditional(seq).mass(self.vocabulary.end_id)

    def sample(self, rng, max_len: int = 10_000) -> Sequence:
        """Draw one sequence; rng has random() in [0, 1)."""
        end_id = self.vocabulary.end_id
        out: list[int] = []
        while len(out) <= max_len:
            dist = self.conditional(tuple(out))
            u = rng.random()
            acc = 0.0
            chosen = None
            for token, p in dist.items():
                acc += float(p)
                if u < acc:
                    chosen = token
                    break
            if chosen is None:
                chosen = dist.items()[-1][0]
            if chosen == end_id:
                return tuple(out)
            if chosen >= self.vocabulary.size:
                raise SequenceError("sampled a reserved token; sample from unwrapped models")
            out.append(chosen)
        raise RuntimeError(f"sample exceeded {max_len} tokens without END")

    def _serialized(self) -> str:
        cached = getattr(self, "_serialized_text", None)
        if cached is None:
            cached = self.serialize()
            self._serialized_text = cached
        return cached


class TableModel(GenerativeModel):
    """Explicit prefix rows with a default distribution for absent prefixes."""

    def __init__(self, vocabulary: Vocabulary, entries, default: ConditionalDistribution):
        self._vocab = vocabulary
        self._entries = {}
        for prefix, dist in dict(entries).items():
            prefix = tuple(prefix)
            vocabulary.check_sequence(prefix)
            self._entries[prefix] = _as_distribution(dist, vocabulary)
        self._default = _as_distribution(default, vocabulary)

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        prefix = tuple(prefix)
        self._vocab.check_sequence(prefix)
        return self._entries.get(prefix, self._default)

    def serialize(self) -> str:
        lines = ["PLTMODEL 1", "kind table", "vocab " + " ".join(self._vocab.names)]
        for prefix in sorted(self._entries, key=lambda s: (len(s), s)):
            lines.append(_row_line("row", self._vocab, prefix, self._entries[prefix]))
        lines.append(_dist_line("default", self._vocab, self._default))
        return "\n".join(lines) + "\n"


class NgramModel(GenerativeModel):
    """Order-n counts with add-k smoothing over V plus END."""

    def __init__(self, vocabulary: Vocabulary, counts, order: int, smoothing: Fraction):
        if order < 1:
            raise ValueError("order must be >= 1")
        smoothing = as_fraction(smoothing)
        if smoothing <= 0:
            raise ValueError("smoothing must be positive")
        self._vocab = vocabulary
        self._order = order
        self._smoothing = smoothing
        self._counts: dict[Sequence, dict[int, int]] = {}
        for ctx, per_token in counts.items():
            ctx = tuple(ctx)
            if len(ctx) > order - 1:
                raise ValueError(f"context {ctx} longer than order-1")
            row = {int(t): int(n) for t, n in per_token.items() if int(n) > 0}
            if row:
                self._counts[ctx] = row
        self._cache: dict[Sequence, ConditionalDistribution] = {}

    @classmethod
    def from_corpus(cls, vocabulary: Vocabulary, corpus, order: int, smoothing) -> "NgramModel":
        counts: dict[Sequence, dict[int, int]] = {}
        for seq in corpus:
            seq = tuple(seq)
            vocabulary.check_sequence(seq)
            targets = list(seq) + [vocabulary.end_id]
            for i, token in enumerate(targets):
                ctx = tuple(seq[max(0, i - (order - 1)):i])
                row = counts.setdefault(ctx, {})
                row[token] = row.get(token, 0) + 1
        return cls(vocabulary, counts, order, smoothing)

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @property
    def order(self) -> int:
        return self._order

    def context_of(self, prefix: Sequence) -> Sequence:
        n = self._order - 1
        return tuple(prefix[len(prefix) - n:]) if n else ()

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        prefix = tuple(prefix)
        self._vocab.check_sequence(prefix)
        ctx = self.context_of(prefix)
        dist = self._cache.get(ctx)
        if dist is None:
            row = self._counts.get(ctx, {})
            k = self._smoothing
            outcomes = list(range(self._vocab.size)) + [self._vocab.end_id]
            total = sum(row.values()) + k * len(outcomes)
            dist = ConditionalDistribution(
                {t: (row.get(t, 0) + k) / total for t in outcomes}
            )
            self._cache[ctx] = dist
        return dist

    def serialize(self) -> str:
        v = self._vocab
        lines = [
            "PLTMODEL 1",
            "kind ngram",
            "vocab " + " ".join(v.names),
            f"order {self._order}",
            f"smoothing {format_rational(self._smoothing)}",
        ]
        for ctx in sorted(self._counts, key=lambda s: (len(s), s)):
            names = [v.token_name(t) for t in ctx]
            for token, n in sorted(self._counts[ctx].items()):
                parts = ["count", str(len(ctx)), *names, v.token_name(token), str(n)]
                lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


class ZipfModel(GenerativeModel):
    """Depth-1 generator: rank j carries mass proportional to j**-alpha.

    Integral exponents keep exact power-law rationals.  Other exponents are
    rounded onto a fixed denominator grid, deficit assigned to the last rank,
    which preserves the strict rank ordering and an exact unit total.
    """

    def __init__(self, items: int, alpha):
        if items < 1:
            raise ValueError("items must be >= 1")
        self._items = items
        self._alpha = as_fraction(alpha)
        if self._alpha < 0:
            raise ValueError("alpha must be >= 0")
        self._exact = zipfmath.is_integral(self._alpha)

    @property
    def items(self) -> int:
        return self._items

    @property
    def alpha(self) -> Fraction:
        return self._alpha

    @cached_property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(tuple(str(j) for j in range(1, self._items + 1)))

    @cached_property
    def _table(self) -> list[Fraction]:
        # rank probabilities, index j-1
        m, a = self._items, self._alpha
        if self._exact:
            total = zipfmath.power_partial_sum(m, a)
            return [Fraction(1, j ** int(a)) / total for j in range(1, m + 1)]
        af = float(a)
        weights = [Fraction(j ** -af) for j in range(1, m + 1)]
        total = sum(weights)
        d = ZIPF_ROUND_DENOMINATOR
        grid = [(w * d) // total for w in weights[:-1]]
        grid.append(d - sum(grid))
        return [Fraction(q, d) for q in grid]

    def probability(self, rank: int) -> Fraction:
        if not 1 <= rank <= self._items:
            raise ValueError(f"rank {rank} out of range")
        return self._table[rank - 1]

    def top_mass(self, k: int) -> float:
        """Sum of the k most probable ranks; exact ratio for integral alpha."""
        if not 1 <= k <= self._items:
            raise ValueError(f"k {k} out of range")
        if self._exact:
            a = int(self._alpha)
            nk, dk = zipfmath.power_sum_pair(k, a)
            nm, dm = zipfmath.power_sum_pair(self._items, a)
            return zipfmath.pair_ratio(nk, dk, nm, dm)
        return float(sum(self._table[:k]))

    @cached_property
    def _root(self) -> ConditionalDistribution:
        return ConditionalDistribution(dict(enumerate(self._table)))

    @cached_property
    def _leaf(self) -> ConditionalDistribution:
        return ConditionalDistribution({self.vocabulary.end_id: Fraction(1)})

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        prefix = tuple(prefix)
        self.vocabulary.check_sequence(prefix)
        return self._root if not prefix else self._leaf

    def serialize(self) -> str:
        return (
            "PLTMODEL 1\n"
            "kind zipf\n"
            f"items {self._items}\n"
            f"alpha {format_rational(self._alpha)}\n"
        )


class PolicyModel(GenerativeModel):
    """Action-sequence model from per-state weights, normalized exactly.

    States absent from the table terminate with END mass 1.
    """

    def __init__(self, vocabulary: Vocabulary, states):
        self._vocab = vocabulary
        self._weights: dict[Sequence, dict[int, Fraction]] = {}
        self._cache: dict[Sequence, ConditionalDistribution] = {}
        for state, actions in dict(states).items():
            state = tuple(state)
            vocabulary.check_sequence(state)
            row = {}
            for action, w in dict(actions).items():
                action = int(action)
                if not 0 <= action < vocabulary.size:
                    raise SequenceError(f"action id {action} out of range")
                w = as_fraction(w)
                if w < 0:
                    raise ValueError(f"negative weight {w} for action {action}")
                row[action] = w
            if sum(row.values()) == 0:
                raise ValueError(f"state {state} has all-zero weights")
            self._weights[state] = row

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @cached_property
    def _leaf(self) -> ConditionalDistribution:
        return ConditionalDistribution({self._vocab.end_id: Fraction(1)})

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        prefix = tuple(prefix)
        self._vocab.check_sequence(prefix)
        row = self._weights.get(prefix)
        if row is None:
            return self._leaf
        dist = self._cache.get(prefix)
        if dist is None:
            total = sum(row.values())
            dist = ConditionalDistribution({a: w / total for a, w in row.items() if w})
            self._cache[prefix] = dist
        return dist

    def serialize(self) -> str:
        v = self._vocab
        lines = ["PLTMODEL 1", "kind policy", "vocab " + " ".join(v.names)]
        for state in sorted(self._weights, key=lambda s: (len(s), s)):
            names = [v.token_name(t) for t in state]
            row = self._weights[state]
            weights = [format_rational(row.get(t, Fraction(0))) for t in range(v.size)]
            lines.append(" ".join(["state", str(len(state)), *names, *weights]))
        return "\n".join(lines) + "\n"


class EscapeModel(GenerativeModel):
    """Wraps a model, scaling every conditional by (1 - epsilon) and putting
    epsilon on the reserved ESCAPE symbol."""

    def __init__(self, inner: GenerativeModel, epsilon):
        epsilon = as_fraction(epsilon)
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if isinstance(inner, EscapeModel):
            raise ValueError("model is already escape-wrapped")
        self._inner = inner
        self._epsilon = epsilon
        self._cache: dict[tuple, ConditionalDistribution] = {}

    @property
    def inner(self) -> GenerativeModel:
        return self._inner

    @property
    def epsilon(self) -> Fraction:
        return self._epsilon

    @property
    def vocabulary(self) -> Vocabulary:
        return self._inner.vocabulary

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        base = self._inner.conditional(tuple(prefix))
        key = base.cache_key()
        dist = self._cache.get(key)
        if dist is None:
            dist = base.with_escape(self._epsilon, self.vocabulary.escape_id)
            self._cache[key] = dist
        return dist

    def serialize(self) -> str:
        return (
            "PLTMODEL 1\n"
            "kind escape\n"
            f"epsilon {format_rational(self._epsilon)}\n"
            + self._inner.serialize()
        )


def _as_distribution(value, vocabulary: Vocabulary) -> ConditionalDistribution:
    if not isinstance(value, ConditionalDistribution):
        value = ConditionalDistribution(value)
    for token in value.support():
        if not 0 <= token <= vocabulary.escape_id:
            raise SequenceError(f"distribution token id {token} out of range")
    return value


def _dist_line(tag: str, vocab: Vocabulary, dist: ConditionalDistribution) -> str:
    probs = [format_rational(dist.mass(t)) for t in range(vocab.size + 2)]
    return " ".join([tag, *probs])


def _row_line(tag: str, vocab: Vocabulary, prefix: Sequence, dist: ConditionalDistribution) -> str:
    names = [vocab.token_name(t) for t in prefix]
    probs = [format_rational(dist.mass(t)) for t in range(vocab.size + 2)]
    return " ".join([tag, str(len(prefix)), *names, *probs])


# ---------------------------------------------------------------------------
# factories


def table_model(vocabulary: Vocabulary, entries, default) -> TableModel:
    return TableModel(vocabulary, entries, default)


def ngram_model(vocabulary: Vocabulary, corpus, order: int, smoothing) -> NgramModel:
    return NgramModel.from_corpus(vocabulary, corpus, order, smoothing)


def zipf_model(items: int, alpha) -> ZipfModel:
    return ZipfModel(items, alpha)


def from_policy(vocabulary: Vocabulary, states) -> PolicyModel:
    return PolicyModel(vocabulary, states)


def with_escape(model: GenerativeModel, epsilon=Fraction(1, 256)) -> EscapeModel:
    return EscapeModel(model, epsilon)


def kl_at_prefix(source: GenerativeModel, reference: GenerativeModel, prefix: Sequence) -> float:
    """KL divergence in bits between next-token conditionals at one prefix.

    Raises AbsoluteContinuityError where the reference has a zero that the
    source does not.
    """
    d1 = source.conditional(tuple(prefix))
    d2 = reference.conditional(tuple(prefix))
    total = 0.0
    for token, p in d1.items():
        q = d2.mass(token)
        if not q:
            raise AbsoluteContinuityError(token)
        if p == q:
            continue
        log_ratio = (
            math.log2(p.numerator) - math.log2(p.denominator)
            - math.log2(q.numerator) + math.log2(q.denominator)
        )
        total += float(p) * log_ratio
    # Gibbs: exact value is nonnegative; trim float round-off only.
    return total if total > 0.0 else 0.0


# ---------------------------------------------------------------------------
# serialization


def save_model(model: GenerativeModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.serialize())


def load_model(path) -> GenerativeModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def parse_model(text: str) -> GenerativeModel:
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    model, rest = _parse_document(lines)
    if any(ln.strip() for ln in rest):
        raise ModelFormatError("trailing content after model document")
    return model


def _parse_document(lines: list[str]):
    if not lines or lines[0].strip() != "PLTMODEL 1":
        raise ModelFormatError('expected header "PLTMODEL 1"')
    if len(lines) < 2 or not lines[1].startswith("kind "):
        raise ModelFormatError("expected kind line")
    kind = lines[1].split(None, 1)[1].strip()
    body = lines[2:]
    if kind == "table":
        return _parse_table(body)
    if kind == "ngram":
        return _parse_ngram(body)
    if kind == "zipf":
        return _parse_zipf(body)
    if kind == "policy":
        return _parse_policy(body)
    if kind == "escape":
        return _parse_escape(body)
    raise ModelFormatError(f"unknown model kind {kind!r}")


def _take_field(lines: list[str], key: str) -> tuple[str, list[str]]:
    if not lines or not lines[0].startswith(key + " "):
        raise ModelFormatError(f"expected {key!r} line")
    return lines[0][len(key) + 1:], lines[1:]


def _parse_vocab(lines: list[str]) -> tuple[Vocabulary, list[str]]:
    raw, rest = _take_field(lines, "vocab")
    return Vocabulary(tuple(raw.split())), rest


def _parse_prefixed_tokens(parts: list[str], vocab: Vocabulary) -> tuple[Sequence, list[str]]:
    try:
        k = int(parts[0])
    except (ValueError, IndexError):
        raise ModelFormatError(f"bad prefix length in {parts!r}") from None
    names = parts[1:1 + k]
    if len(names) != k:
        raise ModelFormatError("truncated prefix")
    return tuple(vocab.token_id(n) for n in names), parts[1 + k:]


def _parse_probs(parts: list[str], vocab: Vocabulary) -> ConditionalDistribution:
    if len(parts) != vocab.size + 2:
        raise ModelFormatError(f"expected {vocab.size + 2} probabilities, got {len(parts)}")
    try:
        return ConditionalDistribution({i: parse_rational(p) for i, p in enumerate(parts)})
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def _parse_table(lines: list[str]) -> tuple[TableModel, list[str]]:
    vocab, lines = _parse_vocab(lines)
    entries = {}
    default = None
    idx = 0
    for idx, line in enumerate(lines):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "row":
            prefix, probs = _parse_prefixed_tokens(parts[1:], vocab)
            entries[prefix] = _parse_probs(probs, vocab)
        elif parts[0] == "default":
            default = _parse_probs(parts[1:], vocab)
            idx += 1
            break
        else:
            raise ModelFormatError(f"unexpected line {line!r} in table model")
    if default is None:
        raise ModelFormatError("table model missing default line")
    return TableModel(vocab, entries, default), lines[idx:]


def _parse_ngram(lines: list[str]) -> tuple[NgramModel, list[str]]:
    vocab, lines = _parse_vocab(lines)
    order_raw, lines = _take_field(lines, "order")
    smoothing_raw, lines = _take_field(lines, "smoothing")
    counts: dict[Sequence, dict[int, int]] = {}
    consumed = 0
    for line in lines:
        parts = line.split()
        if not parts:
            consumed += 1
            continue
        if parts[0] != "count":
            break
        ctx, rest = _parse_prefixed_tokens(parts[1:], vocab)
        if len(rest) != 2:
            raise ModelFormatError(f"bad count line {line!r}")
        name, n = rest
        token = vocab.end_id if name == END_NAME else vocab.token_id(name)
        counts.setdefault(ctx, {})[token] = _parse_int(n)
        consumed += 1
    try:
        model = NgramModel(vocab, counts, _parse_int(order_raw), parse_rational(smoothing_raw))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
    return model, lines[consumed:]


def _parse_zipf(lines: list[str]) -> tuple[ZipfModel, list[str]]:
    items_raw, lines = _take_field(lines, "items")
    alpha_raw, lines = _take_field(lines, "alpha")
    try:
        return ZipfModel(_parse_int(items_raw), parse_rational(alpha_raw)), lines
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def _parse_policy(lines: list[str]) -> tuple[PolicyModel, list[str]]:
    vocab, lines = _parse_vocab(lines)
    states: dict[Sequence, dict[int, Fraction]] = {}
    consumed = 0
    for line in lines:
        parts = line.split()
        if not parts:
            consumed += 1
            continue
        if parts[0] != "state":
            break
        state, weights = _parse_prefixed_tokens(parts[1:], vocab)
        if len(weights) != vocab.size:
            raise ModelFormatError(f"expected {vocab.size} weights in {line!r}")
        states[state] = {i: parse_rational(w) for i, w in enumerate(weights)}
        consumed += 1
    try:
        return PolicyModel(vocab, states), lines[consumed:]
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def _parse_escape(lines: list[str]) -> tuple[EscapeModel, list[str]]:
    eps_raw, lines = _take_field(lines, "epsilon")
    inner, rest = _parse_document(lines)
    try:
        return EscapeModel(inner, parse_rational(eps_raw)), rest
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
