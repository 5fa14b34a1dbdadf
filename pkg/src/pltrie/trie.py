"""Prefix trie materialized over a generative model.

Nodes store the exact probability that the model emits their prefix (END
excluded); edges correspond to vocabulary tokens only, since END and ESCAPE
never extend a prefix.  Queries fall back to the model beyond the materialized
frontier, so probability reads never require prior materialization.

Local distribution overrides installed by update() supersede the model at
their prefix; stored node products are refreshed lazily on the next read.
Concurrency: one writer or any number of readers, not both.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import PltError
from .model import (
    ConditionalDistribution,
    GenerativeModel,
    Sequence,
    as_fraction,
    format_rational,
)


class PltNode:
    """One materialized prefix: stored probability, children, visit count."""

    __slots__ = ("prefix", "prefix_probability", "children", "visit_count", "_version")

    def __init__(self, prefix: Sequence, prefix_probability: Fraction, version: int):
        self.prefix = prefix
        self.prefix_probability = prefix_probability
        self.children: dict[int, PltNode] = {}
        self.visit_count = 0
        self._version = version


class Plt:
    """Probability trie over a model; build with materialize()."""

    def __init__(self, model: GenerativeModel):
        self._model = model
        self._overrides: dict[Sequence, ConditionalDistribution] = {}
        self._version = 0
        self._root = PltNode((), Fraction(1), 0)

    @property
    def model(self) -> GenerativeModel:
        return self._model

    @property
    def root(self) -> PltNode:
        return self._root

    def conditional(self, prefix: Sequence) -> ConditionalDistribution:
        """Next-token distribution at prefix, honoring installed overrides."""
        prefix = tuple(prefix)
        override = self._overrides.get(prefix)
        return override if override is not None else self._model.conditional(prefix)

    def prefix_probability(self, prefix: Sequence) -> Fraction:
        """Exact chain-rule probability of emitting prefix (END excluded)."""
        prefix = tuple(prefix)
        self._model.vocabulary.check_sequence(prefix)
        node = self._root
        value = Fraction(1)
        for pos, token in enumerate(prefix):
            child = node.children.get(token) if node is not None else None
            if child is not None:
                if child._version != self._version:
                    child.prefix_probability = value * self.conditional(prefix[:pos]).mass(token)
                    child._version = self._version
                value = child.prefix_probability
                node = child
            else:
                value = value * self.conditional(prefix[:pos]).mass(token)
                node = None
            if not value:
                return Fraction(0)
        return value

    def node(self, prefix: Sequence) -> PltNode | None:
        node = self._root
        for token in tuple(prefix):
            node = node.children.get(token)
            if node is None:
                return None
        return node

    def nodes(self):
        """(prefix, node) pairs in depth-then-lexicographic order."""
        level = [self._root]
        while level:
            nxt = []
            for node in level:
                yield node.prefix, node
                for token in sorted(node.children):
                    nxt.append(node.children[token])
            level = nxt

    def visit(self, prefix: Sequence) -> None:
        """Record one traversal: bump counts along the materialized path."""
        node = self._root
        node.visit_count += 1
        for token in tuple(prefix):
            node = node.children.get(token)
            if node is None:
                return
            node.visit_count += 1

    def update(self, prefix: Sequence, observed, alpha) -> None:
        """Blend the conditional at prefix toward an observed distribution.

        New conditional is (1 - alpha) * current + alpha * observed, exact;
        stored products below prefix are refreshed on their next read.
        """
        prefix = tuple(prefix)
        self._model.vocabulary.check_sequence(prefix)
        alpha = as_fraction(alpha)
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if not isinstance(observed, ConditionalDistribution):
            observed = ConditionalDistribution(observed)
        self._overrides[prefix] = self.conditional(prefix).mix(observed, alpha)
        self._version += 1

    def prefix_information(self, seq_a: Sequence, seq_b: Sequence) -> float:
        """Bits of surprisal of the longest common prefix of the two sequences.

        Note d(s, s) equals the surprisal of s itself, not zero, and the
        triangle-style bound takes the min form: d(a, c) >= min(d(a, b), d(b, c)).
        """
        meet = longest_common_prefix(seq_a, seq_b)
        p = self.prefix_probability(meet)
        if not p:
            return math.inf
        return math.log2(p.denominator) - math.log2(p.numerator)

    def nearest_covered(self, covered, seq: Sequence) -> Sequence:
        """Representative sharing the longest prefix with seq.

        Ties prefer the candidate with larger prefix probability, then the
        lexicographically smallest candidate.
        """
        best = None
        best_key = None
        for cand in covered:
            cand = tuple(cand)
            key = (len(longest_common_prefix(cand, seq)), self.prefix_probability(cand))
            if best is None or key > best_key or (key == best_key and cand < best):
                best, best_key = cand, key
        if best is None:
            raise PltError("no covered representatives to choose from")
        return best

    def dump(self) -> str:
        """Diffable text dump: prefix, probability, visit count per line."""
        vocab = self._model.vocabulary
        lines = []
        for prefix, node in self.nodes():
            shown = ".".join(vocab.token_name(t) for t in prefix) if prefix else "-"
            value = self.prefix_probability(prefix)
            lines.append(f"{shown}\t{format_rational(value)}\t{node.visit_count}")
        return "\n".join(lines) + "\n"


def materialize(model: GenerativeModel, max_depth: int, prune_threshold=0) -> Plt:
    """Expand every prefix whose probability reaches prune_threshold, to max_depth."""
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    threshold = as_fraction(prune_threshold)
    if not 0 <= threshold <= 1:
        raise ValueError("prune_threshold must lie in [0, 1]")
    plt = Plt(model)
    size = model.vocabulary.size
    frontier = [plt.root]
    for _ in range(max_depth):
        nxt = []
        for node in frontier:
            dist = model.conditional(node.prefix)
            for token, mass in dist.items():
                if token >= size:
                    continue
                value = node.prefix_probability * mass
                if value >= threshold:
                    child = PltNode(node.prefix + (token,), value, 0)
                    node.children[token] = child
                    nxt.append(child)
        frontier = nxt
    return plt


def longest_common_prefix(seq_a: Sequence, seq_b: Sequence) -> Sequence:
    seq_a, seq_b = tuple(seq_a), tuple(seq_b)
    n = 0
    for x, y in zip(seq_a, seq_b):
        if x != y:
            break
        n += 1
    return seq_a[:n]
