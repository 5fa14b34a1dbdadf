"""Shared fixtures: reference models, random corpora, and the acceptance log.

The reference table models encode a three-token language (A, B, C) used by
most golden-value tests:

* ``ref_depth1`` gives the root distribution and terminates every length-1
  prefix (default row is all END).
* ``ref_depth2`` adds an explicit continuation row under B, whose support
  excludes END, so "B" itself is uncodable there but "BA" etc. are.
* ``ref_uniform_default`` and ``ref_root_default`` are the materialization
  fixtures: every row uniform, and every row equal to the root distribution.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from pltrie import (
    Vocabulary,
    ngram_model,
    table_model,
)

# Collected by the acceptance tests; printed in the terminal summary so the
# one-line-per-criterion report is visible even with captured output.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


F = Fraction

A, B, C = 0, 1, 2

ROOT_ROW = {A: F(9, 20), B: F(3, 10), C: F(1, 4)}
B_ROW = {A: F(1, 2), B: F(3, 10), C: F(1, 5)}


@pytest.fixture(scope="session")
def ref_vocab():
    return Vocabulary(("A", "B", "C"))


@pytest.fixture(scope="session")
def ref_depth1(ref_vocab):
    end_row = {ref_vocab.end_id: F(1)}
    return table_model(ref_vocab, {(): ROOT_ROW}, default=end_row)


@pytest.fixture(scope="session")
def ref_depth2(ref_vocab):
    end_row = {ref_vocab.end_id: F(1)}
    return table_model(ref_vocab, {(): ROOT_ROW, (B,): B_ROW}, default=end_row)


@pytest.fixture(scope="session")
def ref_uniform_default(ref_vocab):
    uniform = {A: F(1, 3), B: F(1, 3), C: F(1, 3)}
    return table_model(ref_vocab, {}, default=uniform)


@pytest.fixture(scope="session")
def ref_root_default(ref_vocab):
    return table_model(ref_vocab, {}, default=ROOT_ROW)


def random_table_model(rng: random.Random):
    """Random small table model; every row keeps END mass positive so all
    sequences terminate and are codable."""
    size = rng.randint(2, 5)
    vocab = Vocabulary(tuple("tuvwxyz"[:size]))

    def row():
        weights = [rng.randint(1, 20) for _ in range(size)] + [rng.randint(2, 20)]
        total = sum(weights)
        ids = [*range(size), vocab.end_id]
        return {t: F(w, total) for t, w in zip(ids, weights)}

    entries = {(): row()}
    for _ in range(rng.randint(0, 6)):
        depth = rng.randint(1, 2)
        entries[tuple(rng.randrange(size) for _ in range(depth))] = row()
    return table_model(vocab, entries, row())


@pytest.fixture(scope="session")
def random_corpus():
    """100 random table models with 100 sampled sequences each."""
    rng = random.Random(97)
    models = [random_table_model(rng) for _ in range(100)]
    return [(m, [m.sample(rng) for _ in range(100)]) for m in models]


NGRAM_TRAIN_LINES = (
    "a b c", "a b c d", "a b", "b c d", "b c", "c d", "d a b",
    "a", "d", "c c d", "b", "a b d", "d a", "c", "a b c c",
)


def surprisal(p: Fraction) -> float:
    """-log2 of an exact probability, safe for huge numerators/denominators."""
    return math.log2(p.denominator) - math.log2(p.numerator)


@pytest.fixture(scope="session")
def ngram_fixture():
    """Order-2 model plus 50,000 sequences sampled from it and their
    empirical cross-entropy (END term included), shared by the expected-length
    and matched-model acceptance criteria."""
    vocab = Vocabulary(("a", "b", "c", "d"))
    train = [tuple(vocab.token_id(t) for t in ln.split()) for ln in NGRAM_TRAIN_LINES]
    model = ngram_model(vocab, train, 2, 1)
    rng = random.Random(41)
    samples = [model.sample(rng) for _ in range(50_000)]
    entropy = sum(surprisal(model.sequence_probability(s)) for s in samples) / len(samples)
    return model, samples, entropy
