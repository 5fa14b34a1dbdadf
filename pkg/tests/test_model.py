"""Vocabulary, distribution, and model-kind behavior, plus the text format."""

import math
import random
from fractions import Fraction as F

import pytest

from pltrie import (
    AbsoluteContinuityError,
    ConditionalDistribution,
    EscapeModel,
    ModelFormatError,
    NgramModel,
    SequenceError,
    TableModel,
    Vocabulary,
    VocabularyError,
    ZipfModel,
    from_policy,
    kl_at_prefix,
    load_model,
    ngram_model,
    parse_model,
    save_model,
    table_model,
    with_escape,
    zipf_model,
)
from conftest import A, B, C, ROOT_ROW


class TestVocabulary:
    def test_ids_and_names(self, ref_vocab):
        assert ref_vocab.size == 3
        assert ref_vocab.end_id == 3
        assert ref_vocab.escape_id == 4
        assert ref_vocab.token_id("A") == 0
        assert ref_vocab.token_name(2) == "C"
        assert ref_vocab.token_name(3) == "$"
        assert ref_vocab.token_name(4) == "E"

    def test_unknown_and_out_of_range(self, ref_vocab):
        with pytest.raises(VocabularyError):
            ref_vocab.token_id("Z")
        with pytest.raises(VocabularyError):
            ref_vocab.token_name(5)

    @pytest.mark.parametrize("names", [(), ("A", "A"), ("$",), ("E",), ("-",), (".",), ("a b",), ("",)])
    def test_invalid_names(self, names):
        with pytest.raises(VocabularyError):
            Vocabulary(tuple(names))

    def test_parse_tokens_spellings(self, ref_vocab):
        assert ref_vocab.parse_tokens("B A") == (B, A)
        assert ref_vocab.parse_tokens("B,A") == (B, A)
        assert ref_vocab.parse_tokens("BA") == (B, A)
        assert ref_vocab.parse_tokens("A") == (A,)
        assert ref_vocab.parse_tokens("") == ()
        with pytest.raises(VocabularyError):
            ref_vocab.parse_tokens("BZ")

    def test_parse_tokens_prefers_whole_names(self):
        vocab = Vocabulary(("ab", "a", "b"))
        assert vocab.parse_tokens("ab") == (0,)

    def test_format_tokens_round_trip(self, ref_vocab):
        assert ref_vocab.format_tokens((B, A)) == "B A"
        assert ref_vocab.parse_tokens(ref_vocab.format_tokens((C, C, A))) == (C, C, A)

    def test_check_sequence(self, ref_vocab):
        ref_vocab.check_sequence((A, B, C))
        for bad in [(3,), (4,), (-1,), ("A",)]:
            with pytest.raises(SequenceError):
                ref_vocab.check_sequence(bad)


class TestConditionalDistribution:
    def test_mass_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ConditionalDistribution({0: F(1, 2)})
        with pytest.raises(ValueError):
            ConditionalDistribution({0: F(1, 2), 1: F(2, 3)})

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            ConditionalDistribution({0: F(3, 2), 1: F(-1, 2)})

    def test_zero_mass_dropped_from_support(self):
        d = ConditionalDistribution({0: F(1), 1: F(0)})
        assert d.support() == frozenset({0})
        assert d.mass(1) == 0

    def test_items_sorted(self):
        d = ConditionalDistribution({2: F(1, 4), 0: F(1, 2), 1: F(1, 4)})
        assert [t for t, _ in d.items()] == [0, 1, 2]

    def test_mix_exact(self):
        d1 = ConditionalDistribution({0: F(1, 2), 1: F(1, 2)})
        d2 = ConditionalDistribution({1: F(1, 4), 2: F(3, 4)})
        mixed = d1.mix(d2, F(1, 3))
        assert mixed.mass(0) == F(1, 3)
        assert mixed.mass(1) == F(1, 3) + F(1, 12)
        assert mixed.mass(2) == F(1, 4)
        with pytest.raises(ValueError):
            d1.mix(d2, F(3, 2))

    def test_with_escape_exact(self):
        d = ConditionalDistribution({0: F(3, 4), 1: F(1, 4)})
        e = d.with_escape(F(1, 5), escape_id=9)
        assert e.mass(0) == F(3, 5)
        assert e.mass(1) == F(1, 5)
        assert e.mass(9) == F(1, 5)

    def test_equality_and_hash(self):
        d1 = ConditionalDistribution({0: F(1, 2), 1: F(1, 2)})
        d2 = ConditionalDistribution({1: F(1, 2), 0: F(2, 4)})
        assert d1 == d2 and hash(d1) == hash(d2)


class TestTableModel:
    def test_row_and_default_lookup(self, ref_depth2, ref_vocab):
        assert ref_depth2.conditional(()).mass(A) == F(9, 20)
        assert ref_depth2.conditional((B,)).mass(A) == F(1, 2)
        assert ref_depth2.conditional((A,)).mass(ref_vocab.end_id) == 1

    def test_prefix_and_sequence_probability(self, ref_depth1, ref_depth2):
        assert ref_depth1.prefix_probability((B,)) == F(3, 10)
        assert ref_depth1.sequence_probability((B,)) == F(3, 10)
        assert ref_depth2.sequence_probability((B, A)) == F(3, 20)
        # depth-2 row under B has no END mass, so "B" itself cannot terminate
        assert ref_depth2.sequence_probability((B,)) == 0
        assert ref_depth2.prefix_probability(()) == 1

    def test_invalid_row_token(self, ref_vocab):
        with pytest.raises(SequenceError):
            table_model(ref_vocab, {}, default={9: F(1)})

    def test_description_length_is_serialized_bits(self, ref_depth1):
        text = ref_depth1.serialize()
        assert ref_depth1.description_length_bits() == 8 * len(text.encode("utf-8"))

    def test_serialization_round_trip(self, ref_depth2):
        text = ref_depth2.serialize()
        again = parse_model(text)
        assert isinstance(again, TableModel)
        assert again.serialize() == text
        assert again.conditional((B,)).mass(C) == F(1, 5)


class TestNgramModel:
    def test_smoothed_conditional(self):
        vocab = Vocabulary(("A", "B", "C"))
        corpus = [(0, 1), (0, 1), (0, 2)]  # AB, AB, AC
        model = ngram_model(vocab, corpus, 2, 1)
        # After context A: counts B=2, C=1 over outcomes {A,B,C,END}, add-1.
        row = model.conditional((0,))
        assert row.mass(1) == F(3, 7)
        assert row.mass(2) == F(2, 7)
        assert row.mass(0) == F(1, 7)
        assert row.mass(vocab.end_id) == F(1, 7)

    def test_end_counted_at_sequence_ends(self):
        vocab = Vocabulary(("A", "B"))
        model = ngram_model(vocab, [(0,), (0,)], 2, F(1, 2))
        # context (A,): END count 2, add-1/2 over 3 outcomes -> (2+.5)/3.5
        assert model.conditional((0,)).mass(vocab.end_id) == F(5, 7)

    def test_context_truncation(self):
        vocab = Vocabulary(("A", "B"))
        model = ngram_model(vocab, [(0, 1), (1, 1)], 2, 1)
        assert model.conditional((0, 0, 0, 1)) == model.conditional((1,))

    def test_order_one_ignores_context(self):
        vocab = Vocabulary(("A", "B"))
        model = ngram_model(vocab, [(0, 1, 0)], 1, 1)
        assert model.conditional(()) == model.conditional((1, 0))

    def test_validation(self):
        vocab = Vocabulary(("A",))
        with pytest.raises(ValueError):
            NgramModel(vocab, {}, 0, 1)
        with pytest.raises(ValueError):
            NgramModel(vocab, {}, 1, 0)
        with pytest.raises(ValueError):
            NgramModel(vocab, {(0, 0): {0: 1}}, 2, 1)  # context too long

    def test_serialization_round_trip(self):
        vocab = Vocabulary(("A", "B", "C"))
        model = ngram_model(vocab, [(0, 1), (0, 1), (0, 2), ()], 2, F(1, 2))
        text = model.serialize()
        again = parse_model(text)
        assert isinstance(again, NgramModel)
        assert again.serialize() == text
        assert again.conditional((0,)).mass(1) == model.conditional((0,)).mass(1)


class TestZipfModel:
    def test_exact_rank_probabilities(self):
        model = zipf_model(10, 1)
        h10 = sum(F(1, j) for j in range(1, 11))
        assert h10 == F(7381, 2520)
        assert model.probability(1) == 1 / h10 == F(2520, 7381)
        assert model.probability(10) == F(1, 10) / h10
        assert sum(model.probability(j) for j in range(1, 11)) == 1

    def test_top_mass(self):
        model = zipf_model(10, 1)
        exact = float(sum(F(1, j) for j in (1, 2, 3)) / F(7381, 2520))
        assert math.isclose(model.top_mass(3), exact, rel_tol=1e-12)
        with pytest.raises(ValueError):
            model.top_mass(0)

    def test_alpha_zero_uniform(self):
        model = zipf_model(4, 0)
        assert model.probability(4) == F(1, 4)

    def test_non_integral_alpha_exact_unit_total(self):
        model = zipf_model(50, F(3, 2))
        probs = [model.probability(j) for j in range(1, 51)]
        assert sum(probs) == 1
        assert all(a > b for a, b in zip(probs, probs[1:]))

    def test_sequence_semantics_depth_one(self):
        model = zipf_model(3, 1)
        assert model.conditional((0,)).mass(model.vocabulary.end_id) == 1
        assert model.sequence_probability((0,)) == model.probability(1)

    def test_serialization_round_trip(self):
        model = zipf_model(7, F(6, 5))
        again = parse_model(model.serialize())
        assert isinstance(again, ZipfModel)
        assert again.serialize() == model.serialize()
        assert again.probability(3) == model.probability(3)

    def test_validation(self):
        with pytest.raises(ValueError):
            zipf_model(0, 1)
        with pytest.raises(ValueError):
            zipf_model(3, -1)


class TestPolicyModel:
    def test_normalization(self):
        vocab = Vocabulary(("left", "right"))
        model = from_policy(vocab, {(): {0: 3, 1: 1}, (0,): {0: 7, 1: 3}})
        assert model.conditional(()).mass(0) == F(3, 4)
        assert model.conditional(()).mass(1) == F(1, 4)
        assert model.conditional((0,)).mass(0) == F(7, 10)
        assert model.conditional((0,)).mass(1) == F(3, 10)

    def test_absent_state_terminates(self):
        vocab = Vocabulary(("left", "right"))
        model = from_policy(vocab, {(): {0: 1, 1: 1}})
        assert model.conditional((1,)).mass(vocab.end_id) == 1
        # absent state -> certain termination, so each one-step walk has mass 1/2
        assert model.sequence_probability((0,)) == F(1, 2)
        assert model.sequence_probability((1,)) == F(1, 2)

    def test_validation(self):
        vocab = Vocabulary(("left", "right"))
        with pytest.raises(ValueError):
            from_policy(vocab, {(): {0: 0, 1: 0}})
        with pytest.raises(ValueError):
            from_policy(vocab, {(): {0: -1, 1: 2}})
        with pytest.raises(SequenceError):
            from_policy(vocab, {(): {5: 1}})

    def test_serialization_round_trip(self):
        vocab = Vocabulary(("left", "right"))
        model = from_policy(vocab, {(): {0: 3, 1: 1}, (1,): {1: 2}})
        text = model.serialize()
        again = parse_model(text)
        assert again.serialize() == text
        assert again.conditional((1,)).mass(1) == 1


class TestEscapeModel:
    def test_scaling(self, ref_depth1, ref_vocab):
        esc = with_escape(ref_depth1, F(1, 5))
        row = esc.conditional(())
        assert row.mass(A) == F(9, 25)
        assert row.mass(B) == F(6, 25)
        assert row.mass(C) == F(1, 5)
        assert row.mass(ref_vocab.escape_id) == F(1, 5)

    def test_double_wrap_rejected(self, ref_depth1):
        esc = with_escape(ref_depth1, F(1, 256))
        with pytest.raises(ValueError):
            with_escape(esc, F(1, 256))

    def test_epsilon_bounds(self, ref_depth1):
        for bad in (0, 1, F(5, 4)):
            with pytest.raises(ValueError):
                EscapeModel(ref_depth1, bad)

    def test_serialization_round_trip(self, ref_depth2):
        esc = with_escape(ref_depth2, F(3, 7))
        text = esc.serialize()
        again = parse_model(text)
        assert isinstance(again, EscapeModel)
        assert again.epsilon == F(3, 7)
        assert again.serialize() == text


class TestSampling:
    def test_deterministic_and_in_vocabulary(self, ref_depth2):
        seqs1 = [ref_depth2.sample(random.Random(3)) for _ in range(20)]
        seqs2 = [ref_depth2.sample(random.Random(3)) for _ in range(20)]
        assert seqs1 == seqs2
        for seq in seqs1:
            ref_depth2.vocabulary.check_sequence(seq)

    def test_first_token_frequencies_track_root(self, ref_depth1):
        rng = random.Random(11)
        n = 4000
        first = [ref_depth1.sample(rng)[0] for _ in range(n)]
        assert abs(first.count(A) / n - 0.45) < 0.04
        assert abs(first.count(B) / n - 0.30) < 0.04


class TestKlAtPrefix:
    def test_reference_values(self, ref_vocab):
        m1 = table_model(ref_vocab, {}, default={A: F(1, 2), B: F(1, 2)})
        m2 = table_model(ref_vocab, {}, default={A: F(1, 4), B: F(3, 4)})
        val = kl_at_prefix(m1, m2, ())
        assert math.isclose(val, 0.5 + 0.5 * math.log2(F(2, 3)), rel_tol=1e-12)
        assert round(val, 4) == 0.2075

        m3 = table_model(ref_vocab, {}, default={A: F(1)})
        assert kl_at_prefix(m3, m1, ()) == 1.0

    def test_zero_for_identical(self, ref_depth2):
        assert kl_at_prefix(ref_depth2, ref_depth2, (B,)) == 0.0

    def test_absolute_continuity(self, ref_vocab):
        m1 = table_model(ref_vocab, {}, default={A: F(1, 2), B: F(1, 2)})
        m3 = table_model(ref_vocab, {}, default={A: F(1)})
        with pytest.raises(AbsoluteContinuityError) as err:
            kl_at_prefix(m1, m3, ())
        assert err.value.token == B


class TestTextFormat:
    def test_save_load_round_trip(self, tmp_path, ref_depth2):
        path = tmp_path / "m.pltmodel"
        save_model(ref_depth2, path)
        again = load_model(path)
        assert again.serialize() == ref_depth2.serialize()

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "NOPE 1\nkind table\n",
            "PLTMODEL 2\nkind table\n",
            "PLTMODEL 1\nkind mystery\n",
            "PLTMODEL 1\nkind table\nvocab A B\n",  # missing default
            "PLTMODEL 1\nkind table\nvocab A B\ndefault 1/2 1/2\n",  # wrong arity
            "PLTMODEL 1\nkind table\nvocab A B\ndefault 1/2 1/2 0/1 x/1\n",
            "PLTMODEL 1\nkind table\nvocab A B\nwhat is this\ndefault 1/2 1/2 0/1 0/1\n",
            "PLTMODEL 1\nkind zipf\nitems two\nalpha 1/1\n",
            "PLTMODEL 1\nkind zipf\nitems 2\nalpha 1/0\n",
            "PLTMODEL 1\nkind ngram\nvocab A\norder 1\nsmoothing 1/1\ncount 0 A\n",
            "PLTMODEL 1\nkind escape\nepsilon 1/2\n",
        ],
    )
    def test_malformed_documents(self, text):
        with pytest.raises(ModelFormatError):
            parse_model(text)

    def test_trailing_content_rejected(self, ref_depth1):
        with pytest.raises(ModelFormatError):
            parse_model(ref_depth1.serialize() + "junk\n")

    def test_mass_sum_enforced_on_parse(self):
        with pytest.raises(ModelFormatError):
            parse_model("PLTMODEL 1\nkind table\nvocab A B\ndefault 1/2 1/3 0/1 0/1\n")

    def test_canonical_form_is_stable(self, ref_depth2):
        # parse(serialize) must reproduce the exact bytes (sorted rows, n/d).
        text = ref_depth2.serialize()
        assert parse_model(text).serialize() == text
        assert text.startswith("PLTMODEL 1\nkind table\nvocab A B C\n")
