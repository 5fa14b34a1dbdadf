"""Prefix-trie materialization, queries, updates, and the similarity measure."""

import math
from fractions import Fraction as F

import pytest

from pltrie import (
    Plt,
    PltError,
    SequenceError,
    longest_common_prefix,
    materialize,
    with_escape,
)
from conftest import A, B, C, surprisal


class TestMaterialize:
    def test_threshold_prunes_second_level(self, ref_uniform_default):
        plt = materialize(ref_uniform_default, 2, F(1, 5))
        assert [p for p, _ in plt.nodes()] == [(), (A,), (B,), (C,)]

    def test_threshold_boundary_is_inclusive(self, ref_root_default):
        plt = materialize(ref_root_default, 1, F(1, 4))
        assert [p for p, _ in plt.nodes()] == [(), (A,), (B,), (C,)]
        plt = materialize(ref_root_default, 1, F(251, 1000))
        assert [p for p, _ in plt.nodes()] == [(), (A,), (B,)]

    def test_stored_products_are_exact(self, ref_root_default, ref_depth2):
        plt = materialize(ref_root_default, 2)
        assert plt.node((C, C)).prefix_probability == F(1, 16)
        plt2 = materialize(ref_depth2, 2)
        assert plt2.node((B, A)).prefix_probability == F(3, 20)

    def test_terminating_rows_get_no_children(self, ref_depth2):
        plt = materialize(ref_depth2, 2)
        assert [p for p, _ in plt.nodes()] == [
            (), (A,), (B,), (C,), (B, A), (B, B), (B, C)]

    def test_reserved_ids_never_become_edges(self, ref_depth1):
        plt = materialize(with_escape(ref_depth1, F(1, 5)), 1)
        assert [p for p, _ in plt.nodes()] == [(), (A,), (B,), (C,)]
        assert plt.node((A,)).prefix_probability == F(9, 25)

    def test_validation(self, ref_depth1):
        with pytest.raises(ValueError):
            materialize(ref_depth1, -1)
        with pytest.raises(ValueError):
            materialize(ref_depth1, 1, 2)

    def test_depth_zero_is_root_only(self, ref_depth1):
        plt = materialize(ref_depth1, 0)
        assert [p for p, _ in plt.nodes()] == [()]


class TestPrefixProbability:
    def test_no_materialization_needed(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.prefix_probability(()) == 1
        assert plt.prefix_probability((B,)) == F(3, 10)
        assert plt.prefix_probability((B, A)) == F(3, 20)

    def test_zero_beyond_terminating_row(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.prefix_probability((A, A)) == 0
        assert plt.prefix_probability((A, A, A)) == 0

    def test_queries_continue_past_frontier(self, ref_root_default):
        plt = materialize(ref_root_default, 1)
        assert plt.prefix_probability((C, C, C)) == F(1, 64)

    def test_reserved_ids_rejected(self, ref_depth1):
        plt = Plt(ref_depth1)
        with pytest.raises(SequenceError):
            plt.prefix_probability((3,))

    def test_node_lookup(self, ref_depth2):
        plt = materialize(ref_depth2, 2)
        assert plt.node((B, A)) is not None
        assert plt.node((A, A)) is None
        assert plt.node(()) is plt.root


class TestUpdate:
    def test_mixing_is_exact(self, ref_depth2):
        plt = Plt(ref_depth2)
        plt.update((B,), {A: F(1)}, F(1, 2))
        row = plt.conditional((B,))
        assert row.mass(A) == F(3, 4)
        assert row.mass(B) == F(3, 20)
        assert row.mass(C) == F(1, 10)
        # other prefixes untouched
        assert plt.conditional(()).mass(A) == F(9, 20)

    def test_stored_products_refresh_lazily(self, ref_depth2):
        plt = materialize(ref_depth2, 2)
        assert plt.node((B, A)).prefix_probability == F(3, 20)
        plt.update((B,), {A: F(1)}, F(1, 2))
        assert plt.prefix_probability((B, A)) == F(3, 10) * F(3, 4)
        assert plt.node((B, A)).prefix_probability == F(9, 40)

    def test_root_update_propagates(self, ref_root_default):
        plt = materialize(ref_root_default, 2)
        plt.update((), {C: F(1)}, 1)
        assert plt.prefix_probability((C,)) == 1
        assert plt.prefix_probability((C, C)) == F(1, 4)
        assert plt.prefix_probability((A,)) == 0

    def test_alpha_zero_is_identity(self, ref_depth1):
        plt = Plt(ref_depth1)
        before = plt.conditional(())
        plt.update((), {A: F(1)}, 0)
        assert plt.conditional(()) == before

    def test_updates_compose(self, ref_uniform_default):
        plt = Plt(ref_uniform_default)
        plt.update((), {A: F(1)}, F(1, 2))  # {A: 2/3, B: 1/6, C: 1/6}
        plt.update((), {B: F(1)}, F(1, 2))  # halve again, add 1/2 on B
        row = plt.conditional(())
        assert row.mass(A) == F(1, 3)
        assert row.mass(B) == F(7, 12)
        assert row.mass(C) == F(1, 12)

    def test_validation(self, ref_depth1):
        plt = Plt(ref_depth1)
        with pytest.raises(ValueError):
            plt.update((), {A: F(1)}, 2)
        with pytest.raises(ValueError):
            plt.update((), {A: F(1)}, F(-1, 2))
        with pytest.raises(SequenceError):
            plt.update((3,), {A: F(1)}, F(1, 2))
        with pytest.raises(ValueError):
            plt.update((), {A: F(1, 2)}, F(1, 2))  # not a distribution


class TestVisit:
    def test_counts_along_materialized_path(self, ref_depth2):
        plt = materialize(ref_depth2, 2)
        plt.visit((B, A))
        plt.visit((B,))
        assert plt.root.visit_count == 2
        assert plt.node((B,)).visit_count == 2
        assert plt.node((B, A)).visit_count == 1
        assert plt.node((A,)).visit_count == 0

    def test_stops_at_frontier(self, ref_root_default):
        plt = materialize(ref_root_default, 1)
        plt.visit((C, C, C))
        assert plt.root.visit_count == 1
        assert plt.node((C,)).visit_count == 1

    def test_unmaterialized_trie(self, ref_depth1):
        plt = Plt(ref_depth1)
        plt.visit((A, B))
        assert plt.root.visit_count == 1


class TestPrefixInformation:
    def test_self_distance_is_own_surprisal(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.prefix_information((B,), (B,)) == pytest.approx(surprisal(F(3, 10)))
        assert plt.prefix_information((B, A), (B, A)) == pytest.approx(surprisal(F(3, 20)))

    def test_shared_prefix_and_symmetry(self, ref_depth2):
        plt = Plt(ref_depth2)
        d = plt.prefix_information((B, A), (B, C))
        assert d == pytest.approx(surprisal(F(3, 10)))
        assert d == plt.prefix_information((B, C), (B, A))

    def test_disjoint_sequences_share_the_root(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.prefix_information((A,), (B,)) == 0.0

    def test_zero_probability_prefix_is_infinite(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.prefix_information((A, A), (A, A)) == math.inf

    def test_respects_updates(self, ref_depth1):
        plt = Plt(ref_depth1)
        plt.update((), {B: F(1)}, 1)
        assert plt.prefix_information((B,), (B,)) == 0.0


class TestNearestCovered:
    def test_prefers_longer_shared_prefix(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.nearest_covered([(A,), (B, B)], (B, B)) == (B, B)

    def test_probability_breaks_length_ties(self, ref_depth2):
        plt = Plt(ref_depth2)
        # both share only (B,); P(BA)=3/20 beats P(BB)=9/100
        assert plt.nearest_covered([(B, B), (B, A)], (B, C)) == (B, A)
        assert plt.nearest_covered([(B, A), (B, B)], (B, C)) == (B, A)

    def test_lexicographic_final_tie_break(self, ref_uniform_default):
        plt = Plt(ref_uniform_default)
        assert plt.nearest_covered([(C,), (B,)], (A,)) == (B,)

    def test_member_maps_to_itself(self, ref_depth2):
        plt = Plt(ref_depth2)
        assert plt.nearest_covered([(B, A), (C,)], (B, A)) == (B, A)

    def test_empty_candidates(self, ref_depth2):
        with pytest.raises(PltError):
            Plt(ref_depth2).nearest_covered([], (B,))


class TestDump:
    def test_golden_text(self, ref_depth2):
        plt = materialize(ref_depth2, 2)
        plt.visit((B, A))
        assert plt.dump() == (
            "-\t1/1\t1\n"
            "A\t9/20\t0\n"
            "B\t3/10\t1\n"
            "C\t1/4\t0\n"
            "B.A\t3/20\t1\n"
            "B.B\t9/100\t0\n"
            "B.C\t3/50\t0\n"
        )

    def test_dump_reflects_updates(self, ref_depth1):
        plt = materialize(ref_depth1, 1)
        plt.update((), {A: F(1)}, 1)
        assert plt.dump() == (
            "-\t1/1\t0\n"
            "A\t1/1\t0\n"
            "B\t0/1\t0\n"
            "C\t0/1\t0\n"
        )


class TestLongestCommonPrefix:
    def test_cases(self):
        assert longest_common_prefix((A, B, C), (A, B)) == (A, B)
        assert longest_common_prefix((A,), (B,)) == ()
        assert longest_common_prefix((), (A,)) == ()
        assert longest_common_prefix((C, A), (C, B)) == (C,)
