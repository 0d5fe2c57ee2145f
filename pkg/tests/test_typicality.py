"""Typical sets, local typicality, and the local-to-global inclusion check."""

import itertools
import math
from math import comb

import pytest

from infoband import (IidModel, NgramModel, Sequence, SequenceError,
                      SupportCapExceeded, TableModel, Vocabulary,
                      enumerate_support, information_content,
                      locally_typical_check, locally_typical_set, train_ngram,
                      typical_mass_growth, typical_set,
                      verify_local_global_inclusion)
from infoband.typicality import SupportTable

from conftest import coin_model


def binomial_band_oracle(p: float, length: int, eps_total: float):
    """Independent census of the coin typical set from the binomial formula."""
    s1, s0 = -math.log(p), -math.log(1 - p)
    h = length * (p * s1 + (1 - p) * s0)
    count, mass = 0, 0.0
    for heads in range(length + 1):
        info = heads * s1 + (length - heads) * s0
        if abs(info - h) <= eps_total + 1e-9:
            count += comb(length, heads)
            mass += comb(length, heads) * p ** heads * (1 - p) ** (length - heads)
    return count, mass


def uniform_binary_ngram(order: int, max_length: int) -> NgramModel:
    """All symbol conditionals exactly 0.5; termination only by the bound."""
    vocab = Vocabulary(("a", "b"))
    tokens = (0, 1, vocab.bos_id)
    counts = {}
    for ctx in itertools.product(tokens, repeat=order):
        counts[ctx] = {0: 1, 1: 1}
    return NgramModel(vocab, order, 0.0, max_length, counts)


class TestTypicalSet:
    def test_uniform_table_everything_is_typical_at_zero(self):
        model = TableModel.from_strings({"aa": 0.25, "ab": 0.25, "ba": 0.25, "bb": 0.25})
        rep = typical_set(model, 0.0, 100)
        assert rep.member_count == rep.support_size == 4
        assert rep.member_mass == pytest.approx(1.0, abs=1e-9)

    def test_coin_band_matches_binomial_oracle(self):
        rep = typical_set(IidModel.coin(0.6, 10), 0.5, 2048)
        count, mass = binomial_band_oracle(0.6, 10, 0.5)
        assert (rep.member_count, count) == (582, 582)
        assert rep.member_mass == pytest.approx(mass, abs=1e-9)
        assert abs(rep.member_mass - 0.665) <= 0.002

    def test_zero_band_keeps_only_exact_entropy_sequences(self):
        # At L=7 no heads count reaches the entropy exactly: empty set.
        rep = typical_set(IidModel.coin(0.6, 7), 0.0, 2048)
        assert rep.member_count == 0 and rep.member_mass == 0.0
        # At L=10 the heads count 6 = 0.6 * 10 hits it exactly: C(10, 6) members.
        rep10 = typical_set(IidModel.coin(0.6, 10), 0.0, 2048)
        assert rep10.member_count == comb(10, 6)

    def test_members_lie_in_band_and_masses_partition(self):
        model = coin_model(0.6, 6)
        rep = typical_set(model, 0.4, 100, include_members=True)
        for seq in rep.members:
            info = information_content(model, seq).total
            assert rep.lower - 1e-9 <= info <= rep.upper + 1e-9
        total = math.fsum(math.exp(lp) for _, lp in enumerate_support(model, 100))
        out_of_band = total - rep.member_mass
        assert rep.member_mass + out_of_band == pytest.approx(1.0, abs=1e-6)

    def test_membership_depends_only_on_histogram(self):
        model = coin_model(0.6, 8)
        rep = typical_set(model, 0.3, 300, include_members=True)
        members = {s.interior for s in rep.members}
        by_heads = {}
        for seq, _ in enumerate_support(model, 300):
            by_heads.setdefault(seq.interior.count(0), []).append(seq.interior in members)
        for heads, flags in by_heads.items():
            assert len(set(flags)) == 1, f"membership split within histogram {heads}"

    def test_cap_guard(self):
        with pytest.raises(SupportCapExceeded):
            typical_set(coin_model(0.6, 10), 0.5, 5)


class TestMassGrowth:
    def test_fair_coin_mass_is_always_one(self):
        masses = typical_mass_growth(lambda L: IidModel.coin(0.5, L), 0.01, [3, 6, 10])
        assert all(m == pytest.approx(1.0, abs=1e-9) for m in masses.values())

    def test_biased_coin_mass_grows(self):
        masses = typical_mass_growth(lambda L: IidModel.coin(0.6, L), 0.05, [5, 12])
        oracle5 = binomial_band_oracle(0.6, 5, 0.25)[1]
        assert masses[5] == pytest.approx(oracle5, abs=1e-9)
        assert masses[12] > masses[5]

    def test_band_covering_both_surprisals_gives_mass_one(self):
        # eps of 0.25 nats/symbol exceeds both symbol deviations from H1.
        masses = typical_mass_growth(lambda L: IidModel.coin(0.6, L), 0.25, [4, 9])
        assert all(m == pytest.approx(1.0, abs=1e-9) for m in masses.values())


class TestLocallyTypical:
    def test_uniform_iid_always_locally_typical(self):
        model = IidModel(Vocabulary(("a", "b")), (0.5, 0.5), 5)
        for seq, _ in enumerate_support(model, 100):
            for order in (1, 2, 5):
                res = locally_typical_check(model, seq, order, 0.0, 100)
                assert res.locally_typical

    def test_biased_coin_narrow_band_has_no_locally_typical_sequence(self):
        model = coin_model(0.6, 6)
        table = SupportTable(model, 100)
        for seq, _ in enumerate_support(model, 100):
            res = locally_typical_check(model, seq, 1, 0.1, 100, table=table)
            assert not res.locally_typical
        assert locally_typical_set(model, 1, 0.1, 100) == []

    def test_biased_coin_wide_band_everything_locally_typical(self):
        model = coin_model(0.6, 6)
        assert len(locally_typical_set(model, 1, 0.25, 100)) == 64

    def test_window_fields_are_consistent(self):
        model = coin_model(0.6, 5)
        y = Sequence.from_text("HHTHT", model.vocabulary)
        res = locally_typical_check(model, y, 2, 0.2, 100)
        assert len(res.windows) == 4
        for w in res.windows:
            expected = abs(-math.log(w.marginal_prob) - w.window_entropy) <= 2 * 0.2 + 1e-9
            assert w.in_band == expected
        assert res.locally_typical == all(w.in_band for w in res.windows)

    def test_full_length_window_reduces_to_global_membership(self):
        model = coin_model(0.6, 5)
        eps_total = 0.7
        rep = typical_set(model, eps_total, 100, include_members=True)
        members = {s.interior for s in rep.members}
        table = SupportTable(model, 100)
        for seq, _ in enumerate_support(model, 100):
            res = locally_typical_check(model, seq, 5, eps_total / 5, 100, table=table)
            assert res.locally_typical == (seq.interior in members)

    def test_order_beyond_interior_rejected(self):
        model = coin_model(0.6, 3)
        y = Sequence.from_text("HT", model.vocabulary)
        with pytest.raises(SequenceError):
            locally_typical_check(model, y, 3, 0.1, 100)


class TestInclusion:
    def test_uniform_conditionals_pass_vacuously_tight(self):
        for order in (1, 2):
            model = uniform_binary_ngram(order, 6)
            rep = verify_local_global_inclusion(model, 6, 0.2, 1000)
            assert rep.passed
            assert rep.locally_typical_count > 0
            # Every sequence has information exactly equal to the entropy.
            assert rep.empirical_global_tolerance == pytest.approx(0.0, abs=1e-9)

    def test_trained_bigram_models_pass_with_reported_tolerance(self):
        corpora = [
            ["abab", "abba", "baab", "bbab"],
            ["aaab", "aabb", "abbb", "bbba"],
        ]
        for corpus in corpora:
            model = train_ngram(corpus, 2, 0.1, 8)
            rep = verify_local_global_inclusion(model, 8, 0.25, 100_000)
            assert rep.passed
            assert rep.counterexample is None
            if rep.locally_typical_count:
                assert rep.empirical_global_tolerance is not None
                assert rep.empirical_global_tolerance >= 0.0

    def test_biased_coin_shows_strict_converse(self):
        # Sequences inside the global band exist while the locally typical
        # set at order 1 is empty: local typicality is strictly stronger.
        length, eps = 12, 0.1
        model = IidModel.coin(0.6, length)
        globally = typical_set(model, eps * length, 2 ** (length + 1))
        assert globally.member_count > 0
        assert locally_typical_set(model, 1, eps, 2 ** (length + 1)) == []

    def test_requires_ngram_model(self):
        with pytest.raises(TypeError):
            verify_local_global_inclusion(coin_model(0.6, 4), 4, 0.1, 100)
