"""Decoding strategies: exact examples, reduction identities, reproducibility."""

import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from infoband import (DecodeConfig, IidModel, Sequence, TableModel, Vocabulary,
                      ancestral_sample, beam_search, decode, decode_one,
                      diverse_beam_search, enumerate_support, exact_entropy,
                      greedy_decode, mbr_decode, nucleus_sample,
                      sequence_log_prob, top_k_sample, train_ngram,
                      truncate_nucleus, truncate_top_k, utility_ngram_overlap)

from conftest import coin_model, degenerate_model, enumerable_model_suite


def four_symbol_model(length: int = 1) -> IidModel:
    return IidModel(Vocabulary(("a", "b", "c", "d")), (0.5, 0.3, 0.15, 0.05), length)


def brute_force_ranking(model, cap=5000):
    seqs = list(enumerate_support(model, cap))
    return sorted(seqs, key=lambda e: (-e[1], e[0].tokens))


class TestGreedy:
    def test_degenerate_model(self):
        cand = greedy_decode(degenerate_model())
        assert cand.sequence.text(degenerate_model().vocabulary) == "a"
        assert cand.log_prob == 0.0

    def test_coin_picks_heads_every_step(self):
        model = coin_model(0.6, 3)
        cand = greedy_decode(model)
        assert cand.sequence.text(model.vocabulary) == "HHH"
        assert cand.log_prob == pytest.approx(3 * math.log(0.6), abs=1e-12)

    def test_exact_tie_breaks_to_lower_index(self):
        model = IidModel(Vocabulary(("a", "b")), (0.5, 0.5), 2)
        cand = greedy_decode(model)
        assert cand.sequence.text(model.vocabulary) == "aa"


class TestBeam:
    def test_width_one_equals_greedy_everywhere(self):
        for name, model in enumerable_model_suite():
            assert beam_search(model, 1)[0] == greedy_decode(model), name

    def test_exhaustive_beam_finds_the_mode(self):
        model = coin_model(0.6, 3)
        best = beam_search(model, 8)[0]
        oracle = brute_force_ranking(model)[0]
        assert best.sequence == oracle[0]
        assert best.log_prob == pytest.approx(3 * math.log(0.6), abs=1e-12)

    def test_wide_beam_matches_brute_force_ordering(self):
        for name, model in enumerable_model_suite():
            oracle = brute_force_ranking(model)
            got = beam_search(model, len(oracle))
            assert [c.sequence for c in got] == [s for s, _ in oracle], name
            for cand, (_, lp) in zip(got, oracle):
                assert cand.log_prob == pytest.approx(lp, abs=1e-9)

    def test_candidates_rescore_exactly(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        for cand in beam_search(model, 5):
            assert cand.log_prob == pytest.approx(
                sequence_log_prob(model, cand.sequence), abs=1e-9)


class TestDiverseBeam:
    def test_single_group_equals_beam(self):
        for name, model in enumerable_model_suite():
            for k in (1, 2, 4):
                assert diverse_beam_search(model, k, 1, 0.7) == beam_search(model, k), name

    def test_zero_penalty_fully_grouped_returns_greedy_everywhere(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        greedy = greedy_decode(model)
        cands = diverse_beam_search(model, 3, 3, 0.0)
        assert all(c == greedy for c in cands)

    def test_second_group_diverges_at_step_one(self):
        # ln 0.4 > ln 0.6 - 0.7, so the penalized second group flips symbol.
        model = coin_model(0.6, 3)
        cands = diverse_beam_search(model, 2, 2, 0.7)
        texts = [c.sequence.text(model.vocabulary) for c in cands]
        assert texts[0][0] == "H" and texts[1][0] == "T"

    def test_group_count_must_divide_width(self):
        with pytest.raises(ValueError):
            diverse_beam_search(coin_model(), 5, 2, 0.7)


class TestSamplers:
    def test_degenerate_model_any_seed(self):
        model = degenerate_model()
        for seed in (0, 1, 99):
            assert ancestral_sample(model, seed).sequence.text(model.vocabulary) == "a"

    def test_ancestral_frequency_matches_binomial_band(self):
        model = IidModel.coin(0.6, 1)
        heads = sum(ancestral_sample(model, seed).sequence.interior == (0,)
                    for seed in range(10_000))
        assert abs(heads / 10_000 - 0.6) <= 0.015  # 3-sigma binomial bound

    def test_ancestral_mean_information_near_entropy(self):
        model = coin_model(0.6, 3)
        h, sigma = exact_entropy(model, 100)
        values = [-ancestral_sample(model, seed).log_prob for seed in range(10_000)]
        assert abs(np.mean(values) - h) <= 3 * sigma / math.sqrt(len(values))

    def test_top_k_one_equals_greedy(self):
        for name, model in enumerable_model_suite():
            for seed in (0, 7):
                assert top_k_sample(model, 1, seed) == greedy_decode(model), name

    def test_top_k_truncation_values(self):
        d = np.array([0.5, 0.3, 0.15, 0.05, 0.0])
        assert np.allclose(truncate_top_k(d, 2), [0.625, 0.375, 0, 0, 0], atol=1e-12)

    def test_top_k_two_samples_only_top_tokens(self):
        model = four_symbol_model()
        counts = {0: 0, 1: 0}
        for seed in range(3000):
            tok = top_k_sample(model, 2, seed).sequence.interior[0]
            assert tok in (0, 1)
            counts[tok] += 1
        # 3-sigma band around 0.625 over 3000 draws.
        assert abs(counts[0] / 3000 - 0.625) <= 3 * math.sqrt(0.625 * 0.375 / 3000)

    def test_full_top_k_matches_conditional_chi_square(self):
        model = four_symbol_model()
        n = 10_000
        observed = np.zeros(4)
        for seed in range(n):
            observed[top_k_sample(model, 5, seed).sequence.interior[0]] += 1
        expected = np.array([0.5, 0.3, 0.15, 0.05]) * n
        assert scipy_stats.chisquare(observed, expected).pvalue > 0.01

    def test_nucleus_truncation_values(self):
        d = np.array([0.5, 0.3, 0.15, 0.05, 0.0])
        assert np.allclose(truncate_nucleus(d, 0.85),
                           [0.5 / 0.95, 0.3 / 0.95, 0.15 / 0.95, 0, 0], atol=1e-12)

    def test_nucleus_full_mass_matches_conditional_chi_square(self):
        model = four_symbol_model()
        n = 10_000
        observed = np.zeros(4)
        for seed in range(n):
            observed[nucleus_sample(model, 1.0, seed).sequence.interior[0]] += 1
        expected = np.array([0.5, 0.3, 0.15, 0.05]) * n
        assert scipy_stats.chisquare(observed, expected).pvalue > 0.01

    def test_nucleus_below_max_probability_is_greedy(self):
        model = four_symbol_model(length=3)
        for seed in (0, 3, 11):
            assert nucleus_sample(model, 0.4, seed) == greedy_decode(model)

    def test_stochastic_decoders_bit_reproducible(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        for cfg in (DecodeConfig("ancestral", seed=3),
                    DecodeConfig("top_k", k=2, seed=3),
                    DecodeConfig("nucleus", top_p=0.8, seed=3),
                    DecodeConfig("mbr", mbr_samples=8, seed=3)):
            assert decode(model, cfg) == decode(model, cfg)

    def test_sampled_candidates_rescore_exactly(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        for seed in range(20):
            for cand in (ancestral_sample(model, seed),
                         top_k_sample(model, 2, seed),
                         nucleus_sample(model, 0.9, seed)):
                assert cand.log_prob == pytest.approx(
                    sequence_log_prob(model, cand.sequence), abs=1e-9)


class TestMbr:
    def test_majority_sample_wins_under_exact_match(self):
        # Seed 0 draws three 'A' and one 'B' from the 0.75/0.25 table.
        model = TableModel.from_strings({"A": 0.75, "B": 0.25})
        exact = lambda a, b: float(a.tokens == b.tokens)
        cand = mbr_decode(model, 4, seed=0, utility=exact)
        assert cand.sequence.text(model.vocabulary) == "A"

    def test_single_sample_returns_itself(self):
        model = coin_model(0.6, 3)
        cand = mbr_decode(model, 1, seed=5)
        rng_sample = ancestral_sample(model, 5)
        assert cand == rng_sample

    def test_constant_utility_ties_break_by_log_prob(self):
        model = TableModel.from_strings({"A": 0.75, "B": 0.25})
        b_seq = Sequence.from_text("B", model.vocabulary)
        cand = mbr_decode(model, 4, seed=0, utility=lambda a, b: 1.0,
                          extra_candidates=[b_seq])
        assert cand.sequence.text(model.vocabulary) == "A"

    def test_extra_candidates_join_but_do_not_displace_consensus(self):
        # Seed 176 draws four 'B' samples; 'A' enters only via the extras
        # and loses under exact match despite its higher probability.
        model = TableModel.from_strings({"A": 0.75, "B": 0.25})
        a_seq = Sequence.from_text("A", model.vocabulary)
        exact = lambda a, b: float(a.tokens == b.tokens)
        cand = mbr_decode(model, 4, seed=176, utility=exact,
                          extra_candidates=[a_seq])
        assert cand.sequence.text(model.vocabulary) == "B"
        # With a constant utility the extra wins the log-probability tie-break.
        tied = mbr_decode(model, 4, seed=176, utility=lambda a, b: 1.0,
                          extra_candidates=[a_seq])
        assert tied.sequence.text(model.vocabulary) == "A"

    def test_mbr_candidates_rescore_exactly(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        for seed in range(10):
            cand = mbr_decode(model, 6, seed=seed)
            assert cand.log_prob == pytest.approx(
                sequence_log_prob(model, cand.sequence), abs=1e-9)

    def test_diverse_beam_candidates_rescore_exactly(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        for cand in diverse_beam_search(model, 4, 2, 0.7):
            assert cand.log_prob == pytest.approx(
                sequence_log_prob(model, cand.sequence), abs=1e-9)


class TestUtility:
    def test_identical_non_empty(self):
        vocab = Vocabulary(("a", "b"))
        a = Sequence.from_text("abab", vocab)
        assert utility_ngram_overlap(a, a, 2) == 1.0

    def test_disjoint_symbols(self):
        vocab = Vocabulary(("a", "b", "c", "d"))
        a = Sequence.from_text("ab", vocab)
        b = Sequence.from_text("cd", vocab)
        assert utility_ngram_overlap(a, b, 1) == 0.0

    def test_clipped_unigram_precision(self):
        vocab = Vocabulary(("a", "b"))
        a = Sequence.from_text("aab", vocab)
        b = Sequence.from_text("ab", vocab)
        assert utility_ngram_overlap(a, b, 1) == pytest.approx(2 / 3, abs=1e-12)

    def test_empty_interiors(self):
        vocab = Vocabulary(("a",))
        empty = Sequence.from_text("", vocab)
        full = Sequence.from_text("a", vocab)
        assert utility_ngram_overlap(empty, empty, 2) == 1.0
        assert utility_ngram_overlap(empty, full, 2) == 0.0


class TestDecodeConfig:
    def test_required_parameters_enforced(self):
        with pytest.raises(ValueError):
            DecodeConfig("beam").validate()
        with pytest.raises(ValueError):
            DecodeConfig("greedy", k=3).validate()
        with pytest.raises(ValueError):
            DecodeConfig("diverse_beam", k=4, groups=3, diversity=0.7).validate()
        with pytest.raises(ValueError):
            DecodeConfig("nucleus", top_p=1.5, seed=0).validate()
        DecodeConfig("diverse_beam", k=4, groups=2, diversity=0.7).validate()

    def test_decode_one_returns_best_by_log_prob(self):
        model = train_ngram(["abab", "abba", "baab"], 2, 0.1, 6)
        best = decode_one(model, DecodeConfig("beam", k=4))
        assert best == beam_search(model, 4)[0]
