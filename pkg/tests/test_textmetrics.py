import math
import random

import pytest

from driveloop.textmetrics import (EmptyCorpus, ScoredPair, SingletonCorpus,
                                   bleu, cider_d, score_corpus, tokenize)

from oracles import naive_bleu, naive_cider_d

WORDS = ("car", "road", "stop", "red", "light", "pedestrian", "turn", "slow",
         "the", "a", "ahead", "lane", "clear", "vehicle", "brake", "left")


def random_sentence(rng, lo=1, hi=12):
    return tuple(rng.choice(WORDS) for _ in range(rng.randrange(lo, hi)))


def random_corpus(rng, n_pairs, max_refs=3):
    pairs = []
    for i in range(n_pairs):
        refs = tuple(random_sentence(rng)
                     for _ in range(rng.randrange(1, max_refs + 1)))
        hyp = random_sentence(rng, lo=0, hi=10)
        pairs.append(ScoredPair(id=f"p{i}", hypothesis=hyp, references=refs))
    return pairs


class TestTokenizer:
    def test_lowercase_and_punctuation(self):
        assert tokenize("The car SLOWS down.") == ("the", "car", "slows", "down")

    def test_punctuation_becomes_a_separator(self):
        assert tokenize("stop;go") == ("stop", "go")


class TestBleu:
    def test_identical_hypothesis_scores_one(self):
        pairs = [ScoredPair.from_text("a", "the car slows down",
                                      ["the car slows down"])]
        assert bleu(pairs) == pytest.approx(1.0)

    def test_self_evaluation_identity_on_a_corpus(self):
        rng = random.Random(42)
        pairs = []
        for i in range(20):
            sentence = " ".join(random_sentence(rng, lo=4, hi=10))
            pairs.append(ScoredPair.from_text(str(i), sentence, [sentence]))
        assert bleu(pairs) == pytest.approx(1.0)

    def test_clipped_counts_hand_case(self):
        # hyp "the the the the" vs ref "the cat": p1 clips to 1/4, higher
        # orders have zero matches and fall back to the epsilon smoothing,
        # and the brevity penalty is 1 because the hypothesis is longer.
        pairs = [ScoredPair.from_text("a", "the the the the", ["the cat"])]
        eps = 1e-9
        expected = (0.25 * (eps / 3.0) * (eps / 2.0) * (eps / 1.0)) ** 0.25
        assert bleu(pairs) == pytest.approx(expected, rel=1e-12)

    def test_brevity_penalty_for_half_length_hypothesis(self):
        # identical 4-gram content, hypothesis half as long as the reference
        pairs = [ScoredPair.from_text("a", "red light ahead stop",
                                      ["red light ahead stop " * 2])]
        score = bleu(pairs)
        full_overlap = bleu([ScoredPair.from_text(
            "b", "red light ahead stop", ["red light ahead stop"])])
        ratio = score / full_overlap
        # precisions differ slightly (longer ref), but the e^{1-2} factor
        # dominates; check BP directly via the formula
        assert math.exp(1.0 - 2.0) * 1.05 > ratio > math.exp(1.0 - 2.0) * 0.2

    def test_matches_naive_oracle_on_random_corpora(self):
        rng = random.Random(7)
        for _ in range(100):
            pairs = random_corpus(rng, rng.randrange(2, 8))
            expected = naive_bleu([(p.hypothesis, list(p.references))
                                   for p in pairs])
            assert bleu(pairs) == pytest.approx(expected, abs=1e-9)

    def test_score_in_unit_interval(self):
        rng = random.Random(8)
        for _ in range(50):
            pairs = random_corpus(rng, 4)
            assert 0.0 <= bleu(pairs) <= 1.0

    def test_reorder_invariance(self):
        rng = random.Random(9)
        pairs = random_corpus(rng, 6)
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        assert bleu(pairs) == pytest.approx(bleu(shuffled), abs=1e-12)

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            bleu([])

    def test_sentence_level_variant_runs(self):
        rng = random.Random(10)
        pairs = random_corpus(rng, 5)
        assert 0.0 <= bleu(pairs, sentence_level=True) <= 1.0


class TestCiderD:
    def test_identical_unique_sentences_score_ten(self):
        sentences = ["the red light is ahead now",
                     "a pedestrian crosses the empty road",
                     "slow down before the turn lane",
                     "the vehicle ahead brakes very hard"]
        pairs = [ScoredPair.from_text(str(i), s, [s])
                 for i, s in enumerate(sentences)]
        mean, per_pair = cider_d(pairs)
        for score in per_pair.values():
            assert score == pytest.approx(10.0, abs=1e-9)
        assert mean == pytest.approx(10.0, abs=1e-9)

    def test_disjoint_hypothesis_scores_zero(self):
        pairs = [
            ScoredPair.from_text("a", "car lane clear", ["pedestrian stop red"]),
            ScoredPair.from_text("b", "slow turn left", ["vehicle brake ahead"]),
        ]
        _, per_pair = cider_d(pairs)
        assert per_pair["a"] == 0.0
        assert per_pair["b"] == 0.0

    def test_three_document_toy_corpus_matches_brute_force(self):
        pairs = [
            ScoredPair.from_text("a", "the car slows down",
                                 ["the car slows down", "the car brakes"]),
            ScoredPair.from_text("b", "a red light ahead", ["red light ahead"]),
            ScoredPair.from_text("c", "pedestrian on the road",
                                 ["the pedestrian crosses the road"]),
        ]
        mean, per_pair = cider_d(pairs)
        exp_mean, exp_per = naive_cider_d(
            [(p.id, p.hypothesis, list(p.references)) for p in pairs])
        assert mean == pytest.approx(exp_mean, abs=1e-9)
        for pid in per_pair:
            assert per_pair[pid] == pytest.approx(exp_per[pid], abs=1e-9)

    def test_matches_brute_force_on_random_corpora(self):
        rng = random.Random(1234)
        for _ in range(100):
            pairs = random_corpus(rng, rng.randrange(2, 7))
            mean, per_pair = cider_d(pairs)
            exp_mean, exp_per = naive_cider_d(
                [(p.id, p.hypothesis, list(p.references)) for p in pairs])
            assert mean == pytest.approx(exp_mean, abs=1e-9)
            for pid in per_pair:
                assert per_pair[pid] == pytest.approx(exp_per[pid], abs=1e-9)

    def test_scores_stay_in_range(self):
        rng = random.Random(55)
        for _ in range(30):
            pairs = random_corpus(rng, 5)
            _, per_pair = cider_d(pairs)
            for score in per_pair.values():
                assert 0.0 <= score <= 10.0

    def test_reorder_invariance(self):
        rng = random.Random(66)
        pairs = random_corpus(rng, 6)
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        mean_a, per_a = cider_d(pairs)
        mean_b, per_b = cider_d(shuffled)
        assert mean_a == pytest.approx(mean_b, abs=1e-12)
        assert per_a == per_b

    def test_corpus_size_guards(self):
        with pytest.raises(EmptyCorpus):
            cider_d([])
        with pytest.raises(SingletonCorpus):
            cider_d([ScoredPair.from_text("a", "x", ["x"])])


class TestScoreCorpus:
    def test_bundles_both_metrics(self):
        rng = random.Random(77)
        pairs = random_corpus(rng, 4)
        score = score_corpus(pairs)
        assert 0.0 <= score.bleu <= 1.0
        assert 0.0 <= score.cider_d <= 10.0
        assert set(score.per_pair_cider) == {p.id for p in pairs}
