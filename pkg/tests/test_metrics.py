from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsumm import errors
from mmsumm.metrics import (
    RankedJudgment, RougeScore, average_precision, cosine_image_similarity, lcs_length,
    mean_average_precision, recall_at_k, recall_at_k_batch, rouge_l, rouge_n, rouge_report, tokenize,
)
from oracles import average_precision_fraction, lcs_table, unigram_overlap

words = st.lists(st.sampled_from("a b c d e the cat sat".split()), min_size=1, max_size=25)


class TestTokenize:
    @pytest.mark.parametrize("text, toks", [
        ("The Cat, sat!", ["the", "cat", "sat"]),
        ("don't  stop--now", ["don", "t", "stop", "now"]),
        ("snake_case 3.14", ["snake", "case", "3", "14"]),
        ("   ", []),
    ])
    def test_rule(self, text, toks):
        assert tokenize(text) == toks


class TestRouge:
    def test_identical(self):
        assert rouge_n("the cat sat", "the cat sat", 1) == RougeScore(1.0, 1.0, 1.0)
        assert rouge_l("the cat sat", "the cat sat").f1 == 1.0

    def test_hand_unigram(self):
        s = rouge_n("the cat sat", "the cat ran", 1)
        assert s.precision == s.recall == s.f1 == pytest.approx(2 / 3, abs=1e-15)

    def test_hand_bigram(self):
        s = rouge_n("the cat sat", "the cat ran", 2)
        assert s.f1 == pytest.approx(0.5, abs=1e-15)

    def test_disjoint(self):
        assert rouge_n("x y", "a b", 1).f1 == 0.0
        assert rouge_l("x y", "a b").f1 == 0.0

    def test_clipped(self):
        s = rouge_n("the the the", "the cat", 1)
        assert s.precision == pytest.approx(1 / 3) and s.recall == pytest.approx(1 / 2)

    def test_hand_lcs(self):
        s = rouge_l("a b c d", "a c d")
        assert (s.precision, s.recall) == (0.75, 1.0)
        assert s.f1 == pytest.approx(6 / 7, abs=1e-15)
        assert round(s.f1, 3) == 0.857

    def test_reversed(self):
        assert lcs_length(["a", "b"], ["b", "a"]) == 1

    def test_empty_reference(self):
        with pytest.raises(errors.EmptyReference):
            rouge_n("a", "", 1)
        with pytest.raises(errors.EmptyReference):
            rouge_n("a b", "a", 2)
        with pytest.raises(errors.EmptyReference):
            rouge_l("a", "!!")

    def test_empty_candidate_scores_zero(self):
        assert rouge_n("", "a b", 1).f1 == 0.0

    def test_report_tags_level(self):
        r = rouge_report("a b c d", "a c d")
        assert r["rougeL"] == {"precision": 0.75, "recall": 1.0, "f1": pytest.approx(6 / 7), "level": "summary"}
        assert set(r) == {"rouge1", "rouge2", "rougeL"}

    def test_bad_n(self):
        with pytest.raises(errors.ValidationError):
            rouge_n("a", "a", 3)

    @given(words)
    def test_self_is_one(self, x):
        assert rouge_n(x, x, 1).f1 == 1.0
        assert rouge_l(x, x).f1 == 1.0
        if len(x) > 1:
            assert rouge_n(x, x, 2).f1 == 1.0

    @given(words, words)
    def test_unigram_matches_counting_oracle(self, c, r):
        s = rouge_n(c, r, 1)
        ov = unigram_overlap(c, r)
        assert s.precision == ov / len(c) and s.recall == ov / len(r)
        assert 0.0 <= s.f1 <= 1.0

    @given(words, words)
    def test_lcs_matches_table(self, a, b):
        assert lcs_length(a, b) == lcs_table(a, b)

    def test_lcs_backends_agree(self, backend):
        a = "a b c a b d e f a".split()
        b = "b a c b d a e a f".split()
        assert lcs_length(a, b) == lcs_table(a, b)


class TestRecallAtK:
    def test_examples(self):
        assert recall_at_k(RankedJudgment(10, 1), 1) == 1
        assert recall_at_k(RankedJudgment(10, 5), 2) == 0
        assert recall_at_k_batch([RankedJudgment(10, 1), RankedJudgment(10, 3)], 2) == 0.5

    def test_k_exceeds(self):
        with pytest.raises(errors.KExceedsN):
            recall_at_k(RankedJudgment(3, 1), 4)

    def test_rank_validated(self):
        with pytest.raises(errors.ValidationError):
            RankedJudgment(3, 4)

    def test_empty_batch(self):
        with pytest.raises(errors.EmptyInput):
            recall_at_k_batch([], 1)

    @given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
    def test_monotone_in_k(self, nr):
        n, r = nr
        hits = [recall_at_k(RankedJudgment(n, r), k) for k in range(1, n + 1)]
        assert hits == sorted(hits) and hits[-1] == 1


class TestMap:
    def test_examples(self):
        assert average_precision([1]) == 1.0
        assert average_precision([0, 1]) == 0.5
        assert mean_average_precision([[1], [0, 1]]) == 0.75

    def test_no_relevant(self):
        with pytest.raises(errors.NoRelevantItems):
            average_precision([0, 0])
        with pytest.raises(errors.EmptyInput):
            mean_average_precision([])

    @given(st.lists(st.lists(st.booleans(), min_size=1, max_size=20).filter(any), min_size=1, max_size=6))
    def test_against_exact_rationals(self, lists):
        exact = sum(average_precision_fraction(r) for r in lists) / len(lists)
        m = mean_average_precision(lists)
        assert 0 < m <= 1
        assert abs(m - float(exact)) <= 1e-15


class TestCosine:
    def test_examples(self):
        assert cosine_image_similarity([1, 2], [1, 2]) == pytest.approx(100.0)
        assert cosine_image_similarity([1, 0], [0, 3]) == 0.0
        assert cosine_image_similarity([1, 1], [1, 0]) == pytest.approx(100 / math.sqrt(2), abs=1e-12)
        assert round(cosine_image_similarity([1, 1], [1, 0]), 2) == 70.71

    def test_errors(self):
        with pytest.raises(errors.ZeroNormVector):
            cosine_image_similarity([0, 0], [1, 0])
        with pytest.raises(errors.DimensionMismatch):
            cosine_image_similarity([1, 0], [1, 0, 0])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3).filter(lambda v: any(abs(x) > 1e-3 for x in v)))
    def test_clamped(self, v):
        assert -100.0 <= cosine_image_similarity(v, [-x for x in v]) <= 100.0
        assert cosine_image_similarity(v, v) <= 100.0
