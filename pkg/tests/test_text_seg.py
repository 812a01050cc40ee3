from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ortho_group

from mmsumm import errors
from mmsumm.text_seg import (
    SentenceSequence, coherence_depth_scores, depth_from_similarities, gap_similarities,
    segment_sentences, segment_text,
)


def seq(emb):
    emb = np.asarray(emb, dtype=float)
    return SentenceSequence(tuple(f"s{i}" for i in range(len(emb))), emb)


def blocks(n1=4, n2=4):
    return seq([(1.0, 0.0)] * n1 + [(0.0, 1.0)] * n2)


class TestSentenceSequence:
    def test_validation(self):
        with pytest.raises(errors.EmptyInput):
            SentenceSequence((), np.zeros((0, 2)))
        with pytest.raises(errors.LengthMismatch):
            SentenceSequence(("a", "b"), np.zeros((1, 2)))
        with pytest.raises(errors.ValidationError):
            SentenceSequence(("a", "  "), np.ones((2, 2)))

    def test_slice(self):
        s = blocks().slice(2, 5)
        assert s.sentences == ("s2", "s3", "s4") and s.embeddings.shape == (3, 2)


class TestDepthScores:
    def test_identical(self):
        d = coherence_depth_scores(seq(np.ones((6, 3))))
        np.testing.assert_array_equal(d, np.zeros(5))
        assert segment_text(d).segments == ((0, 6),)

    def test_orthogonal_blocks_hand_trace(self):
        # gap sims with w=2: 1, 1, 1/sqrt2, 0, 1/sqrt2, 1, 1
        sims = gap_similarities(blocks(), 2)
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(sims, [1, 1, r, 0, r, 1, 1], atol=1e-15)
        d = coherence_depth_scores(blocks(), 2)
        np.testing.assert_allclose(d, [0, 0, 1 - r, 2, 1 - r, 0, 0], atol=1e-15)
        assert np.argmax(d) == 3 and (d[3] > np.delete(d, 3)).all()
        assert segment_text(d, tau_text=0.4).segments == ((0, 4), (4, 8))

    def test_two_sentences(self):
        assert coherence_depth_scores(seq([(1, 0), (0, 1)]), 1).shape == (1,)

    def test_errors(self):
        with pytest.raises(errors.EmptyInput):
            coherence_depth_scores(seq([(1, 0)]))
        with pytest.raises(errors.EmptyWindow):
            coherence_depth_scores(blocks(), 0)
        with pytest.raises(errors.ZeroNormVector):
            coherence_depth_scores(seq([(1, 0), (-1, 0), (0, 1)]), 2)

    def test_plateau_crossed(self):
        # the climb continues over the equal values at positions 1 and 2
        d = depth_from_similarities([0.9, 0.5, 0.5, 0.2, 0.8])
        assert d[3] == pytest.approx((0.9 - 0.2) + (0.8 - 0.2))

    def test_climb_stops_at_first_descent(self):
        d = depth_from_similarities([1.0, 0.3, 0.6, 0.1, 0.5])
        assert d[3] == pytest.approx((0.6 - 0.1) + (0.5 - 0.1))

    def test_nonnegative(self, rng):
        d = coherence_depth_scores(seq(rng.normal(size=(15, 4))))
        assert (d >= 0).all()

    @pytest.mark.parametrize("seed", range(5))
    def test_rotation_invariance(self, seed):
        r = np.random.default_rng(seed)
        x = r.normal(size=(12, 5))
        q = ortho_group.rvs(5, random_state=seed)
        np.testing.assert_allclose(coherence_depth_scores(seq(x @ q.T)), coherence_depth_scores(seq(x)),
                                   atol=1e-9)

    def test_plugin_scorer_length_checked(self):
        with pytest.raises(errors.LengthMismatch):
            coherence_depth_scores(blocks(), 2, lambda s, w: np.zeros(2))


class TestSegmentText:
    def test_all_zero(self):
        assert segment_text([0.0] * 4, tau_text=0.1).segments == ((0, 5),)

    def test_fixed_count(self):
        seg = segment_text([0.9, 0.1, 0.8], "count", count=2)
        assert seg.segments == ((0, 1), (1, 3), (3, 4))

    def test_fixed_count_exceeds(self):
        seg = segment_text([0.1, 0.2, 0.3], "count", count=7)
        assert seg.segments == ((0, 1), (1, 2), (2, 3), (3, 4))

    def test_fixed_count_tie_break(self):
        assert segment_text([0.5, 0.5, 0.5], "count", count=1).segments == ((0, 1), (1, 4))

    @pytest.mark.parametrize("kw", [{"policy": "magic"}, {"policy": "count"}, {"policy": "count", "count": -1}])
    def test_invalid_policy(self, kw):
        with pytest.raises(errors.InvalidPolicy):
            segment_text([0.1], **kw)

    def test_threshold_strict(self):
        assert segment_text([0.4], tau_text=0.4).segments == ((0, 2),)

    @given(st.lists(st.floats(0, 2), max_size=40), st.floats(0, 2), st.floats(0, 2))
    def test_partition_and_monotone(self, depth, t1, t2):
        n = len(depth) + 1
        lo, hi = sorted((t1, t2))
        a = segment_text(depth, tau_text=lo)
        b = segment_text(depth, tau_text=hi)
        for seg in (a, b):
            assert [i for s, e in seg.segments for i in range(s, e)] == list(range(n))
            assert len(seg.segments) == 1 + sum(1 for x in depth if x > (lo if seg is a else hi))
        assert len(b.segments) <= len(a.segments)

    @given(st.lists(st.floats(0, 2), max_size=30), st.integers(0, 35))
    def test_count_partition(self, depth, c):
        seg = segment_text(depth, "count", count=c)
        n = len(depth) + 1
        assert [i for s, e in seg.segments for i in range(s, e)] == list(range(n))
        assert len(seg.segments) == 1 + min(c, len(depth))


class TestSegmentSentences:
    def test_single_sentence(self):
        assert segment_sentences(seq([(1.0, 2.0)])).segments == ((0, 1),)

    def test_blocks(self):
        seg = segment_sentences(blocks(3, 5))
        assert seg.segments == ((0, 3), (3, 8))
