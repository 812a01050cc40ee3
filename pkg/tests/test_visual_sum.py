from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmsumm import errors
from mmsumm.visual_sum import (
    AttentionState, CentroidAttentionScorer, FrameFeatures, attention_context, attention_scores,
    attention_weights, score_frames, select_keyframes,
)

betas = arrays(np.float64, st.integers(1, 30), elements=st.floats(-300, 300))


class TestAttentionScores:
    def test_identity_orthonormal(self):
        s = AttentionState(np.array([1.0, 0, 0]), np.eye(3))
        np.testing.assert_array_equal(attention_scores(s, FrameFeatures(np.eye(3))), [1, 0, 0])

    def test_zero_weights(self):
        s = AttentionState(np.ones(2), np.zeros((3, 2)))
        np.testing.assert_array_equal(attention_scores(s, FrameFeatures(np.eye(3))), [0, 0, 0])

    def test_hand_product(self):
        s = AttentionState(np.array([1.0, 1.0]), np.eye(2))
        np.testing.assert_array_equal(attention_scores(s, FrameFeatures([(1, 0), (0, 2)])), [1, 2])

    def test_shape_mismatch(self):
        with pytest.raises(errors.ShapeMismatch):
            attention_scores(AttentionState(np.ones(2), np.eye(3)), FrameFeatures(np.eye(3)))


class TestAttentionWeights:
    def test_uniform(self):
        np.testing.assert_allclose(attention_weights([2.0] * 4), [0.25] * 4, atol=1e-15)

    def test_hand_softmax(self):
        np.testing.assert_allclose(attention_weights([0.0, math.log(3)]), [0.25, 0.75], atol=1e-15)

    def test_single(self):
        np.testing.assert_array_equal(attention_weights([7.0]), [1.0])

    def test_large_values_stable(self):
        a = attention_weights([1000.0, 1000.0 + math.log(3)])
        np.testing.assert_allclose(a, [0.25, 0.75], atol=1e-12)

    @pytest.mark.parametrize("bad", [[], [np.nan], [np.inf, 0.0]])
    def test_invalid(self, bad):
        with pytest.raises(errors.ValidationError):
            attention_weights(bad)

    @given(betas)
    def test_normalized_positive(self, b):
        a = attention_weights(b)
        assert abs(a.sum() - 1.0) <= 1e-9
        assert (a > 0).all()

    @given(betas, st.floats(-100, 100))
    def test_shift_invariance(self, b, c):
        np.testing.assert_allclose(attention_weights(b + c), attention_weights(b), atol=1e-12, rtol=0)

    @given(betas)
    def test_argmax_preserved(self, b):
        a = attention_weights(b)
        # Entries closer than exp's resolution can tie in alpha; that tie is
        # then resolved to the first of them, like argmax on beta.
        top = np.flatnonzero(b >= b.max() - 1e-15 * max(1.0, abs(b.max())))
        assert np.argmax(a) in top


class TestAttentionContext:
    def test_mean(self):
        np.testing.assert_array_equal(
            attention_context([0.5, 0.5], FrameFeatures([(1, 0), (0, 1)])), [0.5, 0.5])

    def test_one_hot(self):
        f = FrameFeatures([(3, 4), (5, 6), (7, 8)])
        np.testing.assert_array_equal(attention_context([1, 0, 0], f), [3, 4])

    def test_hand_combination(self):
        np.testing.assert_array_equal(
            attention_context([0.25, 0.75], FrameFeatures([(2, 0), (0, 4)])), [0.5, 3.0])

    def test_not_normalized(self):
        with pytest.raises(errors.WeightsNotNormalized):
            attention_context([0.5, 0.6], FrameFeatures(np.eye(2)))

    @given(arrays(np.float64, (5, 3), elements=st.floats(-50, 50)),
           arrays(np.float64, 5, elements=st.floats(-300, 300)))
    def test_convex_hull(self, frames, b):
        ctx = attention_context(attention_weights(b), FrameFeatures(frames))
        lo, hi = frames.min(axis=0), frames.max(axis=0)
        slack = 1e-12 * (1 + np.abs(frames).max())
        assert (ctx >= lo - slack).all() and (ctx <= hi + slack).all()


class TestScoreFrames:
    def test_identical_frames_uniform(self):
        s = score_frames(FrameFeatures(np.tile([1.0, 2.0], (4, 1))))
        np.testing.assert_allclose(s, 0.25, atol=1e-15)

    def test_centroid_direction_wins(self):
        # centroid (1/3, 0, 0) points along frame 1; the others are orthogonal to it
        frames = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
        s = score_frames(FrameFeatures(frames))
        assert (s[1] > np.delete(s, 1)).all()

    def test_empty_scene(self):
        with pytest.raises(errors.EmptyInput):
            score_frames(FrameFeatures(np.zeros((0, 3))))

    def test_sharpness_multiplies(self):
        f = np.tile([1.0, 0.0], (2, 1))
        s = score_frames(FrameFeatures(f, [0.1, 0.9]))
        np.testing.assert_allclose(s, [0.05, 0.45])

    def test_sharpness_validated(self):
        with pytest.raises(errors.LengthMismatch):
            FrameFeatures(np.eye(2), [1.0])
        with pytest.raises(errors.ValidationError):
            FrameFeatures(np.eye(2), [1.0, -1.0])

    def test_custom_scorer(self):
        s = score_frames(FrameFeatures(np.eye(3)), lambda f: np.array([3.0, 1.0, 2.0]))
        assert select_keyframes(s, 2).indices == [0, 2]

    def test_bad_scorer(self):
        with pytest.raises(errors.ValidationError):
            score_frames(FrameFeatures(np.eye(3)), lambda f: np.array([1.0]))

    def test_default_is_centroid_attention(self, rng):
        f = FrameFeatures(rng.normal(size=(6, 4)))
        np.testing.assert_array_equal(score_frames(f), CentroidAttentionScorer()(f))


class TestSelectKeyframes:
    def test_tie_break(self):
        assert select_keyframes([0.1, 0.9, 0.9], 2).indices == [1, 2]

    def test_k_exceeds(self):
        assert select_keyframes([0.3, 0.1], 5).indices == [0, 1]

    def test_single(self):
        assert select_keyframes([0.3], 1).ranked == ((0, 0.3),)

    def test_bad_k(self):
        with pytest.raises(errors.ValidationError):
            select_keyframes([0.3], 0)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.integers(1, 5))
    def test_stability_under_low_additions(self, scores, k):
        base = select_keyframes(scores, k)
        if len(base.ranked) < k:
            return
        kth = base.ranked[-1][1]
        grown = select_keyframes(scores + [kth / 2 - 1e-3], k)
        assert grown.indices == base.indices

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.integers(1, 25))
    def test_ranked_order(self, scores, k):
        r = select_keyframes(scores, k).ranked
        assert len(r) == min(k, len(scores))
        assert len({i for i, _ in r}) == len(r)
        assert all((a[1], -a[0]) > (b[1], -b[0]) for a, b in zip(r, r[1:]))
