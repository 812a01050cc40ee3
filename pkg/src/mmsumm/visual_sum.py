"""Keyframe candidates for one scene.

Attention math: raw score ``beta_i = e_i^T W s``, weights ``alpha = softmax(beta)``
and context ``E = sum_i alpha_i e_i``. The default importance scorer runs one
attention step with ``s`` = scene centroid and ``W`` = identity; a trained
encoder/decoder can be plugged in through :class:`ImportanceScorer`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import errors


@dataclass(frozen=True, eq=False)
class FrameFeatures:
    frames: np.ndarray
    sharpness: np.ndarray | None = None

    def __post_init__(self):
        x = np.array(self.frames, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise errors.EmptyInput(f"scene has no frames (shape {x.shape})")
        x.flags.writeable = False
        object.__setattr__(self, "frames", x)
        if self.sharpness is not None:
            s = np.array(self.sharpness, dtype=np.float64).ravel()
            if s.shape[0] != x.shape[0]:
                raise errors.LengthMismatch(f"{s.shape[0]} sharpness values for {x.shape[0]} frames")
            if not np.isfinite(s).all() or (s < 0).any():
                raise errors.ValidationError("sharpness must be finite and nonnegative")
            s.flags.writeable = False
            object.__setattr__(self, "sharpness", s)

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True, eq=False)
class AttentionState:
    decoder_state: np.ndarray
    weight_matrix: np.ndarray


@dataclass(frozen=True)
class KeyframeCandidates:
    ranked: tuple[tuple[int, float], ...]

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.ranked]


class ImportanceScorer(Protocol):
    def __call__(self, frames: FrameFeatures) -> np.ndarray: ...


def attention_scores(state: AttentionState, frames: FrameFeatures) -> np.ndarray:
    e = frames.frames
    w = np.asarray(state.weight_matrix, dtype=np.float64)
    s = np.asarray(state.decoder_state, dtype=np.float64).ravel()
    if w.ndim != 2 or w.shape[0] != e.shape[1] or w.shape[1] != s.shape[0]:
        raise errors.ShapeMismatch(
            f"W_a {w.shape} incompatible with frame dim {e.shape[1]} and state dim {s.shape[0]}"
        )
    return e @ (w @ s)


def attention_weights(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=np.float64).ravel()
    if b.size == 0 or not np.isfinite(b).all():
        raise errors.ValidationError("attention scores must be finite and nonempty")
    z = np.exp(b - b.max())
    return z / z.sum()


def attention_context(alpha, frames: FrameFeatures) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64).ravel()
    if a.shape[0] != len(frames):
        raise errors.LengthMismatch(f"{a.shape[0]} weights for {len(frames)} frames")
    if (a < 0).any() or abs(a.sum() - 1.0) > 1e-9:
        raise errors.WeightsNotNormalized(f"attention weights sum to {a.sum()!r}")
    return a @ frames.frames


@dataclass(frozen=True)
class CentroidAttentionScorer:
    """Single attention step against the scene centroid with ``W = I``."""

    def __call__(self, frames: FrameFeatures) -> np.ndarray:
        e = frames.frames
        state = AttentionState(e.mean(axis=0), np.eye(e.shape[1]))
        return attention_weights(attention_scores(state, frames))


def score_frames(frames: FrameFeatures, scorer: ImportanceScorer | None = None) -> np.ndarray:
    """Per-frame importance; multiplied by sharpness when it is supplied."""
    scorer = scorer or CentroidAttentionScorer()
    scores = np.asarray(scorer(frames), dtype=np.float64).ravel()
    if scores.shape[0] != len(frames) or not np.isfinite(scores).all():
        raise errors.ValidationError("importance scorer must return one finite score per frame")
    if frames.sharpness is not None:
        scores = scores * frames.sharpness
    return scores


def select_keyframes(scores, k: int = 3) -> KeyframeCandidates:
    if k < 1:
        raise errors.ValidationError(f"k must be >= 1, got {k}")
    s = np.asarray(scores, dtype=np.float64).ravel()
    order = sorted(range(s.shape[0]), key=lambda i: (-s[i], i))[:k]
    return KeyframeCandidates(tuple((i, float(s[i])) for i in order))
