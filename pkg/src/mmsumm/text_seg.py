"""Topic segmentation of a sentence sequence.

The default coherence scorer is TextTiling-style: for each gap between
sentences, the cosine similarity of the mean-pooled ``w``-sentence windows on
either side, turned into a depth score by climbing to the nearest peak on each
side. Any :class:`CoherenceScorer` (e.g. a hierarchical transformer run
out-of-process) can replace it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import errors
from .ot import NORM_EPS
from .video_seg import mean_pool, split_ranges


@dataclass(frozen=True, eq=False)
class SentenceSequence:
    sentences: tuple[str, ...]
    embeddings: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        sents = tuple(self.sentences)
        emb = np.array(self.embeddings, dtype=np.float64)
        if not sents:
            raise errors.EmptyInput("sentence sequence is empty")
        if emb.ndim != 2 or emb.shape[0] != len(sents) or emb.shape[1] == 0:
            raise errors.LengthMismatch(
                f"{len(sents)} sentences but embedding array has shape {emb.shape}"
            )
        blank = [i for i, s in enumerate(sents) if not s.strip()]
        if blank:
            raise errors.ValidationError(f"sentence {blank[0]} is blank", index=blank[0])
        emb.flags.writeable = False
        object.__setattr__(self, "sentences", sents)
        object.__setattr__(self, "embeddings", emb)

    def __len__(self) -> int:
        return len(self.sentences)

    def slice(self, start: int, stop: int) -> "SentenceSequence":
        return SentenceSequence(self.sentences[start:stop], self.embeddings[start:stop], self.source_id)


@dataclass(frozen=True)
class TextSegmentation:
    segments: tuple[tuple[int, int], ...]
    depth_scores: tuple[float, ...]


class CoherenceScorer(Protocol):
    def __call__(self, seq: SentenceSequence, window: int) -> np.ndarray: ...


def gap_similarities(seq: SentenceSequence, window: int = 2) -> np.ndarray:
    n = len(seq)
    emb = seq.embeddings
    sims = np.empty(n - 1)
    for i in range(1, n):
        left = mean_pool(emb[max(0, i - window):i])
        right = mean_pool(emb[i:min(n, i + window)])
        nl, nr = np.sqrt(left @ left), np.sqrt(right @ right)
        if nl <= NORM_EPS or nr <= NORM_EPS:
            raise errors.ZeroNormVector(f"pooled sentence window at gap {i} has zero norm", index=i)
        sims[i - 1] = np.clip((left @ right) / (nl * nr), -1.0, 1.0)
    return sims


def depth_from_similarities(sims) -> np.ndarray:
    """``(left_peak - s_i) + (right_peak - s_i)``.

    Peaks are found by walking away from ``i`` while similarity does not
    decrease (plateaus are crossed).
    """
    s = np.asarray(sims, dtype=np.float64)
    depth = np.empty_like(s)
    for i in range(s.shape[0]):
        lp = s[i]
        j = i
        while j > 0 and s[j - 1] >= lp:
            lp = s[j - 1]
            j -= 1
        rp = s[i]
        j = i
        while j < s.shape[0] - 1 and s[j + 1] >= rp:
            rp = s[j + 1]
            j += 1
        depth[i] = (lp - s[i]) + (rp - s[i])
    return depth


@dataclass(frozen=True)
class DepthScorer:
    def __call__(self, seq: SentenceSequence, window: int) -> np.ndarray:
        return depth_from_similarities(gap_similarities(seq, window))


def coherence_depth_scores(
    seq: SentenceSequence, window: int = 2, scorer: CoherenceScorer | None = None
) -> np.ndarray:
    if len(seq) < 2:
        raise errors.EmptyInput("need at least two sentences to score boundaries")
    if window < 1:
        raise errors.EmptyWindow(f"window must be >= 1, got {window}")
    scores = np.asarray((scorer or DepthScorer())(seq, window), dtype=np.float64)
    if scores.shape != (len(seq) - 1,):
        raise errors.LengthMismatch(f"scorer returned {scores.shape} scores for {len(seq) - 1} gaps")
    return scores


def segment_text(depth_scores, policy: str = "threshold", tau_text: float = 0.4,
                 count: int | None = None) -> TextSegmentation:
    """Choose boundaries by ``depth > tau_text`` or by the ``count`` deepest gaps.

    Gap ``j`` separates sentence ``j`` from ``j + 1``; ties in the fixed-count
    policy go to the lower gap index.
    """
    d = np.asarray(depth_scores, dtype=np.float64).ravel()
    if policy == "threshold":
        flags = [1 if x > tau_text else 0 for x in d]
    elif policy == "count":
        if count is None or count < 0:
            raise errors.InvalidPolicy(f"fixed-count policy needs count >= 0, got {count!r}")
        chosen = sorted(range(d.shape[0]), key=lambda j: (-d[j], j))[:count]
        flags = [0] * d.shape[0]
        for j in chosen:
            flags[j] = 1
    else:
        raise errors.InvalidPolicy(f"unknown segmentation policy {policy!r}")
    return TextSegmentation(split_ranges(d.shape[0] + 1, flags), tuple(float(x) for x in d))


def segment_sentences(seq: SentenceSequence, window: int = 2, policy: str = "threshold",
                      tau_text: float = 0.4, count: int | None = None,
                      scorer: CoherenceScorer | None = None) -> TextSegmentation:
    if len(seq) == 1:
        return TextSegmentation(((0, 1),), ())
    return segment_text(coherence_depth_scores(seq, window, scorer), policy, tau_text, count)
