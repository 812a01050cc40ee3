"""Textual summary candidates per segment.

Extractive candidates rank sentences by cosine similarity to the segment
centroid. Abstractive candidates come from an external summarizer reached
through :mod:`mmsumm.adapter`; when it is unavailable the extractive ranking
is used instead and marked ``extractive-fallback``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors, rng
from .adapter import AdapterClient, AdapterConfig
from .ot import NORM_EPS
from .text_seg import SentenceSequence
from .video_seg import mean_pool

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TextCandidate:
    indices: tuple[int, ...]
    text: str
    score: float
    provenance: str
    embedding: np.ndarray


@dataclass(frozen=True)
class TextCandidates:
    ranked: tuple[TextCandidate, ...]

    @property
    def provenance(self) -> str:
        return self.ranked[0].provenance if self.ranked else ""


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    history: tuple[float, ...] = ()
    iterations: int = 0


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def _sqdist(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - c[None, :, :]
    return np.sum(diff * diff, axis=2)


def inertia_of(x, labels, centroids) -> float:
    x = np.asarray(x, dtype=np.float64)
    diff = x - np.asarray(centroids)[np.asarray(labels)]
    return float(np.sum(diff * diff))


def kmeans(vectors, k: int, seed: int = 0, max_iter: int = 100) -> ClusterAssignment:
    """Lloyd's algorithm with seeded, permutation-equivariant initialization.

    The ``k`` initial centroids are drawn without replacement from the
    ``"kmeans"`` stream of ``seed``, indexing the points in lexicographic
    order, so permuting the input permutes the labels and nothing else.
    Assignment ties go to the lower centroid index. A cluster that comes up
    empty is re-seeded at the point farthest from its centroid.
    ``history`` holds the inertia after each assignment step.
    """
    x = np.array(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise errors.EmptyInput(f"k-means needs a nonempty (n, d) array, got {x.shape}")
    n = x.shape[0]
    if k < 1:
        raise errors.ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise errors.KTooLarge(f"k={k} exceeds the number of points ({n})", k=k, n=n)
    if max_iter < 1:
        raise errors.ValidationError("max_iter must be >= 1")

    canon = np.lexsort(x.T[::-1])
    rank = np.empty(n, dtype=np.int64)
    rank[canon] = np.arange(n)
    picks = rng.stream(seed, "kmeans").choice(n, size=k, replace=False)
    centroids = x[canon[np.sort(picks)]].copy()

    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sqdist(x, centroids)
        new = np.argmin(d2, axis=1)
        new, d2 = _reseed_empty(x, centroids, new, d2, rank)
        history.append(float(np.sum(d2[np.arange(n), new])))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centroids[c] = mean_pool(x[labels == c])
    return ClusterAssignment(labels, centroids, inertia_of(x, labels, centroids), tuple(history), it)


def _reseed_empty(x, centroids, labels, d2, rank):
    k = centroids.shape[0]
    used = set()
    for c in range(k):
        if np.any(labels == c):
            continue
        own = d2[np.arange(x.shape[0]), labels]
        candidates = [i for i in range(x.shape[0]) if i not in used]
        far = max(candidates, key=lambda i: (own[i], -rank[i]))
        used.add(far)
        centroids[c] = x[far]
        d2 = _sqdist(x, centroids)
        labels = np.argmin(d2, axis=1)
    return labels, d2


# ---------------------------------------------------------------------------
# extractive
# ---------------------------------------------------------------------------


def centroid_similarities(emb: np.ndarray) -> np.ndarray:
    centroid = mean_pool(emb)
    cn = np.sqrt(centroid @ centroid)
    norms = np.sqrt(np.sum(emb * emb, axis=1))
    if cn <= NORM_EPS or (norms <= NORM_EPS).any():
        raise errors.ZeroNormVector("zero-norm sentence embedding or segment centroid")
    return np.clip((emb @ centroid) / (norms * cn), -1.0, 1.0)


def extractive_candidates(segment: SentenceSequence, n: int = 3, offset: int = 0,
                          provenance: str = "extractive") -> TextCandidates:
    """Top-``n`` single sentences by cosine similarity to the segment centroid.

    ``offset`` converts segment-local positions into document indices.
    """
    if n < 1:
        raise errors.ValidationError(f"n must be >= 1, got {n}")
    sims = centroid_similarities(segment.embeddings)
    order = sorted(range(len(segment)), key=lambda i: (-sims[i], i))[:n]
    return TextCandidates(tuple(
        TextCandidate((offset + i,), segment.sentences[i], float(sims[i]), provenance,
                      segment.embeddings[i])
        for i in order
    ))


# ---------------------------------------------------------------------------
# abstractive (external)
# ---------------------------------------------------------------------------


def _from_response(segment: SentenceSequence, offset: int, texts, scores) -> TextCandidates:
    idx = tuple(range(offset, offset + len(segment)))
    emb = mean_pool(segment.embeddings)
    return TextCandidates(tuple(
        TextCandidate(idx, t, float(s), "abstractive", emb) for t, s in zip(texts, scores)
    ))


def abstractive_candidates(
    segments: Sequence[tuple[SentenceSequence, int]],
    config: AdapterConfig,
    n: int = 3,
    client: AdapterClient | None = None,
) -> list[TextCandidates]:
    """One adapter request per ``(segment, offset)``; responses matched by id.

    Falls back to :func:`extractive_candidates` for every segment when the
    adapter cannot be reached and ``config.fallback`` is set.
    """
    requests = [(f"seg-{k}", " ".join(seg.sentences)) for k, (seg, _) in enumerate(segments)]
    try:
        if client is not None:
            responses = client.request_many(requests, n)
        else:
            with AdapterClient(config) as c:
                responses = c.request_many(requests, n)
    except errors.AdapterUnavailable as exc:
        if not config.fallback:
            raise
        logger.warning("summarizer adapter unavailable (%s); using extractive fallback", exc)
        return [extractive_candidates(seg, n, off, "extractive-fallback") for seg, off in segments]
    out = []
    for (rid, _), (seg, off) in zip(requests, segments):
        texts, scores = responses[rid]
        out.append(_from_response(seg, off, texts, scores))
    return out


def abstractive_adapter(segment: SentenceSequence, config: AdapterConfig, n: int = 3,
                        offset: int = 0, client: AdapterClient | None = None) -> TextCandidates:
    return abstractive_candidates([(segment, offset)], config, n, client)[0]
