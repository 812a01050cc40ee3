"""Evaluation metrics: ROUGE-1/2/L F1, MAP, R_n@k and cosine image similarity.

ROUGE here is full-length (no truncation) on a fixed tokenization: lowercase,
split on every run of non-alphanumeric characters, no stemming, no stopword
removal. ROUGE-L is summary-level: one LCS over the whole token sequences.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import errors, kernels

_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, n_candidate: int, n_reference: int) -> "RougeScore":
        p = overlap / n_candidate if n_candidate else 0.0
        r = overlap / n_reference if n_reference else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)


@dataclass(frozen=True)
class RankedJudgment:
    n: int
    positive_rank: int

    def __post_init__(self):
        if not 1 <= self.positive_rank <= self.n:
            raise errors.ValidationError(
                f"positive rank {self.positive_rank} outside [1, {self.n}]"
            )


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _tokens(x) -> list[str]:
    return tokenize(x) if isinstance(x, str) else list(x)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n: int = 1) -> RougeScore:
    """Clipped n-gram overlap; inputs are strings or token lists."""
    if n not in (1, 2):
        raise errors.ValidationError(f"ROUGE-N is defined here for n in {{1, 2}}, got {n}")
    cand = ngrams(_tokens(candidate), n)
    ref = ngrams(_tokens(reference), n)
    if not ref:
        raise errors.EmptyReference(f"reference has no {n}-grams")
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    vocab: dict[str, int] = {}
    ia = np.array([vocab.setdefault(t, len(vocab)) for t in a], dtype=np.int64)
    ib = np.array([vocab.setdefault(t, len(vocab)) for t in b], dtype=np.int64)
    return int(kernels.lcs_length(ia, ib))


def rouge_l(candidate, reference) -> RougeScore:
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not ref:
        raise errors.EmptyReference("reference is empty")
    return RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref))


def rouge_report(candidate: str, reference: str) -> dict:
    """ROUGE-1/2/L as report dicts; ROUGE-L is tagged with its LCS level."""
    out = {}
    for name, sc in (("rouge1", rouge_n(candidate, reference, 1)),
                     ("rouge2", rouge_n(candidate, reference, 2)),
                     ("rougeL", rouge_l(candidate, reference))):
        out[name] = {"precision": sc.precision, "recall": sc.recall, "f1": sc.f1}
    out["rougeL"]["level"] = "summary"
    return out


def recall_at_k(judgment: RankedJudgment, k: int) -> int:
    if k < 1 or k > judgment.n:
        raise errors.KExceedsN(f"k={k} must be in [1, n={judgment.n}]", k=k, n=judgment.n)
    return 1 if judgment.positive_rank <= k else 0


def recall_at_k_batch(judgments: Iterable[RankedJudgment], k: int) -> float:
    hits = [recall_at_k(j, k) for j in judgments]
    if not hits:
        raise errors.EmptyInput("no judgments")
    return sum(hits) / len(hits)


def average_precision(relevance: Sequence) -> float:
    rel = [bool(r) for r in relevance]
    hits = 0
    precisions = []
    for pos, r in enumerate(rel, start=1):
        if r:
            hits += 1
            precisions.append(hits / pos)
    if not precisions:
        raise errors.NoRelevantItems("ranking has no relevant item")
    return math.fsum(precisions) / len(precisions)


def mean_average_precision(relevance_lists: Sequence[Sequence]) -> float:
    if not relevance_lists:
        raise errors.EmptyInput("no queries")
    return math.fsum(average_precision(r) for r in relevance_lists) / len(relevance_lists)


def cosine_image_similarity(a, b) -> float:
    """Cosine similarity as a percentage in [-100, 100]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise errors.DimensionMismatch(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise errors.ZeroNormVector("cosine similarity of a zero vector")
    return float(min(100.0, max(-100.0, 100.0 * float(a @ b) / (na * nb))))
