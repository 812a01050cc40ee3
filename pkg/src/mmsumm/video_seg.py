"""Scene segmentation of a shot sequence.

Boundary ``i`` (``1 <= i <= n-1``) sits between shot ``i-1`` and shot ``i``.
Each boundary gets a two-branch representation: a *difference* score (inner
product of the L2-normalized mean-pooled windows on either side) and a
*relation* vector (elementwise max over both windows). A pluggable scorer maps
representations to probabilities, which are thresholded into scene cuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import errors
from .ot import NORM_EPS


@dataclass(frozen=True, eq=False)
class ShotSequence:
    shots: np.ndarray
    spans: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        x = np.array(self.shots, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise errors.EmptyInput(f"shot features must be a nonempty (n, d) array, got {x.shape}")
        x.flags.writeable = False
        object.__setattr__(self, "shots", x)
        if self.spans is not None:
            spans = tuple((int(s), int(e)) for s, e in self.spans)
            if len(spans) != x.shape[0]:
                raise errors.LengthMismatch(f"{len(spans)} spans for {x.shape[0]} shots")
            prev_end = None
            for s, e in spans:
                if e < s or (prev_end is not None and s < prev_end):
                    raise errors.ValidationError("shot spans must be ordered and non-overlapping")
                prev_end = e
            object.__setattr__(self, "spans", spans)

    def __len__(self) -> int:
        return self.shots.shape[0]


@dataclass(frozen=True, eq=False)
class BoundaryRepr:
    index: int
    diff_score: float
    relation_vector: np.ndarray


@dataclass(frozen=True)
class SceneSegmentation:
    boundary_flags: tuple[int, ...]
    scenes: tuple[tuple[int, int], ...]

    @property
    def n_items(self) -> int:
        return self.scenes[-1][1]


class BoundaryScorer(Protocol):
    """Maps boundary representations to per-boundary probabilities in [0, 1].

    Sequence-model scorers (e.g. a trained recurrent model running with a
    stride over boundaries) must return exactly one score per input, in order.
    """

    def __call__(self, reprs: Sequence[BoundaryRepr]) -> Sequence[float]: ...


@dataclass(frozen=True)
class LogisticBoundaryScorer:
    """``1 / (1 + exp(-kappa * (0.5 - (diff + 1) / 2)))`` per boundary."""

    kappa: float = 10.0

    def __call__(self, reprs):
        d = np.array([r.diff_score for r in reprs], dtype=np.float64)
        z = self.kappa * (0.5 - (d + 1.0) / 2.0)
        return 1.0 / (1.0 + np.exp(-z))


def _unit(v: np.ndarray, what: str, index: int) -> np.ndarray:
    n = float(np.sqrt(np.dot(v, v)))
    if n <= NORM_EPS:
        raise errors.ZeroNormVector(f"{what} at boundary {index} has zero norm", index=index)
    return v / n


def mean_pool(x: np.ndarray) -> np.ndarray:
    """Row mean accumulated in lexicographic row order (exactly order-invariant)."""
    order = np.lexsort(x.T[::-1])
    return x[order].mean(axis=0)


def boundary_representation(shots: ShotSequence, i: int, window: int = 2) -> BoundaryRepr:
    n = len(shots)
    if window < 1:
        raise errors.EmptyWindow(f"window must be >= 1, got {window}")
    if not 1 <= i <= n - 1:
        raise errors.IndexOutOfRange(f"boundary {i} outside [1, {n - 1}]", index=i)
    before = shots.shots[max(0, i - window):i]
    after = shots.shots[i:min(n, i + window)]
    pb = _unit(mean_pool(before), "pooled window before", i)
    pa = _unit(mean_pool(after), "pooled window after", i)
    diff = float(np.clip(np.dot(pb, pa), -1.0, 1.0))
    relation = np.maximum(before.max(axis=0), after.max(axis=0))
    return BoundaryRepr(i, diff, relation)


def boundary_representations(shots: ShotSequence, window: int = 2) -> list[BoundaryRepr]:
    return [boundary_representation(shots, i, window) for i in range(1, len(shots))]


def coarse_scores(reprs: Sequence[BoundaryRepr], scorer: BoundaryScorer | None = None) -> np.ndarray:
    if len(reprs) == 0:
        raise errors.EmptyInput("no boundary representations to score")
    scorer = scorer or LogisticBoundaryScorer()
    s = np.asarray(scorer(reprs), dtype=np.float64)
    if s.shape != (len(reprs),):
        raise errors.LengthMismatch(f"scorer returned {s.shape} scores for {len(reprs)} boundaries")
    if not np.isfinite(s).all() or (s < 0).any() or (s > 1).any():
        raise errors.ValidationError("boundary scores must lie in [0, 1]")
    return s


def binarize(scores, tau: float = 0.5) -> list[int]:
    """Flag boundaries whose score is strictly above ``tau``."""
    return [1 if s > tau else 0 for s in np.asarray(scores, dtype=np.float64)]


def split_ranges(n: int, flags: Sequence[int]) -> tuple[tuple[int, int], ...]:
    if len(flags) != n - 1:
        raise errors.LengthMismatch(f"{len(flags)} flags for {n} items (need {n - 1})")
    cuts = [i + 1 for i, f in enumerate(flags) if f]
    edges = [0, *cuts, n]
    return tuple((edges[k], edges[k + 1]) for k in range(len(edges) - 1))


def assemble_scenes(shots: ShotSequence | int, flags: Sequence[int]) -> SceneSegmentation:
    n = shots if isinstance(shots, int) else len(shots)
    flags = tuple(int(bool(f)) for f in flags)
    return SceneSegmentation(flags, split_ranges(n, flags))


def segment_video(
    shots: ShotSequence,
    window: int = 2,
    tau: float = 0.5,
    scorer: BoundaryScorer | None = None,
) -> tuple[SceneSegmentation, np.ndarray]:
    """Full chain; returns the segmentation and the coarse scores."""
    if len(shots) == 1:
        return assemble_scenes(shots, []), np.zeros(0)
    scores = coarse_scores(boundary_representations(shots, window), scorer)
    return assemble_scenes(shots, binarize(scores, tau)), scores
