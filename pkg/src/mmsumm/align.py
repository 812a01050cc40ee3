"""Pair scenes with text segments, align their candidates and pick the summary.

The pipeline runs video segmentation then keyframe scoring, and text
segmentation then candidate generation; scenes and segments are paired, and
within each pair the keyframe/text candidate pair with the smallest OT
distance is chosen. :func:`run_pipeline` also returns a JSON-ready report.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors, metrics
from .adapter import AdapterConfig
from .manifest import Manifest
from .ot import EmbeddingSet, SolverConfig, argmin_pair, pairwise_alignment_matrix
from .text_seg import SentenceSequence, TextSegmentation, segment_sentences
from .text_sum import TextCandidate, TextCandidates, abstractive_candidates, extractive_candidates, kmeans
from .video_seg import LogisticBoundaryScorer, SceneSegmentation, ShotSequence, segment_video
from .visual_sum import FrameFeatures, score_frames, select_keyframes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SegmentPairing:
    pairs: tuple[tuple[int, int], ...]
    policy: str
    unpaired_scenes: tuple[int, ...] = ()
    unpaired_segments: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class KeyframeChoice:
    """A keyframe candidate: ``frame`` is the index into the whole video."""

    scene: int
    frame: int
    score: float
    embedding: np.ndarray


@dataclass(frozen=True, eq=False)
class PairSummary:
    scene: int
    segment: int
    keyframe: KeyframeChoice
    text: TextCandidate
    choice: tuple[int, int]
    distance: float
    distances: np.ndarray


@dataclass(frozen=True)
class MultimodalSummary:
    pairs: tuple[PairSummary, ...]
    pairing: SegmentPairing
    scope: str = "segment"


def _ranges(seg) -> tuple[tuple[int, int], ...]:
    if isinstance(seg, SceneSegmentation):
        return seg.scenes
    if isinstance(seg, TextSegmentation):
        return seg.segments
    return tuple(seg)


def pair_segments(scenes, tsegs, policy: str = "index") -> SegmentPairing:
    """Match scenes to text segments one-to-one.

    ``index`` pairs the i-th scene with the i-th segment. ``proportional``
    greedily pairs by distance between midpoints normalized to [0, 1], ties
    going to the lower (scene, segment) index. Accepts segmentations or plain
    lists of ``(start, stop)`` ranges.
    """
    sr, tr = _ranges(scenes), _ranges(tsegs)
    if not sr or not tr:
        raise errors.EmptyInput("both segmentations must be nonempty")
    if policy == "index":
        m = min(len(sr), len(tr))
        pairs = [(i, i) for i in range(m)]
    elif policy == "proportional":
        ns, nt = sr[-1][1], tr[-1][1]
        ms = [(a + b) / (2 * ns) for a, b in sr]
        mt = [(a + b) / (2 * nt) for a, b in tr]
        order = sorted(((abs(ms[i] - mt[j]), i, j) for i in range(len(sr)) for j in range(len(tr))))
        used_s, used_t, pairs = set(), set(), []
        for _, i, j in order:
            if i not in used_s and j not in used_t:
                used_s.add(i)
                used_t.add(j)
                pairs.append((i, j))
        pairs.sort()
    else:
        raise errors.InvalidPolicy(f"unknown pairing policy {policy!r}")
    ps = {i for i, _ in pairs}
    pt = {j for _, j in pairs}
    return SegmentPairing(
        tuple(pairs), policy,
        tuple(i for i in range(len(sr)) if i not in ps),
        tuple(j for j in range(len(tr)) if j not in pt),
    )


def _single(v) -> EmbeddingSet:
    return EmbeddingSet(np.asarray(v, dtype=np.float64)[None, :])


def _choose(kfs: Sequence[KeyframeChoice], texts: Sequence[TextCandidate], config, workers):
    d = pairwise_alignment_matrix([_single(k.embedding) for k in kfs],
                                  [_single(t.embedding) for t in texts], config, workers)
    i, j = argmin_pair(d)
    return d, (i, j)


def select_summary(
    pairing: SegmentPairing,
    keyframes: Sequence[Sequence[KeyframeChoice]],
    texts: Sequence[TextCandidates],
    config: SolverConfig | None = None,
    scope: str = "segment",
    workers: int = 1,
) -> MultimodalSummary:
    """Pick the closest keyframe/text candidate pair.

    ``keyframes[s]`` lists the candidates of scene ``s`` and ``texts[t]`` those
    of segment ``t``. With ``scope="segment"`` one pair is chosen inside each
    scene/segment pair; with ``scope="global"`` one pair is chosen among all
    candidates of all paired scenes and segments. Ties go to the
    lexicographically first ``(keyframe, text)`` position.
    """
    config = config or SolverConfig()
    for s, t in pairing.pairs:
        if not keyframes[s] or not texts[t].ranked:
            raise errors.MissingCandidates(f"pair (scene {s}, segment {t}) lacks candidates",
                                           scene=s, segment=t)
    out = []
    if scope == "segment":
        for s, t in pairing.pairs:
            kfs, tcs = list(keyframes[s]), list(texts[t].ranked)
            d, (i, j) = _choose(kfs, tcs, config, workers)
            out.append(PairSummary(s, t, kfs[i], tcs[j], (i, j), float(d[i, j]), d))
    elif scope == "global":
        if pairing.pairs:
            kfs = [k for s, _ in pairing.pairs for k in keyframes[s]]
            tagged = [(t, c) for _, t in pairing.pairs for c in texts[t].ranked]
            d, (i, j) = _choose(kfs, [c for _, c in tagged], config, workers)
            out.append(PairSummary(kfs[i].scene, tagged[j][0], kfs[i], tagged[j][1], (i, j),
                                   float(d[i, j]), d))
    else:
        raise errors.InvalidPolicy(f"unknown alignment scope {scope!r}")
    return MultimodalSummary(tuple(out), pairing, scope)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        solver=cfg["solver"], beta=cfg["ipot_beta"], outer_iters=cfg["ipot_outer_iters"],
        inner_iters=cfg["ipot_inner_iters"], lam=cfg["sinkhorn_lambda"], tol=cfg["sinkhorn_tol"],
        max_iter=cfg["sinkhorn_max_iter"],
    )


class _Stages:
    """Runs stages, tags failures with the stage name and records wall time."""

    def __init__(self):
        self.timing: dict[str, float] = {}

    def run(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except errors.MMSummError as exc:
            exc.context.setdefault("stage", name)
            raise
        finally:
            self.timing[name] = time.perf_counter() - t0


def _floats(x) -> list:
    return [float(v) for v in np.asarray(x, dtype=np.float64).ravel()]


def _scene_frames(m: Manifest, start: int, stop: int) -> tuple[np.ndarray, np.ndarray | None, int]:
    first = sum(f.shape[0] for f in m.shot_frames[:start])
    frames = np.concatenate(m.shot_frames[start:stop], axis=0)
    sharp = None if m.sharpness is None else m.sharpness[first:first + frames.shape[0]]
    return frames, sharp, first


def scene_stage(shots, spans, cfg: dict, st: _Stages | None = None):
    """Scene segmentation with the configured window, threshold and scorer."""
    st = st or _Stages()
    return st.run("video_seg", segment_video, ShotSequence(shots, spans), cfg["boundary_window"],
                  cfg["boundary_threshold"], LogisticBoundaryScorer(cfg["boundary_kappa"]))


def video_stage(m: Manifest, st: _Stages | None = None) -> tuple[dict, list[list[KeyframeChoice]]]:
    st = st or _Stages()
    cfg = m.config
    seg, scores = scene_stage(m.shots, m.spans, cfg, st)
    keyframes: list[list[KeyframeChoice]] = []
    scene_reports = []

    def visual():
        for s, (a, b) in enumerate(seg.scenes):
            frames, sharp, first = _scene_frames(m, a, b)
            imp = score_frames(FrameFeatures(frames, sharp))
            cands = select_keyframes(imp, cfg["keyframes_per_scene"])
            keyframes.append([KeyframeChoice(s, first + i, sc, frames[i]) for i, sc in cands.ranked])
            scene_reports.append({
                "shots": [a, b],
                "frames": [first, first + frames.shape[0]],
                "importance": _floats(imp),
                "keyframes": [{"frame": first + i, "score": sc} for i, sc in cands.ranked],
            })

    st.run("visual_sum", visual)
    report = {
        "boundary_scores": _floats(scores),
        "boundary_flags": list(seg.boundary_flags),
        "scenes": scene_reports,
    }
    return report, keyframes


def segment_stage(m: Manifest, st: _Stages | None = None) -> tuple[SentenceSequence, TextSegmentation]:
    """Topic segmentation of the manifest sentences with the configured policy."""
    st = st or _Stages()
    cfg = m.config
    seq = SentenceSequence(tuple(m.sentences), m.sentence_embeddings, m.item_id)
    tseg = st.run("text_seg", segment_sentences, seq, cfg["text_window"], cfg["text_policy"],
                  cfg["text_threshold"], cfg["text_count"])
    return seq, tseg


def text_stage(m: Manifest, st: _Stages | None = None, client=None) -> tuple[dict, list[TextCandidates]]:
    st = st or _Stages()
    cfg = m.config
    seq, tseg = segment_stage(m, st)
    parts = [(seq.slice(a, b), a) for a, b in tseg.segments]

    def summarize():
        n = cfg["text_candidates"]
        if cfg["summarizer"] == "abstractive":
            return abstractive_candidates(parts, AdapterConfig.from_dict(cfg["adapter"]), n, client)
        return [extractive_candidates(p, n, off) for p, off in parts]

    cands = st.run("text_sum", summarize)
    report = {
        "depth_scores": list(tseg.depth_scores),
        "segments": [
            {
                "sentences": [a, b],
                "candidates": [
                    {"indices": list(c.indices), "text": c.text, "score": c.score,
                     "provenance": c.provenance}
                    for c in tc.ranked
                ],
            }
            for (a, b), tc in zip(tseg.segments, cands)
        ],
    }
    return report, cands


def _pair_report(p: PairSummary) -> dict:
    return {
        "scene": p.scene,
        "segment": p.segment,
        "keyframe": p.keyframe.frame,
        "text": p.text.text,
        "text_indices": list(p.text.indices),
        "candidate": list(p.choice),
        "distance": p.distance,
        "distances": [_floats(row) for row in p.distances],
    }


def evaluate_summary(m: Manifest, texts: Sequence[str], frames: Sequence[int]) -> dict:
    """Scores against the manifest references; empty if there are none.

    Text scores compare the chosen texts joined in order with the reference
    summary. ``cos`` averages, over reference images, the best cosine
    similarity (percent) achieved by any chosen frame.
    """
    out: dict = {}
    if m.reference_summary is not None and texts:
        out.update(metrics.rouge_report(" ".join(texts), m.reference_summary))
    if m.reference_images is not None and frames and m.shot_frames is not None:
        allf = m.frames
        best = [max(metrics.cosine_image_similarity(allf[f], ref) for f in frames)
                for ref in m.reference_images]
        out["cos"] = float(np.mean(best))
    return out


def run_pipeline(m: Manifest, client=None, timing: bool = False) -> tuple[MultimodalSummary | None, dict]:
    """Run every stage on a validated manifest.

    Returns the summary and the report. A manifest with only one modality is
    routed to :func:`unimodal_fallback` and the summary is ``None``.
    """
    if not (m.has_video and m.has_text):
        mode = "text-only" if m.has_text else "video-only"
        result = unimodal_fallback(m, mode)
        report = {"config": dict(m.config), "id": m.item_id, "mode": mode, "summary": result}
        report["metrics"] = evaluate_summary(m, result.get("texts", []), result.get("frames", []))
        return None, report

    st = _Stages()
    video, keyframes = video_stage(m, st)
    text, cands = text_stage(m, st, client)
    cfg = m.config
    pairing = st.run("pairing", pair_segments,
                     [tuple(s["shots"]) for s in video["scenes"]],
                     [tuple(s["sentences"]) for s in text["segments"]], cfg["pairing"])
    summary = st.run("align", select_summary, pairing, keyframes, cands, solver_config(cfg),
                     cfg["align_scope"], cfg["workers"])
    report = {
        "config": dict(m.config),
        "id": m.item_id,
        "mode": "multimodal",
        "video": video,
        "text": text,
        "pairing": {
            "policy": pairing.policy,
            "pairs": [list(p) for p in pairing.pairs],
            "unpaired_scenes": list(pairing.unpaired_scenes),
            "unpaired_segments": list(pairing.unpaired_segments),
        },
        "summary": {
            "scope": summary.scope,
            "pairs": [_pair_report(p) for p in summary.pairs],
            "texts": [p.text.text for p in summary.pairs],
            "frames": [p.keyframe.frame for p in summary.pairs],
        },
    }
    report["metrics"] = evaluate_summary(m, report["summary"]["texts"], report["summary"]["frames"])
    if timing:
        report["timing"] = dict(st.timing)
    return summary, report


def _closest(x: np.ndarray, members: np.ndarray, centroid: np.ndarray) -> int:
    d = np.sum((x[members] - centroid) ** 2, axis=1)
    return int(members[int(np.argmin(d))])


def unimodal_fallback(m: Manifest, mode: str) -> dict:
    """Cluster the available modality and pick one representative per cluster.

    ``k = min(fallback_clusters, item count)``. Text: the sentence closest to
    each centroid. Video: the sharpest frame of each cluster when sharpness is
    given, else the frame closest to the centroid. Ties go to the lower index
    and picks are returned in document/video order.
    """
    cfg = m.config
    if mode == "text-only":
        if not m.has_text:
            raise errors.MissingModality("text-only summary needs sentences")
        x = np.asarray(m.sentence_embeddings, dtype=np.float64)
    elif mode == "video-only":
        if not m.has_video:
            raise errors.MissingModality("video-only summary needs frames")
        x = m.frames.astype(np.float64)
    else:
        raise errors.InvalidPolicy(f"unknown fallback mode {mode!r}")
    k = min(cfg["fallback_clusters"], x.shape[0])
    ca = kmeans(x, k, cfg["seed"], cfg["kmeans_max_iter"])
    picks = []
    for c in range(k):
        members = np.flatnonzero(ca.labels == c)
        if members.size == 0:
            continue
        if mode == "video-only" and m.sharpness is not None:
            s = m.sharpness[members]
            picks.append(int(members[int(np.argmax(s))]))
        else:
            picks.append(_closest(x, members, ca.centroids[c]))
    picks.sort()
    out = {"clusters": [int(v) for v in ca.labels], "inertia": ca.inertia, "k": k}
    if mode == "text-only":
        out["sentences"] = picks
        out["texts"] = [m.sentences[i] for i in picks]
    else:
        out["frames"] = picks
    return out
