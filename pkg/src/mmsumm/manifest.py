"""Manifest loading, validation and the configuration defaults table.

A manifest is a JSON file; relative paths resolve against its directory::

    {
      "version": 1,
      "id": "item-0001",
      "video": {
        "shots": "shots.mheb",              # one row per shot
        "frames": "frames.mheb",            # all frames, shot-major ...
        "shot_offsets": [0, 3, 5],          # ... with each shot's first frame
        "shot_frames": ["s0.mheb", ...],    # or: one frame file per shot
        "sharpness": "sharpness.mheb",      # optional, one row (dim 1) per frame
        "spans": [[0, 74], [75, 140], ...]  # optional frame spans per shot
      },
      "text": {"sentences": "doc.txt", "embeddings": "doc.mheb"},
      "references": {"summary": "ref.txt", "image": "ref_img.mheb"},
      "config": {"keyframes_per_scene": 2}
    }

``video`` or ``text`` may be omitted for single-modality runs. Validation
collects every problem before raising one :class:`~mmsumm.errors.ManifestError`.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embfile, errors
from .metrics import tokenize

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1

# key: (default, kind, allowed)
CONFIG_SPEC: dict[str, tuple] = {
    "boundary_window": (2, "int>=1", None),
    "boundary_threshold": (0.5, "prob", None),
    "boundary_kappa": (10.0, "float>0", None),
    "scorer_stride": (None, "int>=1|null", None),
    "text_window": (2, "int>=1", None),
    "text_threshold": (0.4, "float", None),
    "text_policy": ("threshold", "enum", ("threshold", "count")),
    "text_count": (None, "int>=0|null", None),
    "text_scorer": ("depth", "enum", ("depth", "transformer")),
    "keyframes_per_scene": (3, "int>=1", None),
    "text_candidates": (3, "int>=1", None),
    "summarizer": ("extractive", "enum", ("extractive", "abstractive")),
    "adapter": ({}, "object", None),
    "solver": ("ipot", "enum", ("ipot", "sinkhorn")),
    "ipot_beta": (0.5, "float>0", None),
    "ipot_outer_iters": (200, "int>=1", None),
    "ipot_inner_iters": (1, "int>=1", None),
    "sinkhorn_lambda": (0.1, "float>0", None),
    "sinkhorn_tol": (1e-8, "float>0", None),
    "sinkhorn_max_iter": (2000, "int>=1", None),
    "pairing": ("index", "enum", ("index", "proportional")),
    "align_scope": ("segment", "enum", ("segment", "global")),
    "seed": (0, "seed", None),
    "fallback_clusters": (3, "int>=1", None),
    "kmeans_max_iter": (100, "int>=1", None),
    "workers": (1, "int>=1", None),
}

ADAPTER_KEYS = {"command", "address", "timeout", "parallelism", "fallback"}

# Input limits applied when a transformer text scorer is declared.
TRANSFORMER_MAX_SENTENCES = 128
TRANSFORMER_MAX_TOKENS = 64


def default_config() -> dict:
    return {k: (dict(v[0]) if isinstance(v[0], dict) else v[0]) for k, v in CONFIG_SPEC.items()}


def _check_value(key: str, value, kind: str, allowed) -> str | None:
    is_int = isinstance(value, int) and not isinstance(value, bool)
    is_num = (is_int or isinstance(value, float)) and not isinstance(value, bool)
    if kind == "enum":
        return None if value in allowed else f"must be one of {list(allowed)}"
    if kind == "object":
        if not isinstance(value, dict):
            return "must be an object"
        extra = sorted(set(value) - ADAPTER_KEYS)
        return f"unknown adapter keys {extra}" if extra else None
    if kind.endswith("|null"):
        if value is None:
            return None
        kind = kind[:-5]
    if kind == "int>=1":
        return None if is_int and value >= 1 else "must be an integer >= 1"
    if kind == "int>=0":
        return None if is_int and value >= 0 else "must be an integer >= 0"
    if kind == "float>0":
        return None if is_num and np.isfinite(value) and value > 0 else "must be a positive number"
    if kind == "float":
        return None if is_num and np.isfinite(value) else "must be a finite number"
    if kind == "prob":
        return None if is_num and 0 < value < 1 else "must be a number in (0, 1)"
    if kind == "seed":
        return None if is_int and 0 <= value < 2**64 else "must be an integer in [0, 2**64)"
    raise AssertionError(kind)


def merge_config(overrides: dict | None, strict: bool = True) -> tuple[dict, list[dict], list[str]]:
    """Fill defaults; return ``(config, issues, warnings)``."""
    cfg = default_config()
    issues: list[dict] = []
    warnings: list[str] = []
    for key, value in (overrides or {}).items():
        if key not in CONFIG_SPEC:
            if strict:
                issues.append(_issue("UnknownKey", f"unknown config key {key!r}", f"config.{key}"))
            else:
                warnings.append(f"ignoring unknown config key {key!r}")
            continue
        _, kind, allowed = CONFIG_SPEC[key]
        problem = _check_value(key, value, kind, allowed)
        if problem:
            issues.append(_issue("BadValue", f"config.{key} {problem} (got {value!r})", f"config.{key}"))
        else:
            cfg[key] = value
    return cfg, issues, warnings


def _issue(code: str, message: str, where: str, **extra) -> dict:
    return {"code": code, "message": message, "path": where, **extra}


@dataclass(eq=False)
class Manifest:
    path: Path | None
    version: int
    item_id: str
    config: dict
    shots: np.ndarray | None = None
    shot_frames: list[np.ndarray] | None = None
    sharpness: np.ndarray | None = None
    spans: list[tuple[int, int]] | None = None
    sentences: list[str] | None = None
    sentence_embeddings: np.ndarray | None = None
    reference_summary: str | None = None
    reference_images: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def has_video(self) -> bool:
        return self.shots is not None

    @property
    def has_text(self) -> bool:
        return self.sentences is not None

    @property
    def frames(self) -> np.ndarray:
        return np.concatenate(self.shot_frames, axis=0)


class _Loader:
    def __init__(self, base: Path):
        self.base = base
        self.issues: list[dict] = []

    def fail(self, code, message, where, **extra):
        self.issues.append(_issue(code, message, where, **extra))

    def resolve(self, rel, where) -> Path | None:
        if not isinstance(rel, str) or not rel:
            self.fail("BadValue", f"{where} must be a file path string", where)
            return None
        p = Path(rel)
        p = p if p.is_absolute() else self.base / p
        if not p.is_file():
            self.fail("MissingFile", f"{where}: file not found: {p}", where, file=str(p))
            return None
        return p

    def matrix(self, rel, where) -> np.ndarray | None:
        p = self.resolve(rel, where)
        if p is None:
            return None
        try:
            return embfile.read_embeddings(p).astype(np.float64)
        except errors.EmbeddingFormatError as exc:
            self.fail(exc.code, f"{where}: {exc}", where, file=str(p))
        return None

    def text_lines(self, rel, where) -> list[str] | None:
        p = self.resolve(rel, where)
        if p is None:
            return None
        try:
            raw = p.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            self.fail("ParseError", f"{where}: not UTF-8 ({exc})", where, file=str(p))
            return None
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        lines = [ln.rstrip("\r") for ln in lines]
        blank = [i for i, ln in enumerate(lines) if not ln.strip()]
        if blank:
            self.fail("BlankSentence", f"{where}: line {blank[0] + 1} is blank", where, line=blank[0] + 1)
        return lines


def validate_manifest(path, strict: bool = True) -> Manifest:
    """Load and check a manifest; raise ManifestError with every violation."""
    path = Path(path)
    if not path.is_file():
        raise errors.ManifestError([_issue("MissingFile", f"manifest not found: {path}", "$")])
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise errors.ManifestError([_issue("ParseError", f"manifest is not valid JSON: {exc}", "$")])
    if not isinstance(doc, dict):
        raise errors.ManifestError([_issue("ParseError", "manifest must be a JSON object", "$")])
    return manifest_from_dict(doc, path.parent, path, strict)


def manifest_from_dict(doc: dict, base: Path, path: Path | None = None, strict: bool = True) -> Manifest:
    ld = _Loader(Path(base))
    known = {"version", "id", "video", "text", "references", "config"}
    for key in sorted(set(doc) - known):
        if strict:
            ld.fail("UnknownKey", f"unknown manifest key {key!r}", key)
    version = doc.get("version")
    if version != MANIFEST_VERSION:
        ld.fail("VersionUnsupported", f"manifest version {version!r} (supported: {MANIFEST_VERSION})", "version")
    item_id = doc.get("id", "")
    if not isinstance(item_id, str):
        ld.fail("BadValue", "id must be a string", "id")
        item_id = ""

    cfg_over = doc.get("config", {})
    if not isinstance(cfg_over, dict):
        ld.fail("BadValue", "config must be an object", "config")
        cfg_over = {}
    config, cfg_issues, warnings = merge_config(cfg_over, strict)
    ld.issues.extend(cfg_issues)
    for w in warnings:
        logger.warning(w)

    m = Manifest(path, version, item_id, config, warnings=warnings)
    video, text = doc.get("video"), doc.get("text")
    if video is None and text is None:
        ld.fail("MissingField", "manifest needs a video or a text section (or both)", "$")
    if video is not None:
        _load_video(ld, video, m, strict)
    if text is not None:
        _load_text(ld, text, m, strict)
    refs = doc.get("references")
    if refs is not None:
        _load_refs(ld, refs, m, strict)

    if m.shot_frames is not None and m.sentence_embeddings is not None:
        df, dt = m.shot_frames[0].shape[1], m.sentence_embeddings.shape[1]
        if df != dt:
            ld.fail("DimensionMismatch",
                    f"frame features have dim {df} but sentence embeddings have dim {dt}; "
                    "alignment needs a shared space", "video.frames", frame_dim=df, text_dim=dt)
    if m.reference_images is not None and m.shot_frames is not None:
        if m.reference_images.shape[1] != m.shot_frames[0].shape[1]:
            ld.fail("DimensionMismatch", "reference image embeddings and frame features differ in dim",
                    "references.image")
    if config["text_scorer"] == "transformer" and m.sentences is not None:
        if len(m.sentences) > TRANSFORMER_MAX_SENTENCES:
            ld.fail("LimitExceeded", f"{len(m.sentences)} sentences exceed the transformer limit "
                    f"of {TRANSFORMER_MAX_SENTENCES}", "text.sentences")
        long = [i for i, s in enumerate(m.sentences) if len(tokenize(s)) > TRANSFORMER_MAX_TOKENS]
        if long:
            ld.fail("LimitExceeded", f"sentence {long[0]} exceeds {TRANSFORMER_MAX_TOKENS} tokens",
                    "text.sentences", line=long[0] + 1)
    if ld.issues:
        raise errors.ManifestError(ld.issues)
    return m


def _unknown(ld, section: dict, allowed: set, where: str, strict: bool):
    for key in sorted(set(section) - allowed):
        if strict:
            ld.fail("UnknownKey", f"unknown key {key!r} in {where}", f"{where}.{key}")


def _load_video(ld: _Loader, v, m: Manifest, strict: bool):
    if not isinstance(v, dict):
        ld.fail("BadValue", "video must be an object", "video")
        return
    _unknown(ld, v, {"shots", "frames", "shot_offsets", "shot_frames", "sharpness", "spans"}, "video", strict)
    if "shots" not in v:
        ld.fail("MissingField", "video.shots is required", "video.shots")
        return
    shots = ld.matrix(v["shots"], "video.shots")
    if shots is not None and shots.shape[0] == 0:
        ld.fail("EmptyInput", "video.shots has no rows", "video.shots")
        shots = None
    n = None if shots is None else shots.shape[0]
    frames_per_shot = None
    if "shot_frames" in v:
        if "frames" in v or "shot_offsets" in v:
            ld.fail("BadValue", "give either shot_frames or frames + shot_offsets, not both", "video")
        lst = v["shot_frames"]
        if not isinstance(lst, list) or not lst:
            ld.fail("BadValue", "video.shot_frames must be a nonempty list of paths", "video.shot_frames")
        else:
            loaded = [ld.matrix(p, f"video.shot_frames[{i}]") for i, p in enumerate(lst)]
            if n is not None and len(lst) != n:
                ld.fail("CountMismatch", f"{len(lst)} shot frame files for {n} shots",
                        "video.shot_frames", expected=n, actual=len(lst))
            if all(x is not None for x in loaded):
                empty = [i for i, x in enumerate(loaded) if x.shape[0] == 0]
                if empty:
                    ld.fail("EmptyInput", f"shot {empty[0]} has no frames", f"video.shot_frames[{empty[0]}]")
                else:
                    frames_per_shot = loaded
    elif "frames" in v:
        frames = ld.matrix(v["frames"], "video.frames")
        offsets = v.get("shot_offsets")
        if not isinstance(offsets, list) or not all(isinstance(o, int) and not isinstance(o, bool) for o in offsets):
            ld.fail("MissingField", "video.shot_offsets (list of ints) is required with video.frames",
                    "video.shot_offsets")
        elif frames is not None:
            if n is not None and len(offsets) != n:
                ld.fail("CountMismatch", f"{len(offsets)} shot offsets for {n} shots",
                        "video.shot_offsets", expected=n, actual=len(offsets))
            elif not offsets or offsets[0] != 0 or any(b <= a for a, b in zip(offsets, offsets[1:])) \
                    or offsets[-1] >= frames.shape[0]:
                ld.fail("BadValue", "shot_offsets must start at 0, increase strictly and stay below "
                        f"the frame count ({frames.shape[0]})", "video.shot_offsets")
            else:
                edges = list(offsets) + [frames.shape[0]]
                frames_per_shot = [frames[edges[i]:edges[i + 1]] for i in range(len(offsets))]
    else:
        ld.fail("MissingField", "video needs frames + shot_offsets or shot_frames", "video")
    if frames_per_shot is not None:
        dims = {f.shape[1] for f in frames_per_shot}
        if len(dims) != 1:
            ld.fail("DimensionMismatch", f"frame files disagree on dimension: {sorted(dims)}", "video")
            frames_per_shot = None
    total = None if frames_per_shot is None else sum(f.shape[0] for f in frames_per_shot)
    if "sharpness" in v:
        sharp = ld.matrix(v["sharpness"], "video.sharpness")
        if sharp is not None:
            if sharp.shape[1] != 1:
                ld.fail("BadValue", "sharpness file must have dimension 1", "video.sharpness")
            elif total is not None and sharp.shape[0] != total:
                ld.fail("CountMismatch", f"{sharp.shape[0]} sharpness rows for {total} frames",
                        "video.sharpness", expected=total, actual=sharp.shape[0])
            elif not np.isfinite(sharp).all() or (sharp < 0).any():
                ld.fail("BadValue", "sharpness must be finite and nonnegative", "video.sharpness")
            else:
                m.sharpness = sharp[:, 0]
    if "spans" in v:
        spans = v["spans"]
        ok = isinstance(spans, list) and all(
            isinstance(s, list) and len(s) == 2 and all(isinstance(x, int) for x in s) for s in spans)
        if not ok:
            ld.fail("BadValue", "spans must be a list of [start, end] integer pairs", "video.spans")
        elif n is not None and len(spans) != n:
            ld.fail("CountMismatch", f"{len(spans)} spans for {n} shots", "video.spans",
                    expected=n, actual=len(spans))
        elif any(e < s for s, e in spans) or any(b[0] < a[1] for a, b in zip(spans, spans[1:])):
            ld.fail("BadValue", "spans must be ordered and non-overlapping", "video.spans")
        else:
            m.spans = [tuple(s) for s in spans]
    m.shots = shots
    m.shot_frames = frames_per_shot
    if shots is None or frames_per_shot is None:
        m.shots = None


def _load_text(ld: _Loader, t, m: Manifest, strict: bool):
    if not isinstance(t, dict):
        ld.fail("BadValue", "text must be an object", "text")
        return
    _unknown(ld, t, {"sentences", "embeddings"}, "text", strict)
    for key in ("sentences", "embeddings"):
        if key not in t:
            ld.fail("MissingField", f"text.{key} is required", f"text.{key}")
    if "sentences" not in t or "embeddings" not in t:
        return
    sents = ld.text_lines(t["sentences"], "text.sentences")
    emb = ld.matrix(t["embeddings"], "text.embeddings")
    if sents is not None and not sents:
        ld.fail("EmptyInput", "text.sentences has no sentences", "text.sentences")
        return
    if sents is not None and emb is not None:
        if len(sents) != emb.shape[0]:
            ld.fail("CountMismatch",
                    f"{len(sents)} sentences but {emb.shape[0]} embedding rows",
                    "text", sentences=len(sents), embedding_rows=int(emb.shape[0]))
            return
        m.sentences = sents
        m.sentence_embeddings = emb


def _load_refs(ld: _Loader, r, m: Manifest, strict: bool):
    if not isinstance(r, dict):
        ld.fail("BadValue", "references must be an object", "references")
        return
    _unknown(ld, r, {"summary", "image"}, "references", strict)
    if "summary" in r:
        p = ld.resolve(r["summary"], "references.summary")
        if p is not None:
            text = p.read_text(encoding="utf-8")
            if not tokenize(text):
                ld.fail("EmptyReference", "reference summary has no tokens", "references.summary")
            else:
                m.reference_summary = text
    if "image" in r:
        m.reference_images = ld.matrix(r["image"], "references.image")


def relpath(p: Path | None) -> str | None:
    return None if p is None else os.fspath(p)
