"""Command-line interface: ``mmsumm <command> [options]``.

Every command writes one JSON report to ``--out`` (default stdout) and exits
with 0 on success, 1 on invalid input (bad manifest, bad files, bad flags) and
2 on a runtime failure (solver, adapter, failed oracle check). Errors are
written to stderr as a JSON object. ``MHMS_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, align, errors, kernels, manifest, metrics, report
from .embfile import read_embeddings
from .oracle import OracleSettings, run_oracle_check
from .ot import EmbeddingSet, argmin_pair, pairwise_alignment_matrix

logger = logging.getLogger("mmsumm")

SCHEMA_HELP = """\
Manifest (JSON, version 1; paths relative to the manifest file):
  {"version": 1, "id": "...",
   "video": {"shots": "shots.mheb",
             "frames": "frames.mheb", "shot_offsets": [0, ...]   | "shot_frames": ["s0.mheb", ...],
             "sharpness": "sharpness.mheb" (optional)},
   "text": {"sentences": "doc.txt", "embeddings": "doc.mheb"},
   "references": {"summary": "ref.txt", "image": "img.mheb"} (optional),
   "config": {...overrides, see `mmsumm config`...}}
Embedding files (.mheb): b"MHEB", u32 version=1, u64 rows, u64 dim, float32 LE row-major.
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{SCHEMA_HELP}")
        raise SystemExit(1)


class _UsageError(errors.ValidationError):
    code = "UsageError"


def _emit(doc, out: str | None):
    text = report.dumps(doc)
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    tmp = f"{out}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, out)


def _load(args) -> manifest.Manifest:
    return manifest.validate_manifest(args.manifest, strict=not args.lenient)


def _explicit(args, video: bool = False, text: bool = False) -> manifest.Manifest:
    """Build an in-memory manifest from ``--shots``/``--sentences``-style flags."""
    doc: dict = {"version": 1, "id": "", "config": _config_file(args)}
    cwd = Path.cwd()
    if video:
        if not args.shots:
            raise _UsageError("give --manifest or --shots")
        v = {"shots": args.shots, "frames": args.frames}
        try:
            v["shot_offsets"] = [int(x) for x in (args.shot_offsets or "").split(",") if x.strip()]
        except ValueError:
            raise _UsageError("--shot-offsets must be comma-separated integers")
        if args.sharpness:
            v["sharpness"] = args.sharpness
        doc["video"] = v
    if text:
        if not (args.sentences and args.embeddings):
            raise _UsageError("give --manifest or both --sentences and --embeddings")
        doc["text"] = {"sentences": args.sentences, "embeddings": args.embeddings}
    return manifest.manifest_from_dict(doc, cwd, None, strict=not args.lenient)


def _manifest_or_flags(args, video=False, text=False) -> manifest.Manifest:
    return _load(args) if args.manifest else _explicit(args, video, text)


def _base(m: manifest.Manifest, command: str) -> dict:
    return {"command": command, "config": dict(m.config), "id": m.item_id, "version": __version__}


# -- commands -----------------------------------------------------------------


def _config_file(args) -> dict:
    over = {}
    if args.config:
        try:
            over = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read --config: {exc}")
    cfg, issues, _ = manifest.merge_config(over, strict=not args.lenient)
    if issues:
        raise errors.ManifestError(issues)
    return cfg


def cmd_segment_video(args) -> dict:
    if args.manifest:
        m = _load(args)
        if not m.has_video:
            raise errors.MissingModality("manifest has no video section")
        shots, spans, doc = m.shots, m.spans, _base(m, "segment-video")
    else:
        if not args.shots:
            raise _UsageError("give --manifest or --shots")
        shots, spans = read_embeddings(args.shots).astype(np.float64), None
        doc = {"command": "segment-video", "config": _config_file(args), "id": "",
               "version": __version__}
    seg, scores = align.scene_stage(shots, spans, doc["config"])
    doc["video"] = {"boundary_scores": [float(x) for x in scores],
                    "boundary_flags": list(seg.boundary_flags),
                    "scenes": [list(r) for r in seg.scenes]}
    return doc


def cmd_summarize_video(args) -> dict:
    m = _manifest_or_flags(args, video=True)
    if not m.has_video:
        raise errors.MissingModality("manifest has no video section")
    doc = _base(m, "summarize-video")
    doc["video"], _ = align.video_stage(m)
    return doc


def cmd_segment_text(args) -> dict:
    m = _manifest_or_flags(args, text=True)
    if not m.has_text:
        raise errors.MissingModality("manifest has no text section")
    _, tseg = align.segment_stage(m)
    doc = _base(m, "segment-text")
    doc["text"] = {"depth_scores": [float(x) for x in tseg.depth_scores],
                   "segments": [list(r) for r in tseg.segments]}
    return doc


def cmd_summarize_text(args) -> dict:
    m = _manifest_or_flags(args, text=True)
    if not m.has_text:
        raise errors.MissingModality("manifest has no text section")
    doc = _base(m, "summarize-text")
    doc["text"], _ = align.text_stage(m)
    return doc


def cmd_align(args) -> dict:
    if args.manifest:
        m = _load(args)
        if not (m.has_video and m.has_text):
            raise errors.MissingModality("align needs both video and text")
        _, full = align.run_pipeline(m)
        doc = _base(m, "align")
        doc["pairing"] = full["pairing"]
        doc["summary"] = full["summary"]
        return doc
    if not (args.keyframes and args.candidates):
        raise _UsageError("give --manifest or both --keyframes and --candidates")
    cfg = _config_file(args)
    kf = read_embeddings(args.keyframes).astype(np.float64)
    tc = read_embeddings(args.candidates).astype(np.float64)
    d = pairwise_alignment_matrix([EmbeddingSet(r[None, :]) for r in kf],
                                  [EmbeddingSet(r[None, :]) for r in tc],
                                  align.solver_config(cfg), cfg["workers"])
    i, j = argmin_pair(d)
    return {"command": "align", "config": cfg, "version": __version__,
            "distances": [[float(v) for v in row] for row in d],
            "choice": [i, j], "distance": float(d[i, j])}


def cmd_pipeline(args) -> dict:
    m = _load(args)
    _, rep = align.run_pipeline(m, timing=args.timing)
    doc = _base(m, "pipeline")
    doc.update(rep)
    return doc


def cmd_evaluate(args) -> dict:
    if args.manifest:
        m = _load(args)
        _, rep = align.run_pipeline(m)
        doc = _base(m, "evaluate")
        doc["summary"] = rep["summary"]
        doc["metrics"] = rep["metrics"]
        return doc
    out: dict = {}
    if args.candidate or args.reference:
        if not (args.candidate and args.reference):
            raise _UsageError("--candidate and --reference go together")
        cand = Path(args.candidate).read_text(encoding="utf-8")
        ref = Path(args.reference).read_text(encoding="utf-8")
        out.update(metrics.rouge_report(cand, ref))
    if args.image or args.ref_image:
        if not (args.image and args.ref_image):
            raise _UsageError("--image and --ref-image go together")
        a = read_embeddings(args.image).astype(np.float64)
        b = read_embeddings(args.ref_image).astype(np.float64)
        if a.shape != b.shape:
            raise errors.ShapeMismatch(f"image embeddings {a.shape} vs references {b.shape}")
        out["cos"] = [metrics.cosine_image_similarity(x, y) for x, y in zip(a, b)]
    if not out:
        raise _UsageError("nothing to evaluate: give --manifest, --candidate/--reference or --image/--ref-image")
    return {"command": "evaluate", "metrics": out, "version": __version__}


class OracleFailed(errors.RuntimeFailure):
    code = "OracleCheckFailed"


def cmd_oracle_check(args) -> dict:
    s = OracleSettings(trials=args.trials, seed=args.seed, max_size=args.max_size)
    res = run_oracle_check(s)
    doc = {
        "command": "oracle-check",
        "settings": {"trials": s.trials, "seed": s.seed, "max_size": s.max_size, "dim": s.dim,
                     "beta": s.beta, "outer_iters": s.outer_iters, "inner_iters": s.inner_iters,
                     "lambda": s.lam, "gap_tol": s.gap_tol, "residual_tol": s.residual_tol},
        "backend": kernels.BACKEND,
        "passed": res["passed"],
        "worst": res["worst"],
        "trials": res["trials"],
        "version": __version__,
    }
    if args.timing:
        doc["elapsed"] = res["elapsed"]
    return doc


def cmd_config(args) -> dict:
    return {"command": "config", "defaults": manifest.default_config(), "version": __version__}


# -- wiring -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmsumm", description="Multimodal summarization engine.",
                epilog=SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, manifest_flag=True):
        if manifest_flag:
            sp.add_argument("--manifest", help="manifest JSON file")
            sp.add_argument("--config", help="JSON file of config overrides (explicit-file mode)")
            sp.add_argument("--lenient", action="store_true",
                            help="warn about unknown keys instead of failing")
        sp.add_argument("--out", help="report path (default: stdout)")
        sp.add_argument("--backend", choices=kernels.available_backends(),
                        help="kernel backend (default: compiled when built)")

    def video_flags(sp, frames):
        sp.add_argument("--shots", help="shot features (.mheb)")
        if frames:
            sp.add_argument("--frames", help="frame features (.mheb), all shots concatenated")
            sp.add_argument("--shot-offsets", help="comma-separated first-frame index of each shot")
            sp.add_argument("--sharpness", help="per-frame sharpness (.mheb, dim 1)")

    def text_flags(sp):
        sp.add_argument("--sentences", help="UTF-8 text, one sentence per line")
        sp.add_argument("--embeddings", help="sentence embeddings (.mheb)")

    sp = sub.add_parser("segment-video", help="split shots into scenes")
    common(sp)
    video_flags(sp, frames=False)
    sp.set_defaults(func=cmd_segment_video)

    sp = sub.add_parser("summarize-video", help="scenes plus ranked keyframes")
    common(sp)
    video_flags(sp, frames=True)
    sp.set_defaults(func=cmd_summarize_video)

    sp = sub.add_parser("segment-text", help="split sentences into topic segments")
    common(sp)
    text_flags(sp)
    sp.set_defaults(func=cmd_segment_text)

    sp = sub.add_parser("summarize-text", help="segments plus ranked text candidates")
    common(sp)
    text_flags(sp)
    sp.set_defaults(func=cmd_summarize_text)

    sp = sub.add_parser("align", help="OT distances between keyframe and text candidates")
    common(sp)
    sp.add_argument("--keyframes", help="keyframe embeddings (.mheb), one candidate per row")
    sp.add_argument("--candidates", help="text candidate embeddings (.mheb), one per row")
    sp.set_defaults(func=cmd_align)

    sp = sub.add_parser("pipeline", help="full multimodal summary for a manifest")
    common(sp)
    sp.add_argument("--timing", action="store_true", help="add per-stage wall time to the report")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("evaluate", help="ROUGE and image similarity")
    common(sp)
    sp.add_argument("--candidate", help="candidate summary text file")
    sp.add_argument("--reference", help="reference summary text file")
    sp.add_argument("--image", help="chosen image embeddings (.mheb)")
    sp.add_argument("--ref-image", help="reference image embeddings (.mheb), row-aligned")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("oracle-check", help="compare OT solvers with the exact LP on random instances")
    common(sp, manifest_flag=False)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-size", type=int, default=10, help="largest K and M")
    sp.add_argument("--timing", action="store_true", help="add elapsed time to the report")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("config", help="print the configuration defaults table")
    common(sp, manifest_flag=False)
    sp.set_defaults(func=cmd_config)
    return p


def _setup_logging():
    level = os.environ.get("MHMS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(exc: errors.MMSummError) -> None:
    sys.stderr.write(json.dumps({"error": exc.to_dict()}, sort_keys=True, default=str) + "\n")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.backend:
        kernels.use_backend(args.backend)
    try:
        doc = args.func(args)
        _emit(doc, args.out)
    except errors.ValidationError as exc:
        _fail(exc)
        return 1
    except errors.MMSummError as exc:
        _fail(exc)
        return 2
    except OSError as exc:
        _fail(errors.ValidationError(f"I/O error: {exc}"))
        return 1
    if args.func is cmd_oracle_check and not doc["passed"]:
        _fail(OracleFailed("solver disagrees with the LP oracle beyond tolerance", worst=doc["worst"]))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
