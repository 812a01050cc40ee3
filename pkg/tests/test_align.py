from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsumm import errors, toy
from mmsumm.align import (
    KeyframeChoice, pair_segments, run_pipeline, select_summary, unimodal_fallback,
)
from mmsumm.embfile import write_embeddings
from mmsumm.manifest import validate_manifest
from mmsumm.ot import EmbeddingSet, SolverConfig, cosine_cost, ipot_align_distance, lp_oracle
from mmsumm.text_sum import TextCandidate, TextCandidates
from conftest import unit_rows

SIMPLE = SolverConfig()


def kf(scene, vecs, start=0):
    return [KeyframeChoice(scene, start + i, 1.0, np.asarray(v, float)) for i, v in enumerate(vecs)]


def tc(vecs, start=0):
    return TextCandidates(tuple(TextCandidate((start + i,), f"t{start + i}", 1.0, "extractive", np.asarray(v, float))
                                for i, v in enumerate(vecs)))


def write_item(tmp_path, shots, frames, offsets, sentences, emb, config=None, sharp=None):
    write_embeddings(shots, tmp_path / "shots.mheb")
    write_embeddings(frames, tmp_path / "frames.mheb")
    (tmp_path / "s.txt").write_text("\n".join(sentences) + "\n")
    write_embeddings(emb, tmp_path / "s.mheb")
    doc = {"version": 1, "id": "t", "config": config or {},
           "video": {"shots": "shots.mheb", "frames": "frames.mheb", "shot_offsets": offsets},
           "text": {"sentences": "s.txt", "embeddings": "s.mheb"}}
    if sharp is not None:
        write_embeddings(np.asarray(sharp, float)[:, None], tmp_path / "sharp.mheb")
        doc["video"]["sharpness"] = "sharp.mheb"
    (tmp_path / "m.json").write_text(json.dumps(doc))
    return tmp_path / "m.json"


class TestPairSegments:
    @pytest.mark.parametrize("ns, nt, pairs, us, ut", [
        (3, 3, ((0, 0), (1, 1), (2, 2)), (), ()),
        (2, 5, ((0, 0), (1, 1)), (), (2, 3, 4)),
        (1, 1, ((0, 0),), (), ()),
        (4, 1, ((0, 0),), (1, 2, 3), ()),
    ])
    def test_index(self, ns, nt, pairs, us, ut):
        p = pair_segments([(i, i + 1) for i in range(ns)], [(i, i + 1) for i in range(nt)])
        assert (p.pairs, p.unpaired_scenes, p.unpaired_segments) == (pairs, us, ut)

    def test_proportional_midpoints(self):
        # scene midpoints .1 .6 ; segment midpoints .05 .3 .8
        p = pair_segments([(0, 2), (2, 10)], [(0, 1), (1, 5), (5, 10)], "proportional")
        assert p.pairs == ((0, 0), (1, 2)) and p.unpaired_segments == (1,)

    def test_proportional_single(self):
        assert pair_segments([(0, 3)], [(0, 9)], "proportional").pairs == ((0, 0),)

    def test_errors(self):
        with pytest.raises(errors.EmptyInput):
            pair_segments([], [(0, 1)])
        with pytest.raises(errors.InvalidPolicy):
            pair_segments([(0, 1)], [(0, 1)], "random")

    @given(st.integers(1, 8), st.integers(1, 8), st.sampled_from(["index", "proportional"]))
    def test_one_to_one(self, ns, nt, policy):
        p = pair_segments([(i, i + 1) for i in range(ns)], [(2 * i, 2 * i + 2) for i in range(nt)], policy)
        s = [a for a, _ in p.pairs]
        t = [b for _, b in p.pairs]
        assert len(set(s)) == len(s) and len(set(t)) == len(t)
        assert s == sorted(s) and len(p.pairs) == min(ns, nt)
        assert sorted(s + list(p.unpaired_scenes)) == list(range(ns))
        assert sorted(t + list(p.unpaired_segments)) == list(range(nt))


class TestSelectSummary:
    one = pair_segments([(0, 1)], [(0, 1)])

    def test_single_candidates(self):
        a, b = np.array([1.0, 0.0]), np.array([0.6, 0.8])
        s = select_summary(self.one, [kf(0, [a])], [tc([b])])
        expect = ipot_align_distance(EmbeddingSet(a[None]), EmbeddingSet(b[None])).distance
        assert s.pairs[0].distance == expect == pytest.approx(0.4)
        assert s.pairs[0].choice == (0, 0)

    def test_identical_pair_found(self):
        e = np.eye(2)
        s = select_summary(self.one, [kf(0, [e[1], e[0]])], [tc([-e[1], e[0]])])
        p = s.pairs[0]
        assert p.choice == (1, 1) and p.distance == 0.0
        np.testing.assert_allclose(p.distances, [[2, 1], [1, 0]], atol=1e-12)
        assert lp_oracle(cosine_cost(EmbeddingSet(e[0][None]), EmbeddingSet(e[0][None]))).distance == 0.0

    def test_duplicate_tie_goes_first(self):
        v = np.array([0.0, 1.0])
        s = select_summary(self.one, [kf(0, [v, v])], [tc([v, v])])
        assert s.pairs[0].choice == (0, 0)

    def test_missing_candidates(self):
        with pytest.raises(errors.MissingCandidates) as ei:
            select_summary(self.one, [[]], [tc([[1.0, 0.0]])])
        assert ei.value.context["scene"] == 0

    def test_bad_scope(self):
        with pytest.raises(errors.InvalidPolicy):
            select_summary(self.one, [kf(0, [[1.0, 0.0]])], [tc([[1.0, 0.0]])], scope="nowhere")

    def test_global_scope(self):
        pairing = pair_segments([(0, 1), (1, 2)], [(0, 1), (1, 2)])
        e = np.eye(2)
        s = select_summary(pairing, [kf(0, [e[0]]), kf(1, [e[1]], 1)], [tc([-e[0]]), tc([e[1]], 1)],
                           scope="global")
        assert len(s.pairs) == 1
        p = s.pairs[0]
        assert (p.scene, p.segment, p.keyframe.frame, p.distance) == (1, 1, 1, 0.0)
        assert p.distances.shape == (2, 2)

    @pytest.mark.parametrize("seed", range(10))
    def test_choice_is_independent_argmin(self, seed):
        r = np.random.default_rng(seed)
        k, t = unit_rows(r, 4, 5), unit_rows(r, 3, 5)
        s = select_summary(self.one, [kf(0, k)], [tc(t)], SIMPLE)
        d = np.array([[ipot_align_distance(EmbeddingSet(a[None]), EmbeddingSet(b[None])).distance for b in t]
                      for a in k])
        np.testing.assert_array_equal(s.pairs[0].distances, d)
        assert s.pairs[0].choice == np.unravel_index(np.argmin(d), d.shape)
        assert s.pairs[0].distance >= 0

    @pytest.mark.parametrize("seed", range(10))
    def test_more_candidates_never_worse(self, seed):
        r = np.random.default_rng(seed)
        k, t = unit_rows(r, 4, 5), unit_rows(r, 4, 5)
        base = select_summary(self.one, [kf(0, k[:2])], [tc(t[:2])]).pairs[0].distance
        grown = select_summary(self.one, [kf(0, k)], [tc(t)]).pairs[0].distance
        assert grown <= base

    def test_sinkhorn_solver(self):
        a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        s = select_summary(self.one, [kf(0, [a])], [tc([b])], SolverConfig(solver="sinkhorn"))
        assert s.pairs[0].distance == pytest.approx(1.0, abs=1e-12)


class TestPipeline:
    def test_toy_hand_trace(self):
        m = validate_manifest(toy.bundled_manifest())
        summary, report = run_pipeline(m)
        assert report["video"]["boundary_flags"] == [0, 0, 1, 0, 0]
        assert [s["shots"] for s in report["video"]["scenes"]] == [[0, 3], [3, 6]]
        assert [s["sentences"] for s in report["text"]["segments"]] == [[0, 4], [4, 8]]
        assert report["pairing"]["pairs"] == [[0, 0], [1, 1]]
        assert [(p.scene, p.segment) for p in summary.pairs] == [(0, 0), (1, 1)]
        assert report["summary"]["frames"] == [1, 7]
        assert [p.text.indices for p in summary.pairs] == [(0,), (4,)]
        # cos(e2 + 0.1 e4, e2 + 0.1 e5) = 1 / 1.01
        for p in summary.pairs:
            assert p.distance == pytest.approx(1 - 1 / 1.01, abs=1e-7)
            assert p.distance < 0.05
        assert report["metrics"]["cos"] == pytest.approx(100.0)

    def test_single_everything(self, tmp_path):
        v = np.array([[0.6, 0.8]])
        p = write_item(tmp_path, v, v, [0], ["Only sentence."], v)
        summary, report = run_pipeline(validate_manifest(p))
        assert report["summary"]["frames"] == [0]
        assert report["summary"]["texts"] == ["Only sentence."]
        assert summary.pairs[0].distance == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal_blocks(self, tmp_path):
        e = np.eye(4)
        # cos(e0, u) = -1/2 gives a boundary score above the 0.5 threshold
        u = -0.5 * e[0] + np.sqrt(3) / 2 * e[1]
        shots = np.vstack([np.tile(e[0], (3, 1)), np.tile(u, (3, 1))])
        frames = np.vstack([np.tile(e[2], (3, 1)), np.tile(e[3], (3, 1))])
        emb = np.vstack([np.tile(e[2], (4, 1)), np.tile(e[3], (4, 1))])
        p = write_item(tmp_path, shots, frames, list(range(6)), [f"s{i}" for i in range(8)], emb)
        summary, report = run_pipeline(validate_manifest(p))
        assert len(report["video"]["scenes"]) == 2 and len(report["text"]["segments"]) == 2
        assert len(summary.pairs) == 2 and all(p.distance < 1e-7 for p in summary.pairs)

    def test_invalid_manifest_no_output(self, tmp_path):
        with pytest.raises(errors.ManifestError):
            run_pipeline(validate_manifest(tmp_path / "missing.json"))

    def test_timing_opt_in(self):
        m = validate_manifest(toy.bundled_manifest())
        assert "timing" not in run_pipeline(m)[1]
        t = run_pipeline(m, timing=True)[1]["timing"]
        assert {"align", "pairing"} <= set(t)

    def test_stage_provenance(self, tmp_path):
        e = np.eye(2)
        # antipodal shots inside one pooling window cancel to a zero vector
        p = write_item(tmp_path, np.array([e[0], -e[0], e[1]]), np.eye(2)[[0, 1, 0]], [0, 1, 2],
                       ["a", "b"], e)
        with pytest.raises(errors.ZeroNormVector) as ei:
            run_pipeline(validate_manifest(p))
        assert ei.value.context["stage"] == "video_seg"


class TestUnimodal:
    def _m(self, tmp_path, **kw):
        m = validate_manifest(write_item(tmp_path, **kw))
        return m

    def test_text_identical_k1(self, tmp_path):
        v = np.tile([1.0, 0.0], (4, 1))
        m = self._m(tmp_path, shots=v[:1], frames=v[:1], offsets=[0], sentences=list("abcd"), emb=v,
                    config={"fallback_clusters": 1})
        assert unimodal_fallback(m, "text-only")["sentences"] == [0]

    def test_video_duplicate_clusters(self, tmp_path):
        f = np.array([[1.0, 0], [1.0, 0], [0, 1.0], [0, 1.0]])
        m = self._m(tmp_path, shots=f[:2], frames=f, offsets=[0, 2], sentences=["a"], emb=f[:1],
                    config={"fallback_clusters": 2})
        out = unimodal_fallback(m, "video-only")
        assert len(out["frames"]) == 2
        assert {f_ // 2 for f_ in out["frames"]} == {0, 1}
        assert out["inertia"] == 0.0

    def test_video_sharpness(self, tmp_path):
        f = np.tile([1.0, 0.0], (2, 1))
        m = self._m(tmp_path, shots=f[:1], frames=f, offsets=[0], sentences=["a"], emb=f[:1],
                    config={"fallback_clusters": 1}, sharp=[0.1, 0.9])
        assert unimodal_fallback(m, "video-only")["frames"] == [1]

    def test_pipeline_routes_text_only(self, tmp_path):
        toy.build(tmp_path)
        doc = json.loads((tmp_path / "manifest.json").read_text())
        del doc["video"]
        (tmp_path / "manifest.json").write_text(json.dumps(doc))
        summary, report = run_pipeline(validate_manifest(tmp_path / "manifest.json"))
        assert summary is None and report["mode"] == "text-only"
        assert len(report["summary"]["sentences"]) == 3
        assert "rouge1" in report["metrics"] and "cos" not in report["metrics"]

    def test_missing_modality(self, tmp_path):
        toy.build(tmp_path)
        doc = json.loads((tmp_path / "manifest.json").read_text())
        del doc["text"]
        (tmp_path / "manifest.json").write_text(json.dumps(doc))
        m = validate_manifest(tmp_path / "manifest.json")
        with pytest.raises(errors.MissingModality):
            unimodal_fallback(m, "text-only")
        with pytest.raises(errors.InvalidPolicy):
            unimodal_fallback(m, "audio-only")
