"""The bundled toy item: two scene blocks and two topic blocks.

Everything is built from a few axis directions in R^6 so each stage can be
traced by hand:

* shots 0-2 are ``e0`` and shots 3-5 are ``u = (-1/2, sqrt(3)/2, 0, ...)``;
  ``cos(e0, u) = -1/2`` puts one confident cut between shots 2 and 3;
* each shot has two frames ``axis + eps * e4`` with ``eps`` cycling through
  (0, 0.1, 0.2), where ``axis`` is ``e2`` in scene 0 and ``e3`` in scene 1;
* sentences 0-3 are ``e2 + delta * e5`` and sentences 4-7 are
  ``e3 + delta * e5`` with ``delta`` cycling through (0.1, 0, 0.2, 0.1).

Scene 0 therefore matches topic 0 and scene 1 matches topic 1, and every
matched keyframe/sentence pair is within cosine distance 0.01.

Regenerate the bundled copy with ``python -m mmsumm.toy DIR``.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .embfile import write_embeddings

DIM = 6
FRAME_EPS = (0.0, 0.1, 0.2)
SENTENCE_DELTA = (0.1, 0.0, 0.2, 0.1)

SENTENCES = (
    "A powerful storm reached the northern coast on Monday night.",
    "Strong winds knocked down power lines across several towns.",
    "Emergency crews worked through the night to clear fallen trees.",
    "Officials said the storm was the worst in a decade.",
    "The home team won the football final after extra time.",
    "Their striker scored twice in the second half.",
    "Thousands of fans celebrated in the city square.",
    "The coach praised the players for their resilience.",
)

REFERENCE = ("A powerful storm hit the northern coast and knocked down power lines. "
             "The home team won the football final and fans celebrated.")


def _axis(i: int) -> np.ndarray:
    v = np.zeros(DIM)
    v[i] = 1.0
    return v


def arrays() -> dict[str, np.ndarray]:
    u = np.zeros(DIM)
    u[0], u[1] = -0.5, np.sqrt(3.0) / 2.0
    shots = np.stack([_axis(0)] * 3 + [u] * 3)
    frames = []
    for shot in range(6):
        axis = _axis(2) if shot < 3 else _axis(3)
        for f in range(2):
            frames.append(axis + FRAME_EPS[(2 * shot + f) % 3] * _axis(4))
    sentences = []
    for s in range(8):
        axis = _axis(2) if s < 4 else _axis(3)
        sentences.append(axis + SENTENCE_DELTA[s % 4] * _axis(5))
    ref_image = np.stack([_axis(2) + 0.1 * _axis(4), _axis(3) + 0.1 * _axis(4)])
    return {
        "shots": shots,
        "frames": np.stack(frames),
        "sentences": np.stack(sentences),
        "reference_image": ref_image,
    }


def build(directory) -> Path:
    """Write the toy item into ``directory``; return the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    a = arrays()
    write_embeddings(a["shots"], d / "shots.mheb")
    write_embeddings(a["frames"], d / "frames.mheb")
    write_embeddings(a["sentences"], d / "sentences.mheb")
    write_embeddings(a["reference_image"], d / "reference_image.mheb")
    (d / "sentences.txt").write_text("\n".join(SENTENCES) + "\n", encoding="utf-8")
    (d / "reference.txt").write_text(REFERENCE + "\n", encoding="utf-8")
    manifest = {
        "version": 1,
        "id": "toy-2x2",
        "video": {"shots": "shots.mheb", "frames": "frames.mheb",
                  "shot_offsets": [0, 2, 4, 6, 8, 10]},
        "text": {"sentences": "sentences.txt", "embeddings": "sentences.mheb"},
        "references": {"summary": "reference.txt", "image": "reference_image.mheb"},
        "config": {},
    }
    path = d / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def bundled_manifest() -> Path:
    """Path of the toy manifest shipped with the package."""
    return Path(str(resources.files("mmsumm") / "data" / "toy" / "manifest.json"))


if __name__ == "__main__":
    print(build(sys.argv[1] if len(sys.argv) > 1 else "."))
