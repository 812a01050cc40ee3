"""Multimodal summarization engine: scene/topic segmentation, candidate
generation and optimal-transport alignment between keyframes and text."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import MMSummError  # noqa: E402
from .kernels import available_backends, use_backend  # noqa: E402

__all__ = ["MMSummError", "available_backends", "use_backend", "__version__"]
