"""Hot-loop kernels with import-time backend selection.

The Cython extension ``_ckernels`` is used when it was built; otherwise the
numpy versions in ``_pykernels`` are used. Both expose the same functions:

``sinkhorn_scaling``, ``sinkhorn_log``, ``ipot``, ``lcs_length``.

:func:`use_backend` switches explicitly (tests and the benchmark use it to
compare the two); :data:`BACKEND` names the active one.
"""

from __future__ import annotations

import logging
from types import ModuleType

from . import _pykernels

logger = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_NAMES = ("sinkhorn_scaling", "sinkhorn_log", "ipot", "lcs_length")

BACKEND = ""


def available_backends() -> list[str]:
    return (["compiled"] if _ckernels is not None else []) + ["python"]


def backend_module(name: str) -> ModuleType:
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        return _ckernels
    if name == "python":
        return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


def use_backend(name: str) -> str:
    """Route the module-level kernel functions to backend ``name``.

    Returns the previously active backend name.
    """
    global BACKEND
    mod = backend_module(name)
    previous = BACKEND
    for fn in _NAMES:
        globals()[fn] = getattr(mod, fn)
    BACKEND = name
    logger.debug("kernel backend: %s", name)
    return previous


use_backend(available_backends()[0])
