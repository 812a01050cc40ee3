from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from mmsumm import kernels

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def unit_rows(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion(name, ok, detail)``; a test that errors before
    recording is reported as FAIL under its test id.
    """
    recorded = []

    def record(name: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        recorded.append(line)
        print(line)
        return ok

    yield record
    if not recorded:
        _ACCEPTANCE.append(f"FAIL  {request.node.name}  (raised before reporting)")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
