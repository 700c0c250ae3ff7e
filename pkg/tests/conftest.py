import sys
from pathlib import Path

import numpy as np
import pytest

from markersolve import kernels

sys.path.insert(0, str(Path(__file__).parent))

from oracles import quat_to_matrix, random_quat  # noqa: E402


@pytest.fixture(params=kernels.BACKENDS)
def backend(request):
    prev = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_rotations(rng, n):
    return np.array([quat_to_matrix(random_quat(rng)) for _ in range(n)])


ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the assertion still decides pass/fail."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
