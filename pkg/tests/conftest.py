import numpy as np
import pytest

from entpower.sampling import SeededStream, haar_unitary
from entpower.tensor import Bipartition

BIPARTITIONS = [Bipartition(2, 2), Bipartition(2, 3), Bipartition(3, 2), Bipartition(3, 3)]


@pytest.fixture
def stream():
    return SeededStream(20240601)


@pytest.fixture(params=BIPARTITIONS, ids=lambda b: f"{b.dA}x{b.dB}")
def bip(request):
    return request.param


def random_unitary(d, seed):
    return haar_unitary(d, SeededStream(seed))


def basis(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
