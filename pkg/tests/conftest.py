import numpy as np
import pytest

from schurkit import _kernels

ACCEPTANCE_LINES: list[str] = []

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
