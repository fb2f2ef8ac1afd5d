import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gpssm import linalg  # noqa: E402


@pytest.fixture(params=linalg.available_backends())
def backend(request):
    """Run the test once per available triangular-update backend."""
    previous = linalg.BACKEND
    linalg.use_backend(request.param)
    yield request.param
    linalg.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.SUMMARY:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.SUMMARY):
        terminalreporter.write_line(module.SUMMARY[number])
