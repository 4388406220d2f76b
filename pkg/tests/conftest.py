import numpy as np
import pytest

from wlra import backend

_RESULTS = []


def record_criterion(name, ok, detail=""):
    """Store one acceptance verdict; printed in the terminal summary."""
    _RESULTS.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def criterion():
    return record_criterion


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=backend.available())
def each_backend(request):
    with backend.use(request.param):
        yield request.param


def orthonormal(n, k, rng):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
