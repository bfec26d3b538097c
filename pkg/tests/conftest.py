import numpy as np
import pytest

from sinest import _fallback, kernels
from sinest.signal import Scenario, synthesize

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def report():
    """Record one acceptance line: report(name, passed, detail)."""

    def _rec(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))

    return _rec


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test against each kernel implementation."""
    if request.param == "compiled":
        if kernels.BACKEND != "compiled":
            pytest.skip("compiled extension not built")
        from sinest import _core as impl
    else:
        impl = _fallback
    for name in ("fit", "cost_grad", "grid_search"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def sec3_scenario():
    return Scenario(25, [1.0, 0.5, 0.53], [0.0, np.pi / 4, 0.0], [0.35, 0.5, 0.52])


@pytest.fixture
def sec3_record(sec3_scenario):
    return synthesize(sec3_scenario)


@pytest.fixture
def kt82():
    return Scenario(25, [1.0, 1.0], [0.0, 0.0], [0.5, 0.52])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
