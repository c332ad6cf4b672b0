import numpy as np
import pytest

from arrayloc.geometry import prism_geometry

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def prism():
    """Eight corners of a 0.50 x 0.40 x 0.36 m box, c = 343 m/s, fs = 48 kHz."""
    return prism_geometry()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary prints them all at the end."""

    def report(number, name, ok, detail=""):
        _ACCEPTANCE.append((number, name, bool(ok), detail))
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_ACCEPTANCE, key=lambda r: (r[0], r[1])):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>3} {name}: {detail}")
