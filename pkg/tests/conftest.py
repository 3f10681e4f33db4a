import numpy as np
import pytest

from tensegrity_arm.segment import SegmentControls, SegmentGeometry

# acceptance results collected by test_acceptance.py, printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def geom():
    return SegmentGeometry.symmetric(0.75, 1.0, 1.0)


@pytest.fixture
def unit_controls():
    return SegmentControls.symmetric(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
