import numpy as np
import pytest

from hallmhd.field_core import Grid

ACCEPTANCE = {}


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
