import os

import numpy as np
import pytest
from hypothesis import settings

from ifemeig import LevelSetInterface, gen_disk_mesh, gen_square_mesh

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("stress", max_examples=20000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance line: record_criterion(number, passed, detail)."""
    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def disk10():
    return gen_disk_mesh(10)


@pytest.fixture(scope="session")
def square8():
    return gen_square_mesh(8)


@pytest.fixture(scope="session")
def circle_hard_inside():
    return LevelSetInterface.circle(0.38, beta_minus=1000.0, beta_plus=1.0)


@pytest.fixture(scope="session")
def circle_soft_inside():
    return LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0)
