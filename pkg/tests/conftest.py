import time

import pytest

from holofoliate.foliation import build_foliation
from holofoliate.torus_model import TorusFamily

ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def standard():
    return TorusFamily.standard()


@pytest.fixture(scope="session")
def bumpy():
    return TorusFamily.from_profile({(0, 0): 1.0, (0, 1): 0.1})


@pytest.fixture(scope="session")
def twisted():
    # 1 + 0.1 cos(psi - arg lambda)
    return TorusFamily.from_profile({(0, 0): 1.0, (-1, 1): 0.1})


class Timed:
    def __init__(self, value, seconds):
        self.value = value
        self.seconds = seconds


def _timed_foliation(family, **kw):
    t0 = time.perf_counter()
    fol = build_foliation(family, 1.0, **kw)
    return Timed(fol, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def fol_bumpy(bumpy):
    return _timed_foliation(bumpy, m=32, n=256)


@pytest.fixture(scope="session")
def fol_twisted(twisted):
    return _timed_foliation(twisted, m=32, n=256)


@pytest.fixture(scope="session")
def fol_bumpy_512(bumpy):
    return build_foliation(bumpy, 1.0, m=32, n=512)


@pytest.fixture(scope="session")
def fol_twisted_512(twisted):
    return build_foliation(twisted, 1.0, m=32, n=512)
