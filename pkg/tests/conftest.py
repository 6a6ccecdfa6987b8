import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from signet import generators as gen

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def t1():
    return gen.triangle_t1()


@pytest.fixture
def t2():
    return gen.triangle_t2()


@pytest.fixture
def t3():
    return gen.triangle_t3()


@pytest.fixture
def c4d():
    return gen.square_with_diagonals()


@pytest.fixture
def d3():
    return gen.directed_d3()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in sorted(RESULTS, key=lambda r: r.id):
            terminalreporter.write_line(r.line())
