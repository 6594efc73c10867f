import numpy as np
import pytest

from attrakt import data_path, load_example, parse_config, parse_system
from attrakt.sysparse import parse_polynomial

# acceptance results collected by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def poly(text, names=("x1", "x2")):
    return parse_polynomial(text, list(names))


def system(text):
    return parse_system(text)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def contraction_1d():
    return system("vars: x\ndot x = -x\n")


@pytest.fixture(scope="session")
def cubic_1d():
    """dx/dt = -x + x^3: equilibria at 0 and +-1, region of attraction (-1, 1)."""
    return system("vars: x\ndot x = -x + x^3\n")


@pytest.fixture(scope="session")
def ex1():
    return load_example("ex1")


@pytest.fixture(scope="session")
def ex2():
    return load_example("ex2")


@pytest.fixture(scope="session")
def ex3():
    return load_example("ex3")


@pytest.fixture(scope="session")
def ex1_cfg():
    return parse_config(data_path("ex1.cfg").read_text())


@pytest.fixture(scope="session")
def toy_2d():
    """Linear contraction in the plane with a weak coupling."""
    return system("vars: x1 x2\ndot x1 = -x1 + 0.5*x2\ndot x2 = -x2\n")


@pytest.fixture(scope="session")
def toy_cert(toy_2d):
    from attrakt.roa import algorithm3, attach_rational

    cfg = parse_config("deg_VN = 2\ngamma_hi = 4\nmax_outer_iters = 3\n")
    cert = algorithm3(toy_2d, cfg)[-1]
    attach_rational(toy_2d, cert, cfg)
    return cert


@pytest.fixture(scope="session")
def ex1_cert(ex1, ex1_cfg):
    from attrakt.roa import algorithm3, attach_rational

    certs = algorithm3(ex1, ex1_cfg)
    attach_rational(ex1, certs[-1], ex1_cfg)
    return certs
