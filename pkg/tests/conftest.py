import numpy as np
import pytest

from nanoplate.config import load_config
from nanoplate.discretization import PlateDomain, build_space
from nanoplate.harness import Problem
from nanoplate.material import MaterialParams
from nanoplate.solver import LoadCase

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def domain():
    return PlateDomain()


@pytest.fixture(scope="session")
def material():
    return MaterialParams.constant(0.2, 0.3, 0.1, 0.1)


@pytest.fixture(scope="session")
def center_load():
    return LoadCase((0.5, 0.5))


@pytest.fixture(scope="session")
def space16(domain):
    return build_space(domain, 5, 16)


@pytest.fixture(scope="session")
def default_problem():
    cfg, _ = load_config()
    return Problem(cfg)


@pytest.fixture(scope="session")
def small_problem():
    cfg, _ = load_config(overrides={"discretization": {"n_spans": 16}})
    return Problem(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
