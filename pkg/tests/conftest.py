import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption("--trials", type=int, default=100,
                     help="trial count for the property suites")
    parser.addoption("--rng-seed", type=int, default=20240611,
                     help="seed for the property-suite generator")


@pytest.fixture
def trials(request) -> int:
    return request.config.getoption("--trials")


@pytest.fixture
def rng(request) -> np.random.Generator:
    return np.random.default_rng(request.config.getoption("--rng-seed"))
