import pytest

from perdouble.finite_rank import run_program
from perdouble.fixed_point import cascade_oracle, solve_fixed_point
from perdouble.induced_map import build_sigma
from perdouble.transfer_operator import collocation_spectrum


@pytest.fixture(scope="session")
def fp():
    return solve_fixed_point(40, 1e-12)


@pytest.fixture(scope="session")
def fp30():
    return solve_fixed_point(30, 1e-12)


@pytest.fixture(scope="session")
def sigma(fp):
    return build_sigma(fp)


@pytest.fixture(scope="session")
def cascade():
    return cascade_oracle(10)


@pytest.fixture(scope="session")
def trace12(sigma):
    return run_program(sigma, 12, reference=None, keep_partitions=True)


@pytest.fixture(scope="session")
def spectrum40(sigma):
    return collocation_spectrum(sigma, 40)


@pytest.fixture(scope="session")
def spectrum30(sigma):
    return collocation_spectrum(sigma, 30)
