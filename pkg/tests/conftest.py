import pytest

from factorld import Deterministic, FactorModelSpec, pareto
from factorld.levy_paths import LevyFactorSpec


@pytest.fixture(scope="session")
def table1_spec():
    return FactorModelSpec(10, pareto(5), pareto(3), Deterministic([1.0] * 10))


@pytest.fixture(scope="session")
def small_spec():
    """n = 10 scale instance with the table1.cfg marginals and two factors."""
    return FactorModelSpec(2, pareto(5), pareto(3), Deterministic([1.0, 1.0]))


@pytest.fixture(scope="session")
def unit_levy():
    return LevyFactorSpec(1, 1.0, 1.0, pareto(5), pareto(3), (1.0,))
