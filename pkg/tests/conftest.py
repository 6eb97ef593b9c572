import numpy as np
import pytest

from aivat.games import KuhnPoker, LeducPoker, iter_terminals, uniform_profile


@pytest.fixture(scope="session")
def kuhn():
    return KuhnPoker()


@pytest.fixture(scope="session")
def leduc():
    return LeducPoker()


@pytest.fixture(scope="session")
def kuhn_uniform(kuhn):
    return uniform_profile(kuhn)


@pytest.fixture(scope="session")
def leduc_uniform(leduc):
    return uniform_profile(leduc)


@pytest.fixture(scope="session")
def kuhn_terminals(kuhn, kuhn_uniform):
    """All Kuhn terminals with reach probabilities under the uniform profile."""
    pairs = list(iter_terminals(kuhn, kuhn_uniform))
    return [z for z, _ in pairs], np.array([p for _, p in pairs])
