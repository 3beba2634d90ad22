import numpy as np
import pytest

from gprimes import PrimeSystem, discretize, li_template


def manual_system(primes, x_max=1e3):
    """PrimeSystem wrapping an explicit prime list (test helper)."""
    return PrimeSystem(primes=np.asarray(primes, dtype=np.float64),
                       seed=0, template_id="manual", x_max=float(x_max),
                       strictly_increasing=bool(
                           np.all(np.diff(np.asarray(primes)) > 0)))


@pytest.fixture(scope="session")
def li():
    return li_template()


@pytest.fixture(scope="session")
def ps_li_1e4(li):
    return discretize(li, 42, 1e4)


@pytest.fixture(scope="session")
def ps23():
    return manual_system([2.0, 3.0])


@pytest.fixture(scope="session")
def ps2():
    return manual_system([2.0])
