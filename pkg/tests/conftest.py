import os

import mpmath
import pytest

# keep numba's thread count modest and results identical across machines
os.environ.setdefault("REGIME_SDE_THREADS", "4")

mpmath.mp.dps = 40


def ncdf(x):
    """High-precision standard normal cdf, used as an independent oracle."""
    return float(mpmath.ncdf(mpmath.mpf(x)))


@pytest.fixture(scope="session")
def explosion_finite():
    from regime_sde.demos import builtin_problem

    return builtin_problem("explosion-finite")


@pytest.fixture(scope="session")
def explosion_finite_schedule(explosion_finite):
    from regime_sde.regime_solver import build_schedule

    return build_schedule(explosion_finite)


@pytest.fixture(scope="session")
def explosion_global():
    from regime_sde.demos import builtin_problem

    return builtin_problem("explosion-global")
