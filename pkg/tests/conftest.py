import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dlh.hardy import check_conditions
from dlh.params import HardyParams
from dlh.selftest import random_points, random_system
from dlh.system import build_system, grushin

settings.register_profile("dlh", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dlh")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def g31():
    return grushin(1.0, (3, 1))


@pytest.fixture
def chain():
    return build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


@pytest.fixture
def prod3():
    return build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [1, 1, 0]])


def systems(seed, count, kmax=4):
    rng = np.random.default_rng(seed)
    return [random_system(rng, kmax) for _ in range(count)]


def points(seed, sys, n):
    return random_points(np.random.default_rng(seed), sys, n)


def admissible_cases(seed, count):
    """(system, params) pairs passing the literal conditions, mixing both weighted theorems."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        sys = systems(int(rng.integers(1 << 30)), 1)[0]
        p = float(rng.uniform(1.2, 3.0))
        s = float(rng.uniform(-1.0, 1.0))
        mu = tuple(float(v) for v in rng.uniform(0, 2, sys.k))
        if rng.random() < 0.5:
            params = HardyParams(p=p, s=s, mu=mu)
        else:
            params = HardyParams(p=p, s=s, t=float(rng.uniform(0, 1)), mu=mu, variant="dist", norm=str(rng.choice(["dist1", "dist2"])))
        if check_conditions(sys, params).overall:
            out.append((sys, params))
    return out


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
