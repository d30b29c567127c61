import numpy as np
import pytest

from conftori import (CurveOnS2, clifford_torus, flat_cmc_torus, geometry, hopf_torus_circle,
                      hopf_torus_curve)
from conftori.moebius import push_immersion

ACCEPTANCE_LINES = []

# small off-centre Moebius image: conformal, with non-constant lam and H
MOEBIUS_A = np.array([0.1, 0.0, 0.0, 0.05])


def wavy_hopf(n1=128, n2=32, amplitude=0.05):
    return hopf_torus_curve(CurveOnS2.wavy_circle(1.0, amplitude, 3, 256), n1, n2)


FAMILIES = {
    "clifford": lambda: clifford_torus(64),
    "flat_cmc_0.3": lambda: flat_cmc_torus(0.3, 64, 64),
    "flat_cmc_0.6": lambda: flat_cmc_torus(0.6, 64, 64),
    "flat_cmc_0.8": lambda: flat_cmc_torus(0.8, 64, 64),
    "hopf_circle_1": lambda: hopf_torus_circle(1.0, 64, 64),
    "wavy_hopf": wavy_hopf,
    "moebius_clifford": lambda: push_immersion(MOEBIUS_A, clifford_torus(64)),
}


@pytest.fixture(scope="session")
def clifford():
    return clifford_torus(64)


@pytest.fixture(scope="session")
def cmc06():
    return flat_cmc_torus(0.6, 64, 64)


@pytest.fixture(scope="session")
def hopf1():
    return hopf_torus_circle(1.0, 64, 64)


@pytest.fixture(scope="session")
def wavy():
    return wavy_hopf()


@pytest.fixture(scope="session")
def geo_of():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = geometry(FAMILIES[name]())
        return cache[name]
    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
