import math

import pytest

from gcflab.geometry import make_domain
from gcflab.translator import radial_translator_ode, solve_translator

HALF_PI = 0.5 * math.pi


@pytest.fixture(scope="session")
def interval():
    return make_domain({"kind": "interval", "a": -HALF_PI, "b": HALF_PI})


@pytest.fixture(scope="session")
def grim512(interval):
    return solve_translator(interval, 512)


@pytest.fixture(scope="session")
def disk():
    return make_domain("disk:1")


@pytest.fixture(scope="session")
def disk64(disk):
    return solve_translator(disk, 64)


@pytest.fixture(scope="session")
def radial1():
    return radial_translator_ode(1.0)
