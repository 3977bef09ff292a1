import math

import numpy as np
import pytest

from perilotka import scenario
from perilotka.analysis import boundary_orbit
from perilotka.orbits import find_orbit

OMEGA = math.pi / 4


def composite_simpson(func, a, b, n=1_000_000):
    """Fixed-grid composite Simpson rule; ``n`` must be even."""
    t = np.linspace(a, b, n + 1)
    y = func(t)
    h = (b - a) / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def rk4(field, t0, x0, t1, n):
    """Classical fixed-step Runge-Kutta, kept independent of the package integrator."""
    h = (t1 - t0) / n
    x = np.array(x0, dtype=float)
    t = t0
    for _ in range(n):
        k1 = field(t, x)
        k2 = field(t + h / 2, x + h / 2 * k1)
        k3 = field(t + h / 2, x + h / 2 * k2)
        k4 = field(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (_ + 1) * h
    return x


@pytest.fixture(scope="session")
def fig1():
    return scenario.preset("fig1")


@pytest.fixture(scope="session")
def fig2():
    return scenario.preset("fig2")


@pytest.fixture(scope="session")
def fig1_orbit(fig1):
    return find_orbit(fig1.params, mode="full", x_init=fig1.initial)


@pytest.fixture(scope="session")
def fig2_boundary(fig2):
    return boundary_orbit(fig2.params)


@pytest.fixture(scope="session")
def fig1_boundary(fig1):
    return boundary_orbit(fig1.params)
