import math

import numpy as np
import pytest
from hypothesis import settings

from hydrogen_alignment.hydrogen_model import LAMB_SHIFT_2S_HZ, LevelScheme, build_levels, restrict_to_toy
from hydrogen_alignment.radiation_field import Illumination, rates
from hydrogen_alignment.se_solver import SESystem

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

TOY_TERMS = ((1, 0), (2, 0), (2, 1), (3, 1))


@pytest.fixture(scope="session")
def scheme2():
    return build_levels(2)


@pytest.fixture(scope="session")
def scheme3():
    return build_levels(3)


@pytest.fixture(scope="session")
def scheme4():
    return build_levels(4)


@pytest.fixture(scope="session")
def toy_scheme():
    return restrict_to_toy()


@pytest.fixture(scope="session")
def fs_toy_scheme():
    """Toy terms with fine structure and the 2S Lamb shift."""
    return LevelScheme(3, True, LAMB_SHIFT_2S_HZ, terms=TOY_TERMS)


@pytest.fixture(scope="session")
def system3(scheme3):
    return SESystem(scheme3, rates(Illumination(), scheme3.transitions()))


@pytest.fixture(scope="session")
def system4(scheme4):
    return SESystem(scheme4, rates(Illumination(), scheme4.transitions()))


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def random_rotation(rng):
    """Euler angles and the Cartesian matrix of the active rotation Rz(a) Ry(b) Rz(c)."""
    a, c = rng.uniform(0, 2 * math.pi, 2)
    b = math.acos(rng.uniform(-1, 1))

    def Rz(t):
        return np.array([[math.cos(t), -math.sin(t), 0], [math.sin(t), math.cos(t), 0], [0, 0, 1]])

    def Ry(t):
        return np.array([[math.cos(t), 0, math.sin(t)], [0, 1, 0], [-math.sin(t), 0, math.cos(t)]])

    return (a, b, c), Rz(a) @ Ry(b) @ Rz(c)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
