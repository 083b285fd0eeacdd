import functools

import pytest

from cspace import fixtures as fx
from cspace.features import SpaceModel


@functools.lru_cache(maxsize=None)
def shape(name):
    return {
        "sphere": lambda: fx.icosphere(4),
        "torus": lambda: fx.torus(10, 4, 144, 72),
        "torus_small": lambda: fx.torus(),
        "coarse_torus": lambda: fx.coarse_torus(500),
        "plate": lambda: fx.holed_plate(resolution=0.3),
        "bore": lambda: fx.blind_bore(),
        "dimpled": lambda: fx.dimpled_cube(),
        "sealed_torus": lambda: fx.sealed_torus(resolution=0.3),
        "ported_shell": lambda: fx.ported_shell(),
    }[name]()


@functools.lru_cache(maxsize=None)
def model(name):
    return SpaceModel(shape(name))


@pytest.fixture(scope="session")
def get_model():
    return model


@pytest.fixture(scope="session")
def get_shape():
    return shape


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
