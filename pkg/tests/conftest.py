import numpy as np
import pytest

from sigmaflat import catalog_surface

MINIMAL_NAMES = ("plane", "scherk", "helicoid", "null_wave")
CURVED_NAMES = ("scherk", "helicoid", "null_wave")


@pytest.fixture(scope="session")
def scherk():
    return catalog_surface("scherk")


@pytest.fixture(scope="session", params=MINIMAL_NAMES)
def minimal_surface(request):
    return catalog_surface(request.param)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def cloud(surface, n=100, seed=0):
    return surface.sample(n, seed=seed)
