import numpy as np
import pytest

from grunsky import welding as W


@pytest.fixture(scope="session")
def welded():
    """Every catalog curve welded at the default settings."""
    return {name: W.weld(c) for name, c in W.catalog().items()}


@pytest.fixture(scope="session")
def pairs(welded):
    return {name: r.pair for name, r in welded.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
