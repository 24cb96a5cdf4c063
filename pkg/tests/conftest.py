import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from isrs_nli.engine import clear_cache
from isrs_nli.files import bundled_scenario_path, load_scenario

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

S_BAND_MAX_NM = 1530.0
L_BAND_MIN_NM = 1567.5


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(bundled_scenario_path())


@pytest.fixture(scope="session")
def scl(scenario):
    """(plan, link) of the bundled 452-channel S+C+L scenario."""
    fiber = scenario.fiber()
    return scenario.plan(), scenario.link(fiber)


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_cache()
    yield


def band_masks(wavelength):
    w = np.asarray(wavelength)
    return w < S_BAND_MAX_NM, w > L_BAND_MIN_NM
