import os

import numpy as np
import pytest
from hypothesis import settings

from magflow.fuchsian import bolza_group

settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile("thorough", max_examples=2000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def bolza():
    return bolza_group()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
