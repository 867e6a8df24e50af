import numpy as np
import pytest
from hypothesis import settings

from posesim.humanoid import default_model
from posesim.humanoid_sim import Simulation, SimParams
from posesim.pose_core import GroundPlane

# jitted kernels make wall-clock deadlines meaningless on first calls
settings.register_profile("posesim", deadline=None, max_examples=50)
settings.load_profile("posesim")


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def ground():
    return GroundPlane(0.0)


@pytest.fixture()
def sim(model, ground):
    return Simulation(model, ground)


@pytest.fixture()
def passive_sim(model, ground):
    return Simulation(model, ground, SimParams(stable_pd=False))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
