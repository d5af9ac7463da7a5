import numpy as np
import pytest

from cathtwin.catheter import JointLimits, RigGeometry
from cathtwin.geometry import PhantomSpec, phantom_geometry, synthesize_phantom
from cathtwin.geometry.primitives import icosphere


@pytest.fixture(scope="session")
def phantom():
    """Default phantom model + valve target (shared; both are immutable)."""
    return synthesize_phantom()


@pytest.fixture(scope="session")
def phantom_sdf():
    return phantom_geometry(PhantomSpec())


@pytest.fixture(scope="session")
def sphere30():
    """Finely tessellated 30 mm sphere mesh centered at the origin."""
    return icosphere(radius=30.0, subdivisions=4)


@pytest.fixture(scope="session")
def default_rig(phantom):
    model, _ = phantom
    return RigGeometry(insertion_port=model.insertion_port,
                       passive_length=0.0, active_length=120.0)


@pytest.fixture(scope="session")
def default_limits():
    return JointLimits.default()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
