import numpy as np
import pytest

from ieqdg.basis import DGSpace
from ieqdg.forms import PenaltyConfig, default_beta0
from ieqdg.mesh import uniform_mesh
from ieqdg.physics import MobilitySpec, PotentialSpec
from ieqdg.stepper import CahnHilliardModel


def make_model(intervals=((0.0, 2 * np.pi),), cells=8, degree=2, bc="periodic", potential=None,
               mobility=None, epsilon=1.0, family="Q", source=None, beta0=None):
    mesh = uniform_mesh(intervals, cells, bc)
    space = DGSpace(mesh, degree, family=family)
    potential = potential or PotentialSpec("double_well", B=1.0)
    mobility = mobility or MobilitySpec("constant", 1.0)
    b0 = default_beta0(degree, mobility.is_constant) if beta0 is None else beta0
    return CahnHilliardModel(space, potential, mobility, epsilon, PenaltyConfig(b0, mesh.tau), source=source)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def model_factory():
    return make_model
