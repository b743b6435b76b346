import numpy as np
import pytest

from axmaxwell import mesh
from axmaxwell.femcore import MeshQuadrature


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def lshape():
    return mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.1)


@pytest.fixture(scope="session")
def lshape_quad(lshape):
    msh, corner = lshape
    return MeshQuadrature(msh, corner)


@pytest.fixture(scope="session")
def rect():
    return mesh.gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.2)
