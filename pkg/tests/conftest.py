import pytest

from disentlab import CandidateModel, uniform_world


@pytest.fixture
def world22():
    return uniform_world((2, 2))


@pytest.fixture
def xor_model(world22):
    """phi(z) = (z1, z1 xor z2): consistent but not restrictive on factor 1."""
    return CandidateModel.from_map(world22, lambda t: (t[0], t[0] ^ t[1]))
