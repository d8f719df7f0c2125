import numpy as np
import pytest
import torch

from app.services.mesh import make_mesh_2d, uniform_mesh
from app.services.neural import init_network, parameter_count, unflatten


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def mesh_11():
    return uniform_mesh(11)


@pytest.fixture
def mesh_2d_11():
    return make_mesh_2d("uniform", 11, 0.1)


def constant_network(widths, value: float):
    """All weights and biases zero except the output bias, so NN(x) == value."""
    net = init_network(widths, seed=0)
    vector = torch.zeros(parameter_count(net), dtype=torch.float64)
    vector[-1] = value
    unflatten(net, vector)
    return net


@pytest.fixture
def zero_net_1d():
    return constant_network([1, 5, 5, 1], 0.0)


@pytest.fixture
def zero_net_2d():
    return constant_network([2, 5, 5, 1], 0.0)
