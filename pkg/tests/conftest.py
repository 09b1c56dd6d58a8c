import hypothesis
import numpy as np
import pytest

from cego.domain import Domain
from cego.gp import GpModel
from cego.kernels import Kernel

hypothesis.settings.register_profile("ci", max_examples=25, deadline=None)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def se_kernel_1d():
    return Kernel("squared_exponential", [1.0], 1.0)


@pytest.fixture
def unit_domain_1d():
    return Domain([0.0], [1.0], [5])


def random_model(rng, kernel, noise_variance, n_obs, lo=-2.0, hi=2.0, output_index=0):
    """A GP model filled with uniform random observations."""
    model = GpModel(kernel, noise_variance, output_index=output_index)
    dim = kernel.dim
    for _ in range(n_obs):
        point = rng.uniform(lo, hi, size=dim)
        model = model.add(point, rng.normal())
    return model
