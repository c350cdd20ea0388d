import numpy as np
import pytest

from sirclt.model import sample_ensemble


@pytest.fixture
def small_ensemble():
    return sample_ensemble(24, 16, powers=np.linspace(0.5, 2.0, 16), seed=11)


@pytest.fixture(params=["complex-gaussian", "qpsk"])
def complex_dist(request):
    return request.param
