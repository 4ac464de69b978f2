import pytest

from models.friction_model import ModelParams


@pytest.fixture
def params():
    """Standard parameter set delta=0.6, mu_s=1.1, mu_d=0.4 with the standard phi."""
    return ModelParams(delta=0.6, mu_s=1.1, mu_d=0.4, xi=0.795)


@pytest.fixture
def phi(params):
    return params.regularization


@pytest.fixture
def strobe_params(params):
    # coarse eps keeps R_eps cheap
    return params.with_(xi=0.5, eps=0.05)
