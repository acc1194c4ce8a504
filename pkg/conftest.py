import numpy as np
import pytest

from scripts.biphoton import BiphotonParams
from scripts.channel import ChannelParams


def random_biphoton(rng: np.random.Generator) -> BiphotonParams:
    """sigma_coh and sigma_cor spread over two decades, with carrier offsets"""
    return BiphotonParams(
        sigma_coh=10 ** rng.uniform(-1, 1),
        sigma_cor=10 ** rng.uniform(-1, 1),
        delta_omega=rng.uniform(-2, 2),
        omega_p=rng.uniform(-5, 5),
    )


def random_channel(rng: np.random.Generator) -> ChannelParams:
    return ChannelParams(
        delta_t_s=rng.uniform(-5, 5),
        delta_omega_s=rng.uniform(-1, 1),
        delta_t_i=rng.uniform(-5, 5),
    )


@pytest.fixture
def reference_params() -> BiphotonParams:
    return BiphotonParams(sigma_coh=10.0, sigma_cor=0.1)


@pytest.fixture
def reference_channel() -> ChannelParams:
    return ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0)
