import numpy as np
import pytest
import torch

from latentroll.model import ModelConfig, build_model

# tiny profile: fast enough that every service/evaluation test stays sub-second
TINY = ModelConfig(latent_dim=16, hidden_size=24, num_layers=1, timesteps=32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_model():
    model = build_model(TINY, seed=3)
    model.eval()
    return model


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)
