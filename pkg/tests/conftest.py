import numpy as np
import pytest

from src.cevae import CevaeModel, TrainConfig, train
from src.graph import builtin
from src.metrics import latent_gap_hook
from src.scm import appendix_dgp, linear_gaussian_scm, sample_dataset

# Small networks keep the CEVAE tests fast; the slow tests use the full setup.
SMALL_TRAIN = TrainConfig(
    epochs=3, batch_size=256, hidden_width=16, latent_dim=3, learning_rate=1e-3, seed=0
)

# Full-size appendix run shared by the slow checks.
FULL_TRAIN = TrainConfig(epochs=40, learning_rate=3e-3, seed=0)

FIG1C_COEFFICIENTS = {
    ("Z", "X"): 0.8,
    ("Z", "Y"): 1.0,
    ("Z", "R"): 0.5,
    ("A", "X"): 1.0,
    ("A", "Y"): 1.0,
    ("A", "R"): 0.8,
    ("X", "Y"): 0.8,
    ("X", "R"): 0.5,
    ("B", "X"): 0.5,
    ("B", "Y"): 0.5,
    ("B", "R"): 0.3,
    ("R", "Y"): 0.8,
}


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def appendix_scm():
    return appendix_dgp()


@pytest.fixture(scope="session")
def appendix_data(appendix_scm):
    return sample_dataset(appendix_scm, 2000, seed=1)


@pytest.fixture(scope="session")
def fig1c_graph():
    return builtin("fig1c")


@pytest.fixture(scope="session")
def fig1c_scm(fig1c_graph):
    """Linear fig1c model with a logistic outcome."""
    return linear_gaussian_scm(
        fig1c_graph, FIG1C_COEFFICIENTS, intercepts={"Y": -1.0}, noise_sd=0.5,
        binary_outcome=True,
    )


@pytest.fixture(scope="session")
def fig1c_linear(fig1c_graph):
    """Linear-Gaussian fig1c model; path effects are coefficient products."""
    return linear_gaussian_scm(fig1c_graph, FIG1C_COEFFICIENTS)


@pytest.fixture(scope="session")
def fig1c_data(fig1c_scm):
    return sample_dataset(fig1c_scm, 2000, seed=2)


@pytest.fixture(scope="session")
def appendix_cevae(appendix_scm, appendix_data):
    model = CevaeModel.build(appendix_scm.graph, appendix_data.profile, SMALL_TRAIN)
    train(model, appendix_data, SMALL_TRAIN)
    return model


@pytest.fixture(scope="session")
def fig1c_cevae(fig1c_scm, fig1c_data):
    model = CevaeModel.build(fig1c_scm.graph, fig1c_data.profile, SMALL_TRAIN)
    train(model, fig1c_data, SMALL_TRAIN)
    return model


@pytest.fixture(scope="session")
def appendix_fit(appendix_scm):
    """CEVAE fitted to 10 000 appendix records: model, epoch history, training and
    held-out records."""
    data = sample_dataset(appendix_scm, 10_000, seed=21)
    model = CevaeModel.build(appendix_scm.graph, data.profile, FULL_TRAIN)
    result = train(model, data, hooks=[latent_gap_hook(data)])
    held_out = sample_dataset(appendix_scm, 2000, seed=22)
    return model, result, data, held_out
