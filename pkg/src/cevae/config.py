from pydantic import BaseModel, ConfigDict, Field

from src.nnet import SIGMA_MIN


class TrainConfig(BaseModel):
    """CEVAE training hyperparameters."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(1e-4, gt=0.0)
    batch_size: int = Field(512, gt=0)
    n_mc_samples: int = Field(1, gt=0)
    epochs: int = Field(30, gt=0)
    seed: int = 0
    latent_dim: int = Field(5, gt=0)
    hidden_width: int = Field(100, gt=0)
    sigma_min: float = Field(SIGMA_MIN, gt=0.0)
