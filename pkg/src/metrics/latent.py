"""How well the CEVAE latent space separates the sensitive groups."""

import logging
from dataclasses import dataclass

import numpy as np

from src.cevae import CevaeModel, ElboTerms, EpochHook, infer
from src.cevae.model import sensitive_codes
from src.dataset import Dataset
from src.errors import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentGap:
    per_dimension: np.ndarray
    max: float

    def to_row(self, prefix: str = "latent_gap") -> dict[str, float]:
        row = {f"{prefix}_{d}": float(v) for d, v in enumerate(self.per_dimension)}
        row[f"{prefix}_max"] = self.max
        return row


def latent_gap(model: CevaeModel, dataset: Dataset) -> LatentGap:
    """|mean(mu | a=0) - mean(mu | a=1)| per latent dimension, over posterior means."""
    a = sensitive_codes(dataset.node(model.layout.sensitive))
    if a.min() == a.max():
        raise ContractError("latent_gap needs records from both sensitive groups")
    mu = infer(model, dataset).mean
    gap = np.abs(mu[a == 0].mean(axis=0) - mu[a == 1].mean(axis=0))
    return LatentGap(gap, float(gap.max()))


def latent_gap_hook(dataset: Dataset) -> EpochHook:
    """Epoch hook adding the per-dimension latent gap on ``dataset`` to the epoch row."""

    def hook(epoch: int, model: CevaeModel, terms: ElboTerms) -> dict[str, float]:
        gap = latent_gap(model, dataset)
        logger.debug("Epoch %d latent gap max %.4f", epoch, gap.max)
        return gap.to_row()

    return hook
