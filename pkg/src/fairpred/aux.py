"""Auxiliary outcome models: small MLPs with a sigmoid output trained on BCE."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ContractError
from src.fairpred.selection import InputSelection
from src.metrics import round_predictions
from src.nnet import (
    Activation,
    HeadKind,
    HeadSpec,
    Mlp,
    MlpSpec,
    OptState,
    log_prob,
    log_prob_grad,
    mlp_from_document,
    mlp_to_document,
    optimizer_step,
    scale_grad,
)
from src.rng import substream
from src.schemas import read_json, write_json

logger = logging.getLogger(__name__)

_OUTPUT = HeadSpec(HeadKind.BERNOULLI, 1)


class AuxConfig(BaseModel):
    model_config = {"extra": "forbid"}

    hidden_dims: tuple[int, ...] = (100,)  # () gives logistic regression
    learning_rate: float = Field(1e-3, gt=0)
    decay: float = Field(0.9, gt=0, lt=1)  # RMSprop moving average
    batch_size: int = Field(128, gt=0)
    epochs: int = Field(30, gt=0)
    seed: int = 0

    @classmethod
    def logistic(cls, **overrides) -> "AuxConfig":
        return cls(hidden_dims=(), **overrides)


@dataclass
class AuxModel:
    mlp: Mlp
    selection: InputSelection | None = None
    losses: list[float] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.mlp.spec.input_dim


def _check_features(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError(f"Features must be a 2-d matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ContractError("Features contain non-finite values")
    return x


def _check_labels(labels: np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.size != n:
        raise ContractError(f"{y.size} labels for {n} feature rows")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ContractError("Labels must be binary (0/1)")
    return y


def bce(aux: AuxModel, features: np.ndarray, labels: np.ndarray) -> float:
    x = _check_features(features)
    y = _check_labels(labels, x.shape[0])
    (out,) = aux.mlp.predict(x)
    return float(-log_prob(_OUTPUT, out.params, y.reshape(-1, 1)).mean())


def train_aux(
    features: np.ndarray,
    labels: np.ndarray,
    config: AuxConfig | None = None,
    selection: InputSelection | None = None,
) -> AuxModel:
    """Minibatch RMSprop on the mean binary cross-entropy; one loss entry per epoch."""
    config = config or AuxConfig()
    x = _check_features(features)
    y = _check_labels(labels, x.shape[0])
    if y.min() == y.max():
        logger.warning("All %d labels equal %d; training a constant predictor", y.size, y[0])

    spec = MlpSpec(
        input_dim=x.shape[1],
        hidden_dims=tuple(config.hidden_dims),
        hidden_activation=Activation.RELU,
        output_heads=(_OUTPUT,),
    )
    aux = AuxModel(Mlp(spec, rng=substream(config.seed, "fairpred", "init")), selection)
    opt = OptState.rmsprop(aux.mlp.params, lr=config.learning_rate, decay=config.decay)
    rng = substream(config.seed, "fairpred", "train")
    n = x.shape[0]

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            target = y[idx].reshape(-1, 1)
            (out,) = aux.mlp.forward(x[idx])
            total += -log_prob(_OUTPUT, out.params, target).sum()
            grad = scale_grad(log_prob_grad(_OUTPUT, out.params, target), -1.0 / idx.size)
            aux.mlp.backward([grad])
            optimizer_step(opt, aux.mlp.params)
        aux.losses.append(total / n)
        logger.debug("Aux epoch %d/%d: bce %.5f", epoch, config.epochs, aux.losses[-1])

    logger.info(
        "Trained auxiliary model (%s) on %d records: final bce %.4f",
        selection.label if selection else f"{x.shape[1]} raw features", n, aux.losses[-1],
    )
    return aux


def predict(aux: AuxModel, features: np.ndarray) -> np.ndarray:
    """P(Y=1) per record."""
    x = _check_features(features)
    (out,) = aux.mlp.predict(x)
    return out["p"].reshape(-1)


def accuracy(aux: AuxModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Share of correct labels after rounding; probability 0.5 rounds to class 1."""
    probs = predict(aux, features)
    y = _check_labels(labels, probs.size)
    return float(np.mean(round_predictions(probs) == y))


# --- Persistence ---

AUX_VERSION = 1


def save_aux(aux: AuxModel, path: str | Path) -> Path:
    doc = {
        "version": AUX_VERSION,
        "network": mlp_to_document(aux.mlp),
        "selection": (
            {"tokens": list(aux.selection.tokens), "base_a": aux.selection.base_a}
            if aux.selection else None
        ),
        "losses": aux.losses,
    }
    path = write_json(path, doc)
    logger.info("Saved auxiliary model to %s", path)
    return path


def load_aux(path: str | Path) -> AuxModel:
    doc = read_json(path)
    if doc.get("version") != AUX_VERSION:
        raise ContractError(f"Unsupported auxiliary model version {doc.get('version')}")
    sel = doc.get("selection")
    selection = InputSelection(tuple(sel["tokens"]), sel["base_a"]) if sel else None
    return AuxModel(mlp_from_document(doc["network"]), selection, list(doc.get("losses", [])))
