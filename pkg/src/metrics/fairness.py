"""Group and counterfactual fairness scores; every score lies in [0, 1]."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.errors import ContractError
from src.graph import PathSet, require_identifiable
from src.scm import CounterfactualWorld, Scm, nested_world, sample_dataset

logger = logging.getLogger(__name__)

# An oracle predictor reads whatever it needs from a (counterfactual) world.
WorldPredictor = Callable[[CounterfactualWorld], np.ndarray]


class CfMode(str, Enum):
    MEAN_ABS = "mean_abs"
    FLIP_RATE = "flip_rate"


def round_predictions(probs: np.ndarray) -> np.ndarray:
    """Class labels at threshold 0.5; a tie goes to class 1."""
    return (np.asarray(probs, dtype=np.float64) >= 0.5).astype(np.int64)


def _clamp(value: float) -> float:
    return float(min(1.0, max(0.0, value)))


def statistical_parity_score(y_hat: np.ndarray, a: np.ndarray) -> float:
    """1 - |P(round(y_hat)=1 | a=0) - P(round(y_hat)=1 | a=1)|."""
    y = round_predictions(np.asarray(y_hat).reshape(-1))
    a = np.asarray(a).reshape(-1)
    if y.shape != a.shape:
        raise ContractError(f"{y.size} predictions for {a.size} sensitive values")
    rates = []
    for group in (0, 1):
        sel = a == group
        if not sel.any():
            raise ContractError(f"Statistical parity needs records with a={group}")
        rates.append(y[sel].mean())
    return _clamp(1.0 - abs(rates[0] - rates[1]))


@dataclass(frozen=True)
class PredictionPair:
    factual: np.ndarray
    counterfactual: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.factual, dtype=np.float64).reshape(-1)
        cf = np.asarray(self.counterfactual, dtype=np.float64).reshape(-1)
        if f.shape != cf.shape:
            raise ContractError(f"Prediction columns differ in length: {f.size} vs {cf.size}")
        for name, col in (("factual", f), ("counterfactual", cf)):
            if np.any(~np.isfinite(col)) or np.any(col < 0.0) or np.any(col > 1.0):
                raise ContractError(f"{name} predictions must be probabilities in [0, 1]")
        object.__setattr__(self, "factual", f)
        object.__setattr__(self, "counterfactual", cf)
        object.__setattr__(self, "a", np.asarray(self.a).reshape(-1))

    def __len__(self) -> int:
        return self.factual.size


def cf_score(pairs: PredictionPair, mode: CfMode | str = CfMode.MEAN_ABS) -> float:
    """mean_abs: 1 - mean|y_f - y_cf|; flip_rate: share of unchanged rounded labels."""
    mode = CfMode(mode)
    if len(pairs) == 0:
        raise ContractError("cf_score needs at least one prediction pair")
    if mode == CfMode.MEAN_ABS:
        return _clamp(1.0 - float(np.mean(np.abs(pairs.factual - pairs.counterfactual))))
    same = round_predictions(pairs.factual) == round_predictions(pairs.counterfactual)
    return _clamp(float(same.mean()))


def _predict(predictor: WorldPredictor, world: CounterfactualWorld) -> np.ndarray:
    out = np.asarray(predictor(world), dtype=np.float64).reshape(-1)
    if out.size != world.factual.n:
        raise ContractError(
            f"Predictor returned {out.size} values for {world.factual.n} records"
        )
    return out


def oracle_cf(predictor: WorldPredictor, scm: Scm, n: int, seed: int) -> float:
    """cf_score(mean_abs) between factual records and exact do(A = 1 - a) counterfactuals."""
    data = sample_dataset(scm, n, seed)
    a = data.node(scm.graph.sensitive)
    factual = CounterfactualWorld.identity(scm, data)
    flipped = CounterfactualWorld(scm, data, active=1.0 - a)
    pair = PredictionPair(_predict(predictor, factual), _predict(predictor, flipped), a)
    score = cf_score(pair)
    logger.info("Oracle counterfactual fairness on %s (n=%d): %.4f", scm.name, n, score)
    return score


def oracle_pscf(predictor: WorldPredictor, scm: Scm, pi: PathSet, n: int, seed: int) -> float:
    """cf_score(mean_abs) between factual records and the pi-nested counterfactual in which
    1 - a propagates along pi and the observed a along every other path."""
    require_identifiable(scm.graph, pi)
    data = sample_dataset(scm, n, seed)
    a = data.node(scm.graph.sensitive)
    factual = CounterfactualWorld.identity(scm, data)
    nested = nested_world(scm, data, pi, active=1.0 - a, base=a)
    pair = PredictionPair(_predict(predictor, factual), _predict(predictor, nested), a)
    score = cf_score(pair)
    logger.info(
        "Oracle path-specific counterfactual fairness on %s along {%s}: %.4f",
        scm.name, ", ".join(sorted(str(p) for p in pi)), score,
    )
    return score


def feature_predictor(
    nodes: Sequence[str], fn: Callable[[np.ndarray], np.ndarray]
) -> WorldPredictor:
    """Oracle predictor applying ``fn`` to the columns of ``nodes`` read from the world."""

    def predict(world: CounterfactualWorld) -> np.ndarray:
        return fn(np.hstack([world.node(n) for n in nodes]))

    return predict
