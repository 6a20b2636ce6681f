"""Repeated-split evaluation of auxiliary models: unconstrained baselines and
the fairness/accuracy sweep over input selections."""

import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from src.cevae import CevaeModel
from src.cevae.model import encode_values
from src.config import settings
from src.dataset import Dataset
from src.errors import ContractError
from src.fairpred.aux import AuxConfig, AuxModel, accuracy, predict, train_aux
from src.fairpred.selection import InputSelection, build_inputs, world_inputs
from src.graph import CausalGraph
from src.metrics import statistical_parity_score
from src.repetitions import run_repetitions, summarize
from src.rng import child_seed
from src.scm import CounterfactualWorld

logger = logging.getLogger(__name__)


def outcome_labels(graph: CausalGraph, dataset: Dataset) -> np.ndarray:
    return dataset.node(graph.outcome)[:, 0]


def raw_features(graph: CausalGraph, dataset: Dataset) -> np.ndarray:
    """Every observed node except the outcome, sensitive attribute included."""
    nodes = [n for n in graph.topological_order if n in graph.observed and n != graph.outcome]
    return np.hstack([encode_values(dataset.profile, n, dataset.node(n)) for n in nodes])


def split_indices(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    train_idx, test_idx = train_test_split(
        np.arange(n), train_size=train_fraction, random_state=seed
    )
    return np.sort(train_idx), np.sort(test_idx)


def _with_seed(config: AuxConfig, seed: int) -> AuxConfig:
    return config.model_copy(update={"seed": seed})


# --- Baselines ---


def baselines(
    graph: CausalGraph,
    dataset: Dataset,
    config: AuxConfig | None = None,
    repetitions: int | None = None,
    train_fraction: float | None = None,
    seed: int = 0,
    jobs: int | None = None,
) -> pd.DataFrame:
    """Test accuracy of an MLP and a logistic regression on the raw observed features,
    as mean and std over random splits."""
    config = config or AuxConfig()
    repetitions = repetitions or settings.repetitions
    train_fraction = train_fraction or settings.train_fraction
    x = raw_features(graph, dataset)
    y = outcome_labels(graph, dataset)
    models = {"MLP": config, "LogisticRegression": config.model_copy(update={"hidden_dims": ()})}

    def repetition(rep: int) -> dict[str, float]:
        train_idx, test_idx = split_indices(y.size, train_fraction, child_seed(seed, "split", rep))
        scores = {}
        for name, cfg in models.items():
            cfg_rep = _with_seed(cfg, child_seed(seed, name, rep))
            aux = train_aux(x[train_idx], y[train_idx], cfg_rep)
            scores[name] = accuracy(aux, x[test_idx], y[test_idx])
        return scores

    runs = run_repetitions(repetition, repetitions, jobs or settings.jobs)
    rows = []
    for name in models:
        summary = summarize([r[name] for r in runs])
        rows.append(
            {"model": name, "accuracy_mean": summary.mean, "accuracy_std": summary.std,
             "repetitions": repetitions}
        )
        logger.info("Baseline %s: accuracy %.4f +- %.4f", name, summary.mean, summary.std)
    return pd.DataFrame(rows)


# --- Sweep ---


def sweep(
    model: CevaeModel,
    dataset: Dataset,
    selections: Sequence[InputSelection],
    config: AuxConfig | None = None,
    repetitions: int | None = None,
    train_fraction: float | None = None,
    seed: int = 0,
    jobs: int | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Accuracy and statistical parity of one auxiliary model per selection.

    Returns the summary table (one row per selection) and the per-repetition
    runs, which are the points of the accuracy-vs-parity curve.
    """
    config = config or AuxConfig()
    repetitions = repetitions or settings.repetitions
    train_fraction = train_fraction or settings.train_fraction
    for selection in selections:
        selection.validate(model)
    features = {s.label: build_inputs(model, dataset, s, seed=seed) for s in selections}
    y = outcome_labels(model.graph, dataset)
    a = dataset.node(model.layout.sensitive)[:, 0]

    def repetition(rep: int) -> list[dict]:
        train_idx, test_idx = split_indices(y.size, train_fraction, child_seed(seed, "split", rep))
        out = []
        for selection in selections:
            x = features[selection.label]
            aux = train_aux(
                x[train_idx], y[train_idx], _with_seed(config, child_seed(seed, "aux", rep)),
                selection,
            )
            out.append(
                {
                    "selection": selection.label,
                    "repetition": rep,
                    "accuracy": accuracy(aux, x[test_idx], y[test_idx]),
                    "sp_score": statistical_parity_score(predict(aux, x[test_idx]), a[test_idx]),
                }
            )
        return out

    runs = pd.DataFrame(
        [row for rows in run_repetitions(repetition, repetitions, jobs or settings.jobs)
         for row in rows]
    )
    table = []
    for selection in selections:
        part = runs[runs["selection"] == selection.label]
        acc, sp = summarize(part["accuracy"]), summarize(part["sp_score"])
        table.append(
            {
                "selection": selection.label,
                "accuracy_mean": acc.mean,
                "accuracy_std": acc.std,
                "sp_mean": sp.mean,
                "sp_std": sp.std,
                "repetitions": repetitions,
            }
        )
        logger.info(
            "Selection %-12s accuracy %.4f +- %.4f  SP %.4f +- %.4f",
            selection.label, acc.mean, acc.std, sp.mean, sp.std,
        )
    return pd.DataFrame(table), runs


class AuxPredictor:
    """An auxiliary model as an oracle predictor over counterfactual worlds."""

    def __init__(self, cevae: CevaeModel, aux: AuxModel, selection: InputSelection | None = None):
        self.cevae = cevae
        self.aux = aux
        self.selection = selection or aux.selection
        if self.selection is None:
            raise ContractError("AuxPredictor needs the model's input selection")

    def __call__(self, world: CounterfactualWorld) -> np.ndarray:
        return predict(self.aux, world_inputs(self.cevae, world, self.selection))
