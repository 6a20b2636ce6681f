"""Black-box audits: score a model on factual and counterfactual reconstructions
of the same held-out records."""

import logging
import threading
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.audit.adapters import BlackBoxAdapter
from src.audit.summary import describe_report
from src.cevae import APolicy, CevaeModel, DecodeMode, counterfactual_reconstruct, reconstruct
from src.config import settings
from src.dataset import Dataset
from src.errors import AdapterError
from src.metrics import (
    CfMode,
    PredictionPair,
    cf_score,
    round_predictions,
    statistical_parity_score,
)
from src.repetitions import run_repetitions, summarize
from src.rng import child_seed
from src.schemas import AuditReport, SanityResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuditData:
    """Reconstructions sharing one latent draw; only A and its descendants differ."""

    factual: Dataset
    counterfactual: Dataset


def feature_columns(model: CevaeModel) -> list[str]:
    """Default black-box inputs: every observed column except the outcome."""
    return [
        c.name for c in model.profile.columns
        if c.node != model.graph.outcome
    ]


def audit_datasets(
    model: CevaeModel, test: Dataset, seed: int, mode: DecodeMode | str = DecodeMode.SAMPLE
) -> AuditData:
    factual = reconstruct(model, test, mode, seed).data
    switched = counterfactual_reconstruct(model, test, APolicy.SWITCH, None, mode, seed).data
    return AuditData(factual, switched)


def _labels(dataset: Dataset, outcome: str) -> np.ndarray:
    # decoded in mean mode a binary outcome is a probability
    return round_predictions(dataset.node(outcome)[:, 0])


def sanity_check(
    adapter: BlackBoxAdapter,
    original: Dataset,
    reconstructed: Dataset,
    outcome: str,
    threshold: float | None = None,
) -> SanityResult:
    """Black-box accuracy on the original records against their own labels and on the
    factual reconstruction against the reconstructed labels."""
    threshold = settings.sanity_drop_threshold if threshold is None else threshold
    acc = []
    for data in (original, reconstructed):
        probs = adapter.predict_proba(data.to_frame())
        acc.append(float(np.mean(round_predictions(probs) == _labels(data, outcome))))
    drop = acc[0] - acc[1]
    warning = None
    if drop > threshold:
        warning = (
            f"Accuracy drops from {acc[0]:.3f} to {acc[1]:.3f} on reconstructed data "
            f"(more than {threshold:.2f}); audit scores carry little meaning"
        )
        logger.warning("Sanity check failed for %s: %s", adapter.name, warning)
    return SanityResult(
        accuracy_original=acc[0],
        accuracy_reconstructed=acc[1],
        drop=drop,
        passed=warning is None,
        warning=warning,
    )


def run_audit(
    model: CevaeModel,
    test: Dataset,
    adapter: BlackBoxAdapter,
    seed: int = 0,
    repetitions: int = 1,
    jobs: int | None = None,
    sanity: bool = True,
    mode: DecodeMode | str = DecodeMode.SAMPLE,
) -> AuditReport:
    """cf_score (both modes) and statistical parity per repetition, each repetition
    drawing new reconstructions; the sanity check runs on the first one."""
    sensitive = model.layout.sensitive
    seeds = [child_seed(seed, "audit", rep) for rep in range(repetitions)]
    log: list[dict] = []
    lock = threading.Lock()

    def repetition(rep: int) -> tuple[dict, AuditData]:
        data = audit_datasets(model, test, seeds[rep], mode)
        try:
            factual = adapter.predict_proba(data.factual.to_frame())
            switched = adapter.predict_proba(data.counterfactual.to_frame())
        except AdapterError as err:
            logger.error("Black box %s failed in repetition %d: %s", adapter.name, rep, err)
            with lock:
                err.partial_log = sorted(log, key=lambda r: r["repetition"])
            raise
        pair = PredictionPair(factual, switched, data.factual.node(sensitive))
        row = {
            "repetition": rep,
            "seed": seeds[rep],
            "mean_abs": cf_score(pair, CfMode.MEAN_ABS),
            "flip_rate": cf_score(pair, CfMode.FLIP_RATE),
            "sp": statistical_parity_score(factual, pair.a),
        }
        with lock:
            log.append(row)
        logger.info(
            "Audit %s rep %d: cf %.4f (flip %.4f) SP %.4f",
            adapter.name, rep, row["mean_abs"], row["flip_rate"], row["sp"],
        )
        return row, data

    results = run_repetitions(repetition, repetitions, jobs or settings.jobs)
    rows = [r for r, _ in results]
    sanity_result = None
    if sanity:
        sanity_result = sanity_check(adapter, test, results[0][1].factual, model.graph.outcome)
    report = AuditReport(
        model=adapter.name,
        n=test.n,
        repetitions=repetitions,
        seed=seed,
        seeds=seeds,
        cf_score_mean_abs=summarize([r["mean_abs"] for r in rows]),
        cf_score_flip_rate=summarize([r["flip_rate"] for r in rows]),
        statistical_parity=summarize([r["sp"] for r in rows]),
        sanity=sanity_result,
    )
    report.summary = describe_report(report)
    logger.info("%s", report.summary)
    return report


def audit_table(reports: list[AuditReport]) -> pd.DataFrame:
    """One row per audited model, mean and std of every score."""
    rows = []
    for r in reports:
        rows.append(
            {
                "model": r.model,
                "cf_mean_abs": r.cf_score_mean_abs.mean,
                "cf_mean_abs_std": r.cf_score_mean_abs.std,
                "cf_flip_rate": r.cf_score_flip_rate.mean,
                "cf_flip_rate_std": r.cf_score_flip_rate.std,
                "sp": r.statistical_parity.mean,
                "sp_std": r.statistical_parity.std,
                "accuracy_original": r.sanity.accuracy_original if r.sanity else np.nan,
                "accuracy_reconstructed": r.sanity.accuracy_reconstructed if r.sanity else np.nan,
            }
        )
    return pd.DataFrame(rows)
