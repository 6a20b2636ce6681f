from src.metrics.distribution import (
    BIMODALITY_THRESHOLD,
    bimodality_coefficient,
    ks_same_distribution,
)
from src.metrics.fairness import (
    CfMode,
    PredictionPair,
    WorldPredictor,
    cf_score,
    feature_predictor,
    oracle_cf,
    oracle_pscf,
    round_predictions,
    statistical_parity_score,
)
from src.metrics.latent import LatentGap, latent_gap, latent_gap_hook

__all__ = [
    "BIMODALITY_THRESHOLD",
    "CfMode",
    "LatentGap",
    "PredictionPair",
    "WorldPredictor",
    "bimodality_coefficient",
    "cf_score",
    "feature_predictor",
    "ks_same_distribution",
    "latent_gap",
    "latent_gap_hook",
    "oracle_cf",
    "oracle_pscf",
    "round_predictions",
    "statistical_parity_score",
]
