import numpy as np
from scipy import stats

from src.errors import ContractError

# Coefficient of a uniform distribution; larger values suggest bimodality.
BIMODALITY_THRESHOLD = 5.0 / 9.0


def bimodality_coefficient(values: np.ndarray) -> float:
    """Sarle's bimodality coefficient from sample skewness and excess kurtosis."""
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    n = x.size
    if n < 4:
        raise ContractError(f"The bimodality coefficient needs at least 4 values, got {n}")
    g = stats.skew(x, bias=False)
    k = stats.kurtosis(x, fisher=True, bias=False)
    return float((g**2 + 1.0) / (k + 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3))))


def ks_same_distribution(a: np.ndarray, b: np.ndarray, alpha: float = 0.01) -> bool:
    """True unless a two-sample KS test rejects equality at level ``alpha``."""
    result = stats.ks_2samp(np.ravel(a), np.ravel(b))
    return bool(result.pvalue >= alpha)
