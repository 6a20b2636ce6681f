"""Repeated experiments: each repetition gets its own seed substream, so the
results are the same for any number of worker threads."""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from src.errors import ContractError
from src.schemas import ScoreSummary

logger = logging.getLogger(__name__)

T = TypeVar("T")


def run_repetitions(fn: Callable[[int], T], repetitions: int, jobs: int = 1) -> list[T]:
    """``fn(rep)`` for every repetition index, returned in index order."""
    if repetitions < 1:
        raise ContractError(f"repetitions must be >= 1, got {repetitions}")
    if jobs < 1:
        raise ContractError(f"jobs must be >= 1, got {jobs}")
    if jobs == 1 or repetitions == 1:
        return [fn(rep) for rep in range(repetitions)]
    logger.info("Running %d repetitions on %d threads", repetitions, jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(repetitions)))


def summarize(values) -> ScoreSummary:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return ScoreSummary(mean=float(arr.mean()), std=std, values=arr.tolist())
