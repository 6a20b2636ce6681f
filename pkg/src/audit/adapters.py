"""Black boxes to audit.

Every adapter maps a frame of reconstructed feature columns to P(Y=1) per row.
Builtin adapters are trained here; external adapters wrap a child process or an
HTTP endpoint and hold no state between calls.
"""

import io
import logging
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from collections.abc import Sequence
from enum import Enum

import httpx
import numpy as np
import pandas as pd
from sklearn.ensemble import RandomForestClassifier
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from src.config import settings
from src.errors import AdapterError, ContractError
from src.fairpred import AuxConfig, AuxModel, predict, train_aux

logger = logging.getLogger(__name__)


class BuiltinKind(str, Enum):
    LR = "lr"
    LR_FIXED_A = "lr_fixed_a"
    RF = "rf"


class BlackBoxAdapter(ABC):
    """``columns`` is the adapter's input order; frames are reindexed to it."""

    name: str

    def __init__(self, columns: Sequence[str]):
        if not columns:
            raise ContractError("A black box needs at least one input column")
        self.columns = list(columns)

    def inputs(self, frame: pd.DataFrame) -> pd.DataFrame:
        missing = [c for c in self.columns if c not in frame.columns]
        if missing:
            raise ContractError(f"Black box {self.name} expects columns {missing} not in the data")
        return frame[self.columns]

    def predict_proba(self, frame: pd.DataFrame) -> np.ndarray:
        probs = np.asarray(self._predict(self.inputs(frame)), dtype=np.float64).reshape(-1)
        if probs.size != len(frame):
            raise AdapterError(
                f"Black box {self.name} returned {probs.size} values for {len(frame)} rows"
            )
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0) or np.any(probs > 1.0):
            raise AdapterError(f"Black box {self.name} returned values outside [0, 1]")
        return probs

    @abstractmethod
    def _predict(self, frame: pd.DataFrame) -> np.ndarray: ...


# --- Builtin ---


class AuxAdapter(BlackBoxAdapter):
    """A network from ``fairpred``; ``fixed`` columns are replaced by constants."""

    def __init__(self, name: str, aux: AuxModel, columns: Sequence[str],
                 fixed: dict[str, float] | None = None):
        super().__init__(columns)
        self.name = name
        self.aux = aux
        self.fixed = dict(fixed or {})

    def _predict(self, frame: pd.DataFrame) -> np.ndarray:
        if self.fixed:
            frame = frame.assign(**self.fixed)
        return predict(self.aux, frame.to_numpy(dtype=np.float64))


class ForestAdapter(BlackBoxAdapter):
    name = "rf"

    def __init__(self, forest: RandomForestClassifier, columns: Sequence[str]):
        super().__init__(columns)
        self.forest = forest

    def _predict(self, frame: pd.DataFrame) -> np.ndarray:
        x = frame.to_numpy(dtype=np.float64)
        classes = list(self.forest.classes_)
        if 1.0 not in classes:
            return np.zeros(len(frame))
        # trees are fit on encoded labels, so each predicts a class index
        positive = float(classes.index(1.0))
        votes = [tree.predict(x) == positive for tree in self.forest.estimators_]
        return np.mean(votes, axis=0)


def _xy(frame: pd.DataFrame, labels, columns: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ContractError(f"Training data lacks columns {missing}")
    return frame[list(columns)].to_numpy(dtype=np.float64), np.asarray(labels, dtype=np.float64)


def train_lr(frame: pd.DataFrame, labels, columns: Sequence[str],
             config: AuxConfig | None = None) -> AuxAdapter:
    """Logistic regression: a network without hidden layers."""
    x, y = _xy(frame, labels, columns)
    cfg = (config or AuxConfig()).model_copy(update={"hidden_dims": ()})
    return AuxAdapter(BuiltinKind.LR.value, train_aux(x, y, cfg), columns)


def train_lr_fixed_a(frame: pd.DataFrame, labels, columns: Sequence[str], sensitive_column: str,
                     config: AuxConfig | None = None) -> AuxAdapter:
    """Logistic regression whose sensitive input is held at its training mean when predicting."""
    if sensitive_column not in columns:
        raise ContractError(f"{sensitive_column} is not an input column of the black box")
    adapter = train_lr(frame, labels, columns, config)
    adapter.name = BuiltinKind.LR_FIXED_A.value
    adapter.fixed = {sensitive_column: float(frame[sensitive_column].mean())}
    return adapter


def train_rf(frame: pd.DataFrame, labels, columns: Sequence[str], n_trees: int | None = None,
             max_depth: int | None = None, seed: int = 0) -> ForestAdapter:
    """Bagged Gini CART trees scored by the fraction of trees voting 1; OOB accuracy is logged."""
    x, y = _xy(frame, labels, columns)
    forest = RandomForestClassifier(
        n_estimators=n_trees or settings.rf_trees,
        max_depth=max_depth or settings.rf_max_depth,
        criterion="gini",
        bootstrap=True,
        oob_score=True,
        random_state=seed,
        n_jobs=1,
    )
    forest.fit(x, y)
    logger.info("Random forest: %d trees, out-of-bag accuracy %.4f", forest.n_estimators,
                forest.oob_score_)
    return ForestAdapter(forest, columns)


def train_builtin(kind: BuiltinKind | str, frame: pd.DataFrame, labels, columns: Sequence[str],
                  sensitive_column: str, config: AuxConfig | None = None,
                  seed: int = 0) -> BlackBoxAdapter:
    kind = BuiltinKind(kind)
    config = (config or AuxConfig()).model_copy(update={"seed": seed})
    if kind == BuiltinKind.LR:
        return train_lr(frame, labels, columns, config)
    if kind == BuiltinKind.LR_FIXED_A:
        return train_lr_fixed_a(frame, labels, columns, sensitive_column, config)
    return train_rf(frame, labels, columns, seed=seed)


# --- External ---


class RetryableStatus(Exception):
    """Rate limiting or a server error; the request is worth repeating."""



def _retrying(retries: int, errors: tuple[type[BaseException], ...]) -> Retrying:
    return Retrying(
        stop=stop_after_attempt(retries + 1),
        wait=wait_exponential(multiplier=1, min=2, max=30),
        retry=retry_if_exception_type(errors),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )


def parse_probabilities(text: str, name: str) -> np.ndarray:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    try:
        return np.array([float(line) for line in lines], dtype=np.float64)
    except ValueError as err:
        raise AdapterError(f"Black box {name} wrote a non-numeric line: {err}") from None


class ProcessAdapter(BlackBoxAdapter):
    """Runs ``command`` once per call: CSV with a header on stdin, one probability per
    line on stdout. Calls on one instance are serialized."""

    def __init__(self, command: str | Sequence[str], columns: Sequence[str],
                 timeout: float | None = None, retries: int | None = None):
        super().__init__(columns)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.name = f"cmd:{shlex.join(self.command)}"
        self.timeout = timeout or settings.adapter_timeout
        self.retries = settings.adapter_retries if retries is None else retries
        self._lock = threading.Lock()

    def _call(self, payload: str) -> str:
        proc = subprocess.run(
            self.command, input=payload, capture_output=True, text=True,
            timeout=self.timeout, check=False,
        )
        if proc.returncode != 0:
            raise AdapterError(
                f"Black box {self.name} exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        return proc.stdout

    def _predict(self, frame: pd.DataFrame) -> np.ndarray:
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False)
        try:
            with self._lock:
                out = _retrying(self.retries, (AdapterError, subprocess.TimeoutExpired))(
                    self._call, buffer.getvalue()
                )
        except subprocess.TimeoutExpired:
            raise AdapterError(f"Black box {self.name} timed out after {self.timeout}s") from None
        except OSError as err:
            raise AdapterError(f"Black box {self.name} could not be started: {err}") from None
        return parse_probabilities(out, self.name)


class HttpAdapter(BlackBoxAdapter):
    """POSTs ``{"columns": [...], "rows": [[...], ...]}`` and reads
    ``{"probabilities": [...]}`` (a bare list is accepted too)."""

    def __init__(self, url: str, columns: Sequence[str], timeout: float | None = None,
                 retries: int | None = None, client: httpx.Client | None = None):
        super().__init__(columns)
        self.url = url
        self.name = url
        self.timeout = timeout or settings.adapter_timeout
        self.retries = settings.adapter_retries if retries is None else retries
        self._client = client

    def _call(self, payload: dict) -> list:
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            response = client.post(self.url, json=payload)
            if response.status_code == 429 or response.status_code >= 500:
                raise RetryableStatus(f"{self.url} answered {response.status_code}")
            response.raise_for_status()
            body = response.json()
        finally:
            if self._client is None:
                client.close()
        return body["probabilities"] if isinstance(body, dict) else body

    def _predict(self, frame: pd.DataFrame) -> np.ndarray:
        payload = {"columns": self.columns, "rows": frame.to_numpy(dtype=np.float64).tolist()}
        try:
            probs = _retrying(self.retries, (httpx.TransportError, RetryableStatus))(
                self._call, payload
            )
        except (httpx.HTTPError, RetryableStatus, KeyError, TypeError, ValueError) as err:
            raise AdapterError(f"Black box {self.name} failed: {err}") from None
        return np.asarray(probs, dtype=np.float64)
