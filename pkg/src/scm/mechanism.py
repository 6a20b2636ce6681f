"""Structural mechanisms: parent values + exogenous noise -> node values.

Every mechanism is a deterministic function of its parents and its own noise
draw, so re-evaluating with the same noise reproduces a record exactly.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from src.dataset import DistKind
from src.errors import ContractError

Values = dict[str, np.ndarray]
ParamFn = Callable[[Values], dict[str, np.ndarray]]
StructuralFn = Callable[[Values, np.ndarray], np.ndarray]
NoiseFn = Callable[[np.random.Generator, int], np.ndarray]


def as_matrix(value, n: int, width: int) -> np.ndarray:
    """Broadcast a scalar, a per-record vector or an (n, width) array to (n, width)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full((n, width), float(arr))
    if arr.ndim == 1:
        if arr.size == n and width == 1:
            return arr.reshape(n, 1)
        if arr.size == width:
            return np.broadcast_to(arr, (n, width)).copy()
    if arr.shape == (n, width):
        return arr
    raise ContractError(f"Cannot broadcast value of shape {arr.shape} to ({n}, {width})")


def standard_normal(width: int) -> NoiseFn:
    return lambda rng, n: rng.standard_normal((n, width))


def uniform(width: int) -> NoiseFn:
    return lambda rng, n: rng.random((n, width))


@dataclass(frozen=True, eq=False)
class Mechanism:
    """One structural equation.

    ``params`` maps parent values to the conditional distribution parameters
    ("mean"/"sd", "logit" or "logits"); the value is produced from those and the
    noise. A custom ``fn`` replaces that generic transform.
    """

    parents: tuple[str, ...]
    kind: DistKind
    params: ParamFn | None = None
    noise: NoiseFn = standard_normal(1)
    noise_width: int = 1
    width: int = 1
    categories: int | None = None
    columns: tuple[str, ...] = ()
    fn: StructuralFn | None = None

    def __post_init__(self):
        if self.params is None and self.fn is None:
            raise ContractError("A mechanism needs distribution params or a structural fn")
        if self.columns and len(self.columns) != self.width:
            raise ContractError(f"{len(self.columns)} column names for width {self.width}")

    def distribution(self, parents: Values, n: int) -> dict[str, np.ndarray]:
        if self.params is None:
            raise ContractError("Mechanism has no closed-form distribution")
        raw = self.params(parents)
        if self.kind == DistKind.GAUSSIAN:
            return {
                "mean": as_matrix(raw["mean"], n, self.width),
                "sd": as_matrix(raw["sd"], n, 1) if np.ndim(raw["sd"]) < 2 else raw["sd"],
            }
        if self.kind == DistKind.BERNOULLI:
            return {"logit": as_matrix(raw["logit"], n, self.width)}
        logits = np.asarray(raw["logits"], dtype=np.float64)
        if logits.ndim == 2:
            logits = logits[:, None, :]
        return {"logits": np.broadcast_to(logits, (n, self.width, self.categories))}

    def __call__(self, parents: Values, noise: np.ndarray) -> np.ndarray:
        n = noise.shape[0]
        missing = [p for p in self.parents if p not in parents]
        if missing:
            raise ContractError(f"Mechanism evaluated without parents {missing}")
        scoped = {p: parents[p] for p in self.parents}
        if self.fn is not None:
            return as_matrix(self.fn(scoped, noise), n, self.width)
        dist = self.distribution(scoped, n)
        if self.kind == DistKind.GAUSSIAN:
            return dist["mean"] + dist["sd"] * noise
        if self.kind == DistKind.BERNOULLI:
            return (noise < expit(dist["logit"])).astype(np.float64)
        cum = np.cumsum(softmax(dist["logits"], axis=-1), axis=-1)
        codes = (noise[..., None] > cum).sum(axis=-1)
        return np.minimum(codes, self.categories - 1).astype(np.float64)


def gaussian(parents, mean: Callable[[Values], np.ndarray | float],
             sd: Callable[[Values], np.ndarray | float] | float = 1.0,
             width: int = 1, columns: tuple[str, ...] = ()) -> Mechanism:
    sd_fn = sd if callable(sd) else (lambda v, s=float(sd): s)
    return Mechanism(
        parents=tuple(parents),
        kind=DistKind.GAUSSIAN,
        params=lambda v: {"mean": mean(v), "sd": sd_fn(v)},
        noise=standard_normal(width),
        noise_width=width,
        width=width,
        columns=columns,
    )


def bernoulli(parents, logit: Callable[[Values], np.ndarray | float],
              columns: tuple[str, ...] = ()) -> Mechanism:
    """Value is 1[u < sigmoid(logit)] with u ~ U(0, 1)."""
    return Mechanism(
        parents=tuple(parents),
        kind=DistKind.BERNOULLI,
        params=lambda v: {"logit": logit(v)},
        noise=uniform(1),
        columns=columns,
    )


def categorical(parents, logits: Callable[[Values], np.ndarray], categories: int,
                columns: tuple[str, ...] = ()) -> Mechanism:
    """Inverse-CDF draw of a class code in {0..categories-1}."""
    if categories < 2:
        raise ContractError("Categorical mechanisms need categories >= 2")
    return Mechanism(
        parents=tuple(parents),
        kind=DistKind.CATEGORICAL,
        params=lambda v: {"logits": logits(v)},
        noise=uniform(1),
        categories=categories,
        columns=columns,
    )
