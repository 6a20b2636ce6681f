from collections.abc import Callable, Sequence

import numpy as np

from src.nnet.heads import Grad, HeadOutput
from src.nnet.mlp import Mlp

LossFn = Callable[[list[HeadOutput]], tuple[float, Sequence[Grad | None]]]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|); 0 for empty inputs."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def numeric_gradient(
    f: Callable[[], float], values: np.ndarray, indices: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central differences of ``f`` w.r.t. ``values[indices]`` (perturbed in place)."""
    out = np.empty(len(indices))
    for k, i in enumerate(indices):
        saved = values[i]
        values[i] = saved + h
        f_plus = f()
        values[i] = saved - h
        f_minus = f()
        values[i] = saved
        out[k] = (f_plus - f_minus) / (2.0 * h)
    return out


def grad_check(
    mlp: Mlp,
    x: np.ndarray,
    loss: LossFn,
    h: float = 1e-5,
    max_params: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare backprop against central differences; returns the max relative error.

    ``loss`` maps head outputs to (scalar loss, per-head upstream gradients).
    With ``max_params`` a random subset of parameters is checked.
    """
    params = mlp.params
    saved_grads = params.grads.copy()
    params.zero_grad()
    _, upstream = loss(mlp.forward(x))
    mlp.backward(upstream)
    analytic = params.grads.copy()
    params.grads[...] = saved_grads

    indices = np.arange(params.size)
    if max_params is not None and max_params < params.size:
        indices = np.sort((rng or np.random.default_rng(0)).choice(params.size, max_params,
                                                                    replace=False))
    numeric = numeric_gradient(lambda: float(loss(mlp.predict(x))[0]), params.values, indices, h)
    return relative_error(analytic[indices], numeric)
