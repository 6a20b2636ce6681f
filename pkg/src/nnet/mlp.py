import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.errors import ContractError, StateError
from src.nnet.heads import Grad, HeadOutput, head_backward, head_forward
from src.nnet.params import ParamStore, glorot_uniform
from src.nnet.spec import Activation, MlpSpec

logger = logging.getLogger(__name__)


def _activate(kind: Activation, pre: np.ndarray) -> np.ndarray:
    if kind == Activation.ELU:
        return np.where(pre > 0, pre, np.expm1(np.minimum(pre, 0.0)))
    return np.maximum(pre, 0.0)


def _activate_grad(kind: Activation, pre: np.ndarray) -> np.ndarray:
    if kind == Activation.ELU:
        return np.where(pre > 0, 1.0, np.exp(np.minimum(pre, 0.0)))
    return (pre > 0).astype(np.float64)


@dataclass
class _Cache:
    inputs: list[np.ndarray]  # input of every dense layer, trunk first
    pre: list[np.ndarray]
    heads: list[HeadOutput]


class Mlp:
    """Feed-forward trunk with one or more distribution heads.

    ``forward`` caches activations for a following ``backward``; ``predict``
    is the cache-free variant for frozen parameters.
    """

    def __init__(self, spec: MlpSpec, params: ParamStore | None = None,
                 rng: np.random.Generator | None = None):
        self.spec = spec
        shapes = spec.layer_shapes()
        if params is None:
            params = glorot_uniform(ParamStore.allocate(shapes), rng or np.random.default_rng(0))
        elif {k: v[1] for k, v in params.layout.items()} != shapes:
            raise ContractError("Parameter layout does not match the network spec")
        self.params = params
        self._cache: _Cache | None = None

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.spec.input_dim:
            raise ContractError(
                f"Input width {x.shape[1]} does not match input_dim {self.spec.input_dim}"
            )
        return x

    def _run(self, x: np.ndarray) -> _Cache:
        x = self._check_input(x)
        inputs, pre = [], []
        h = x
        for i in range(len(self.spec.hidden_dims)):
            inputs.append(h)
            z = h @ self.params.view(f"hidden_{i:02d}.W") + self.params.view(f"hidden_{i:02d}.b")
            pre.append(z)
            h = _activate(self.spec.hidden_activation, z)
        inputs.append(h)
        heads = [
            head_forward(
                head,
                h @ self.params.view(f"head_{j:02d}.W") + self.params.view(f"head_{j:02d}.b"),
                self.spec.sigma_min,
            )
            for j, head in enumerate(self.spec.output_heads)
        ]
        return _Cache(inputs, pre, heads)

    def forward(self, x: np.ndarray) -> list[HeadOutput]:
        self._cache = self._run(x)
        return self._cache.heads

    def predict(self, x: np.ndarray) -> list[HeadOutput]:
        return self._run(x).heads

    def backward(self, upstream: Sequence[Grad | None]) -> np.ndarray:
        """Accumulate d loss / d params into ``params.grads``; return d loss / d input."""
        if self._cache is None:
            raise StateError("backward called without a preceding forward")
        if len(upstream) != len(self.spec.output_heads):
            raise ContractError("One upstream gradient (or None) is required per head")
        cache, self._cache = self._cache, None
        p = self.params
        trunk = cache.inputs[-1]
        g_h = np.zeros_like(trunk)
        for j, (out, grad) in enumerate(zip(cache.heads, upstream)):
            if grad is None:
                continue
            g_raw = head_backward(out, grad, self.spec.sigma_min)
            p.grad_view(f"head_{j:02d}.W")[...] += trunk.T @ g_raw
            p.grad_view(f"head_{j:02d}.b")[...] += g_raw.sum(axis=0)
            g_h += g_raw @ p.view(f"head_{j:02d}.W").T
        for i in reversed(range(len(self.spec.hidden_dims))):
            g_pre = g_h * _activate_grad(self.spec.hidden_activation, cache.pre[i])
            p.grad_view(f"hidden_{i:02d}.W")[...] += cache.inputs[i].T @ g_pre
            p.grad_view(f"hidden_{i:02d}.b")[...] += g_pre.sum(axis=0)
            g_h = g_pre @ p.view(f"hidden_{i:02d}.W").T
        return g_h

    def zero_grad(self) -> None:
        self.params.zero_grad()
