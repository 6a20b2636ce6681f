from dataclasses import dataclass

import numpy as np

from src.errors import ContractError

Layout = dict[str, tuple[int, tuple[int, ...]]]


@dataclass
class ParamStore:
    """Flat float64 parameter vector with a name -> (offset, shape) layout.

    Named views alias the flat arrays, so optimizers can update ``values``
    in one vectorised step while layers read their own matrices.
    """

    layout: Layout
    values: np.ndarray
    grads: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grads.shape or self.values.ndim != 1:
            raise ContractError("Gradient array must match the flat parameter array")
        spans = sorted((off, off + int(np.prod(shape))) for off, shape in self.layout.values())
        cursor = 0
        for start, stop in spans:
            if start != cursor:
                raise ContractError("Parameter layout has gaps or overlaps")
            cursor = stop
        if cursor != self.values.size:
            raise ContractError("Parameter layout does not cover the parameter array")

    @classmethod
    def allocate(cls, shapes: dict[str, tuple[int, ...]]) -> "ParamStore":
        layout: Layout = {}
        offset = 0
        for name in sorted(shapes):
            shape = tuple(int(s) for s in shapes[name])
            layout[name] = (offset, shape)
            offset += int(np.prod(shape))
        return cls(layout, np.zeros(offset), np.zeros(offset))

    @property
    def size(self) -> int:
        return self.values.size

    def _slice(self, name: str) -> tuple[slice, tuple[int, ...]]:
        try:
            offset, shape = self.layout[name]
        except KeyError:
            raise ContractError(f"Unknown parameter block {name!r}") from None
        return slice(offset, offset + int(np.prod(shape))), shape

    def view(self, name: str) -> np.ndarray:
        span, shape = self._slice(name)
        return self.values[span].reshape(shape)

    def grad_view(self, name: str) -> np.ndarray:
        span, shape = self._slice(name)
        return self.grads[span].reshape(shape)

    def zero_grad(self) -> None:
        self.grads.fill(0.0)

    def copy(self) -> "ParamStore":
        return ParamStore(dict(self.layout), self.values.copy(), self.grads.copy())


def glorot_uniform(params: ParamStore, rng: np.random.Generator) -> ParamStore:
    """Weights uniform in ±sqrt(6 / (fan_in + fan_out)); biases zero."""
    for name, (_, shape) in params.layout.items():
        target = params.view(name)
        if name.endswith(".W"):
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            target[...] = rng.uniform(-bound, bound, size=shape)
        else:
            target[...] = 0.0
    return params
