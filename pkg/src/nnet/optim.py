import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.errors import ContractError, NumericalAbort
from src.nnet.params import ParamStore

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    ADAM = "adam"
    RMSPROP = "rmsprop"


@dataclass
class OptState:
    algorithm: Algorithm
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    decay: float = 0.9  # RMSprop moving-average decay
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def adam(cls, params: ParamStore, lr: float = 1e-4, beta1: float = 0.9,
             beta2: float = 0.999, eps: float = 1e-8) -> "OptState":
        return cls(Algorithm.ADAM, lr, beta1=beta1, beta2=beta2, eps=eps,
                   m=np.zeros(params.size), v=np.zeros(params.size))

    @classmethod
    def rmsprop(cls, params: ParamStore, lr: float = 1e-3, decay: float = 0.9,
                eps: float = 1e-8) -> "OptState":
        return cls(Algorithm.RMSPROP, lr, decay=decay, eps=eps,
                   m=np.zeros(params.size), v=np.zeros(params.size))


def optimizer_step(opt: OptState, params: ParamStore) -> None:
    """Apply one update in place, clear the gradients and advance ``step_count``."""
    if opt.v.shape != params.grads.shape:
        raise ContractError("Optimizer moments do not match the parameter layout")
    g = params.grads
    if not np.all(np.isfinite(g)):
        bad = int(np.flatnonzero(~np.isfinite(g))[0])
        name = next(
            (k for k, (off, shape) in params.layout.items() if off <= bad < off + np.prod(shape)),
            "?",
        )
        logger.error("Non-finite gradient in %s at step %d", name, opt.step_count + 1)
        raise NumericalAbort(
            f"Non-finite gradient in parameter block {name} (flat index {bad}); update skipped",
            index=bad,
        )

    if opt.algorithm == Algorithm.ADAM:
        t = opt.step_count + 1
        opt.m *= opt.beta1
        opt.m += (1.0 - opt.beta1) * g
        opt.v *= opt.beta2
        opt.v += (1.0 - opt.beta2) * g * g
        m_hat = opt.m / (1.0 - opt.beta1**t)
        v_hat = opt.v / (1.0 - opt.beta2**t)
        params.values -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    else:
        opt.v *= opt.decay
        opt.v += (1.0 - opt.decay) * g * g
        params.values -= opt.lr * g / (np.sqrt(opt.v) + opt.eps)

    params.zero_grad()
    opt.step_count += 1

