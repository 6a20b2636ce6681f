from src.nnet.checkpoint import load_mlp, mlp_from_document, mlp_to_document, save_mlp
from src.nnet.gradcheck import grad_check, numeric_gradient, relative_error
from src.nnet.heads import (
    HeadOutput,
    head_mean,
    head_sample,
    log_prob,
    log_prob_grad,
    reparam_backward,
    sample_gaussian_reparam,
    scale_grad,
    softplus,
)
from src.nnet.mlp import Mlp
from src.nnet.optim import Algorithm, OptState, optimizer_step
from src.nnet.params import ParamStore
from src.nnet.spec import SIGMA_MIN, Activation, HeadKind, HeadSpec, MlpSpec

__all__ = [
    "SIGMA_MIN",
    "Activation",
    "Algorithm",
    "HeadKind",
    "HeadOutput",
    "HeadSpec",
    "Mlp",
    "MlpSpec",
    "OptState",
    "ParamStore",
    "grad_check",
    "head_mean",
    "head_sample",
    "load_mlp",
    "log_prob",
    "log_prob_grad",
    "mlp_from_document",
    "mlp_to_document",
    "numeric_gradient",
    "optimizer_step",
    "relative_error",
    "reparam_backward",
    "sample_gaussian_reparam",
    "scale_grad",
    "save_mlp",
    "softplus",
]
