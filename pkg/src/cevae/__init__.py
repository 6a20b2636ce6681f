from src.cevae.checkpoint import (
    load_checkpoint,
    model_from_document,
    model_to_document,
    save_checkpoint,
)
from src.cevae.config import TrainConfig
from src.cevae.decode import (
    APolicy,
    DecodeMode,
    Reconstruction,
    counterfactual_reconstruct,
    decoding_summary,
    nested_r_star,
    reconstruct,
    resolving_node,
)
from src.cevae.elbo import ElboTerms, elbo, elbo_pass
from src.cevae.model import CevaeLayout, CevaeModel, Posterior, infer
from src.cevae.train import EpochHook, TrainResult, train

__all__ = [
    "APolicy",
    "CevaeLayout",
    "CevaeModel",
    "DecodeMode",
    "ElboTerms",
    "EpochHook",
    "Posterior",
    "Reconstruction",
    "TrainConfig",
    "TrainResult",
    "counterfactual_reconstruct",
    "decoding_summary",
    "elbo",
    "elbo_pass",
    "infer",
    "load_checkpoint",
    "model_from_document",
    "model_to_document",
    "nested_r_star",
    "reconstruct",
    "resolving_node",
    "save_checkpoint",
    "train",
]
