from src.fairpred.aux import (
    AuxConfig,
    AuxModel,
    accuracy,
    bce,
    load_aux,
    predict,
    save_aux,
    train_aux,
)
from src.fairpred.evaluation import (
    AuxPredictor,
    baselines,
    outcome_labels,
    raw_features,
    split_indices,
    sweep,
)
from src.fairpred.selection import (
    DEFAULT_SWEEP,
    R_STAR,
    InputSelection,
    build_inputs,
    parse_selections,
    world_inputs,
)

__all__ = [
    "DEFAULT_SWEEP",
    "R_STAR",
    "AuxConfig",
    "AuxModel",
    "AuxPredictor",
    "InputSelection",
    "accuracy",
    "baselines",
    "bce",
    "build_inputs",
    "load_aux",
    "outcome_labels",
    "parse_selections",
    "predict",
    "raw_features",
    "save_aux",
    "split_indices",
    "sweep",
    "train_aux",
    "world_inputs",
]
