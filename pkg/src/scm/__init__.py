from src.scm.generators import (
    AppendixDgpParams,
    Fig2Config,
    LinearScm,
    MechanismTemplate,
    appendix_dgp,
    appendix_outcome_logit,
    linear_gaussian_scm,
    semi_synthetic_fig2,
)
from src.scm.mechanism import Mechanism, bernoulli, categorical, gaussian
from src.scm.model import Scm, counterfactual_record, intervene_sample, sample_dataset
from src.scm.nested import (
    CounterfactualWorld,
    NestedCounterfactual,
    PseEstimate,
    nested_world,
    pse,
)

__all__ = [
    "AppendixDgpParams",
    "CounterfactualWorld",
    "Fig2Config",
    "LinearScm",
    "Mechanism",
    "MechanismTemplate",
    "NestedCounterfactual",
    "PseEstimate",
    "Scm",
    "appendix_dgp",
    "appendix_outcome_logit",
    "bernoulli",
    "categorical",
    "counterfactual_record",
    "gaussian",
    "intervene_sample",
    "linear_gaussian_scm",
    "nested_world",
    "pse",
    "sample_dataset",
    "semi_synthetic_fig2",
]
