"""Auxiliary-model inputs: which parts of a record a fair predictor may read.

A selection is an ordered list of tokens. ``Z`` (the latent node's name) is the
CEVAE posterior mean, ``R*`` is the resolving variable decoded with the sensitive
value held at a base a' on every path except A->R->Y, and every other token is an
observed node copied from the data.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from src.cevae import CevaeModel, DecodeMode, infer, nested_r_star, resolving_node
from src.cevae.model import encode_values
from src.dataset import Dataset
from src.errors import ContractError
from src.scm import CounterfactualWorld

logger = logging.getLogger(__name__)

R_STAR = "R*"

# Rows of the fairness/accuracy sweep, strictest first.
DEFAULT_SWEEP = ("Z", "Z,B", "Z,B,R*", "Z,B,R,X", "Z,B,R,X,A")


@dataclass(frozen=True)
class InputSelection:
    tokens: tuple[str, ...]
    base_a: float | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ContractError("An input selection needs at least one token")
        if len(set(self.tokens)) != len(self.tokens):
            raise ContractError(f"Duplicate tokens in selection {self.label}")
        if R_STAR in self.tokens:
            if self.base_a is None:
                raise ContractError("Selections with R* need a base value a'")
            if self.base_a not in (0.0, 1.0):
                raise ContractError(f"Base value a' must be 0 or 1, got {self.base_a}")

    @classmethod
    def parse(cls, text: str, base_a: float | None = None) -> "InputSelection":
        tokens = tuple(t.strip() for t in text.split(",") if t.strip())
        return cls(tokens, None if base_a is None else float(base_a))

    @property
    def label(self) -> str:
        return ",".join(self.tokens)

    def validate(self, model: CevaeModel) -> None:
        graph = model.graph
        valid = [model.layout.latent] + [n for n in graph.observed if n != graph.outcome]
        valid.append(R_STAR)
        if R_STAR in self.tokens:
            r = resolving_node(model)
            if r in self.tokens:
                raise ContractError(f"{r} and R* cannot both be inputs")
        unknown = [t for t in self.tokens if t not in valid]
        if unknown:
            raise ContractError(
                f"Selection {self.label} references {unknown}, not inputs of graph "
                f"{graph.name}; valid tokens: {valid}"
            )

    def feature_names(self, model: CevaeModel) -> list[str]:
        names: list[str] = []
        for token in self.tokens:
            if token == model.layout.latent:
                names += [f"{token}{d}" for d in range(model.layout.latent_dim)]
            elif token == R_STAR:
                r = resolving_node(model)
                names += [f"{c.name}*" for c in model.profile.node_columns(r)]
            else:
                for col in model.profile.node_columns(token):
                    if col.categories:
                        names += [f"{col.name}={k}" for k in range(col.categories)]
                    else:
                        names.append(col.name)
        return names


def _assemble(
    model: CevaeModel, selection: InputSelection, block: Callable[[str], np.ndarray]
) -> np.ndarray:
    selection.validate(model)
    return np.hstack([block(token) for token in selection.tokens])


def build_inputs(
    model: CevaeModel,
    dataset: Dataset,
    selection: InputSelection,
    z: np.ndarray | None = None,
    sample_z: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Feature matrix in selection order.

    Z is the posterior mean unless ``sample_z`` draws one posterior sample.
    """
    if z is None and model.layout.latent in selection.tokens:
        post = infer(model, dataset)
        z = post.mean
        if sample_z:
            z = post.mean + post.sd * np.random.default_rng(seed).standard_normal(post.mean.shape)

    def block(token: str) -> np.ndarray:
        if token == model.layout.latent:
            return z
        if token == R_STAR:
            r = resolving_node(model)
            return encode_values(
                model.profile, r,
                nested_r_star(model, dataset, selection.base_a, DecodeMode.MEAN, seed, z=z),
            )
        return encode_values(model.profile, token, dataset.node(token))

    return _assemble(model, selection, block)


def world_inputs(
    model: CevaeModel, world: CounterfactualWorld, selection: InputSelection
) -> np.ndarray:
    """Features of the records in an oracle world.

    Z is always inferred from the factual records. Observed inputs stand in for
    parents of the outcome. R* reads A along A->R->Y while x' is decoded under a'.
    """
    z = infer(model, world.factual).mean

    def block(token: str) -> np.ndarray:
        if token == model.layout.latent:
            return z
        if token == R_STAR:
            r = resolving_node(model)
            a = model.layout.sensitive
            a_along_r = world.node(a, (a, r, world.outcome))
            records = world.factual.with_values(**{a: a_along_r})
            return encode_values(
                model.profile, r,
                nested_r_star(model, records, selection.base_a, DecodeMode.MEAN, z=z),
            )
        return encode_values(model.profile, token, world.node(token))

    return _assemble(model, selection, block)


def parse_selections(texts: Sequence[str], base_a: float | None) -> list[InputSelection]:
    return [
        InputSelection.parse(t, base_a if R_STAR in t else None) for t in texts
    ]
