"""Factual and counterfactual decoding through the generative chain.

All decoders draw from one generator in the same order (latent noise first,
then one draw per generated node in topological order), so decodings that
share a seed share their randomness.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from src.cevae.model import CevaeModel, Values, infer, sensitive_codes
from src.dataset import DataProfile, Dataset
from src.errors import ContractError
from src.graph import Role
from src.nnet import head_mean, head_sample
from src.rng import substream

logger = logging.getLogger(__name__)


class DecodeMode(str, Enum):
    MEAN = "mean"
    SAMPLE = "sample"


class APolicy(str, Enum):
    SWITCH = "switch"
    SET = "set"


@dataclass
class Reconstruction:
    data: Dataset
    z: np.ndarray
    a: np.ndarray


def _latent(
    model: CevaeModel, dataset: Dataset, mode: DecodeMode, rng: np.random.Generator
) -> np.ndarray:
    post = infer(model, dataset)
    eps = rng.standard_normal(post.mean.shape)
    if mode == DecodeMode.MEAN:
        return post.mean
    return post.mean + post.sd * eps


def _decode(
    model: CevaeModel,
    dataset: Dataset,
    z: np.ndarray,
    a_for: Callable[[str], np.ndarray],
    mode: DecodeMode,
    rng: np.random.Generator,
    until: str | None = None,
) -> Values:
    values = dict(dataset.values)
    for node in model.layout.generated:
        inputs, _ = model.decoder_input(node, values, z)
        routed = model.route(node, model.decoders[node].predict(inputs), a_for(node))
        values[node] = head_mean(routed) if mode == DecodeMode.MEAN else head_sample(routed, rng)
        if node == until:
            break
    return values


def _output_profile(model: CevaeModel, dataset: Dataset) -> DataProfile:
    missing = [n for n in model.layout.generated if n not in dataset.profile.nodes]
    if not missing:
        return dataset.profile
    extra = model.profile.restrict(missing).columns
    return DataProfile(columns=dataset.profile.columns + extra)


def _policy_codes(a_obs: np.ndarray, policy: APolicy, value) -> np.ndarray:
    if policy == APolicy.SWITCH:
        return 1 - a_obs
    if value is None:
        raise ContractError("The set policy needs a value for the sensitive attribute")
    v = np.asarray(value, dtype=np.float64)
    if v.size == a_obs.size:
        v = v.reshape(a_obs.shape)
    return sensitive_codes(np.broadcast_to(v, a_obs.shape))


def counterfactual_reconstruct(
    model: CevaeModel,
    dataset: Dataset,
    policy: APolicy | str = APolicy.SWITCH,
    value=None,
    mode: DecodeMode | str = DecodeMode.SAMPLE,
    seed: int = 0,
) -> Reconstruction:
    """Infer z from the factual records, then decode every node under the policy's a."""
    policy, mode = APolicy(policy), DecodeMode(mode)
    rng = substream(seed, "cevae", "decode")
    a_obs = sensitive_codes(dataset.node(model.layout.sensitive))
    a_new = _policy_codes(a_obs, policy, value)
    z = _latent(model, dataset, mode, rng)
    values = _decode(model, dataset, z, lambda node: a_new, mode, rng)
    values[model.layout.sensitive] = a_new.astype(np.float64).reshape(-1, 1)
    data = Dataset(_output_profile(model, dataset), values, None)
    return Reconstruction(data, z, a_new)


def reconstruct(
    model: CevaeModel,
    dataset: Dataset,
    mode: DecodeMode | str = DecodeMode.SAMPLE,
    seed: int = 0,
) -> Reconstruction:
    """Factual reconstruction: decode with each record's observed a."""
    a_obs = dataset.node(model.layout.sensitive)
    return counterfactual_reconstruct(model, dataset, APolicy.SET, a_obs, mode, seed)


def resolving_node(model: CevaeModel) -> str:
    found = [n for n in model.graph.by_role(Role.RESOLVING) if n in model.layout.generated]
    if len(found) != 1:
        raise ContractError(
            f"Graph {model.graph.name} needs exactly one resolving node for R*, found {found}"
        )
    return found[0]


def nested_r_star(
    model: CevaeModel,
    dataset: Dataset,
    base_a,
    mode: DecodeMode | str = DecodeMode.SAMPLE,
    seed: int = 0,
    z: np.ndarray | None = None,
) -> np.ndarray:
    """R decoded from (z, b, observed a, x'), where x' is decoded under a'.

    Only A->X carries the base value, which blocks A->X->R->Y. A given ``z``
    replaces the latent inferred from ``dataset``.
    """
    mode = DecodeMode(mode)
    r = resolving_node(model)
    rng = substream(seed, "cevae", "decode")
    a_obs = sensitive_codes(dataset.node(model.layout.sensitive))
    a_base = _policy_codes(a_obs, APolicy.SET, base_a)
    inferred = _latent(model, dataset, mode, rng)
    z = inferred if z is None else np.asarray(z, dtype=np.float64)
    values = _decode(
        model, dataset, z, lambda node: a_obs if node == r else a_base, mode, rng, until=r
    )
    return values[r]


def decoding_summary(
    model: CevaeModel, dataset: Dataset, mode: DecodeMode | str = DecodeMode.MEAN, seed: int = 0
) -> pd.DataFrame:
    """Per generated column and observed a: observed, reconstructed and set(a=0/1) means."""
    a_obs = sensitive_codes(dataset.node(model.layout.sensitive))
    factual = reconstruct(model, dataset, mode, seed).data
    under = {
        v: counterfactual_reconstruct(model, dataset, APolicy.SET, v, mode, seed).data
        for v in (0, 1)
    }
    rows = []
    for node in model.layout.generated:
        for col in model.profile.node_columns(node):
            for group in (0, 1):
                sel = a_obs == group
                if not sel.any():
                    continue
                rows.append(
                    {
                        "column": col.name,
                        "observed_a": group,
                        "n": int(sel.sum()),
                        "observed_mean": float(dataset.column(col.name)[sel].mean()),
                        "reconstructed_mean": float(factual.column(col.name)[sel].mean()),
                        "set_a0_mean": float(under[0].column(col.name)[sel].mean()),
                        "set_a1_mean": float(under[1].column(col.name)[sel].mean()),
                    }
                )
    return pd.DataFrame(rows)
