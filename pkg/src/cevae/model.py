"""CEVAE networks laid out by the causal graph.

The inference network reads every observed node except the outcome. Every
observed non-root node other than A gets a generative network whose inputs are
its graph parents (the latent node contributes z). Networks of children of A
have one output head per value of A (TAR heads) and A selects the head.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.cevae.config import TrainConfig
from src.dataset import DataProfile, Dataset, DistKind
from src.errors import ContractError
from src.graph import CausalGraph, Role, validate_dag
from src.nnet import Activation, HeadKind, HeadOutput, HeadSpec, Mlp, MlpSpec
from src.rng import substream

logger = logging.getLogger(__name__)

Values = dict[str, np.ndarray]

_HEAD_KINDS = {
    DistKind.GAUSSIAN: HeadKind.GAUSSIAN,
    DistKind.BERNOULLI: HeadKind.BERNOULLI,
    DistKind.CATEGORICAL: HeadKind.CATEGORICAL,
}


def sensitive_codes(values: np.ndarray) -> np.ndarray:
    """Binary sensitive values as an int vector of shape (n,)."""
    a = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ContractError("The sensitive attribute must be binary (0/1)")
    return a.astype(np.int64)


def encode_values(profile: DataProfile, node: str, values: np.ndarray) -> np.ndarray:
    """Network encoding of a node's columns; categoricals become one-hot."""
    parts = []
    for j, col in enumerate(profile.node_columns(node)):
        v = values[:, j]
        if col.kind == DistKind.CATEGORICAL:
            codes = np.rint(v).astype(np.int64)
            if np.any(codes < 0) or np.any(codes >= col.categories):
                raise ContractError(f"Column {col.name} has codes outside 0..{col.categories - 1}")
            parts.append(np.eye(col.categories)[codes])
        else:
            parts.append(v.reshape(-1, 1))
    return np.hstack(parts)


@dataclass(frozen=True)
class Posterior:
    mean: np.ndarray
    sd: np.ndarray


@dataclass(frozen=True)
class CevaeLayout:
    sensitive: str
    latent: str
    latent_dim: int
    inference_inputs: tuple[str, ...]
    generated: tuple[str, ...]
    decoder_inputs: dict[str, tuple[str, ...]]
    tar: dict[str, bool]

    @classmethod
    def derive(cls, graph: CausalGraph, latent_dim: int) -> "CevaeLayout":
        order = validate_dag(graph)
        sensitive = graph.sensitive
        outcome = graph.outcome
        latents = [n for n in graph.by_role(Role.LATENT) if not graph.node(n).observed]
        if len(latents) != 1:
            raise ContractError(
                f"Graph {graph.name} needs exactly one unobserved latent node, found {latents}"
            )
        observed = set(graph.observed)
        generated = tuple(
            n for n in order if n in observed and n != sensitive and graph.parents(n)
        )
        return cls(
            sensitive=sensitive,
            latent=latents[0],
            latent_dim=latent_dim,
            inference_inputs=tuple(n for n in order if n in observed and n != outcome),
            generated=generated,
            decoder_inputs={
                n: tuple(p for p in graph.parents(n) if p != sensitive) for n in generated
            },
            tar={n: sensitive in graph.parents(n) for n in generated},
        )


class CevaeModel:
    def __init__(
        self,
        graph: CausalGraph,
        profile: DataProfile,
        config: TrainConfig,
        encoder: Mlp,
        decoders: dict[str, Mlp],
    ):
        self.graph = graph
        self.profile = profile
        self.config = config
        self.layout = CevaeLayout.derive(graph, config.latent_dim)
        self.encoder = encoder
        self.decoders = decoders
        missing = sorted(set(self.layout.generated) - set(decoders))
        if missing:
            raise ContractError(f"No generative network for nodes {missing}")

    @classmethod
    def build(
        cls, graph: CausalGraph, profile: DataProfile, config: TrainConfig | None = None
    ) -> "CevaeModel":
        config = config or TrainConfig()
        layout = CevaeLayout.derive(graph, config.latent_dim)
        absent = [n for n in graph.observed if n not in profile.nodes]
        if absent:
            raise ContractError(f"Data profile lacks observed graph nodes {absent}")
        profile = profile.restrict(graph.observed)
        rng = substream(config.seed, "cevae", "init")

        def spec(input_dim: int, heads: tuple[HeadSpec, ...]) -> MlpSpec:
            return MlpSpec(
                input_dim=input_dim,
                hidden_dims=(config.hidden_width,),
                hidden_activation=Activation.ELU,
                output_heads=heads,
                sigma_min=config.sigma_min,
            )

        encoder_width = sum(profile.encoded_width(n) for n in layout.inference_inputs)
        latent_head = HeadSpec(HeadKind.GAUSSIAN, config.latent_dim)
        encoder = Mlp(spec(encoder_width, (latent_head,)), rng=rng)
        decoders = {}
        for node in layout.generated:
            head = node_head(profile, node)
            heads = (head, head) if layout.tar[node] else (head,)
            width = _decoder_width(layout, profile, node)
            decoders[node] = Mlp(spec(width, heads), rng=rng)
        logger.info(
            "Built CEVAE over %s: encoder inputs %s, generated %s, latent_dim=%d",
            graph.name, list(layout.inference_inputs), list(layout.generated), config.latent_dim,
        )
        return cls(graph, profile, config, encoder, decoders)

    def networks(self) -> dict[str, Mlp]:
        nets = {"encoder": self.encoder}
        nets.update({f"decoder.{node}": net for node, net in self.decoders.items()})
        return nets

    # --- inputs ---

    def inference_input(self, values: Values) -> np.ndarray:
        return np.hstack(
            [
                encode_values(self.profile, n, _require(values, n))
                for n in self.layout.inference_inputs
            ]
        )

    def decoder_input(
        self, node: str, values: Values, z: np.ndarray
    ) -> tuple[np.ndarray, slice | None]:
        """Decoder input for ``node`` and the columns occupied by z."""
        parts, offset, z_cols = [], 0, None
        for parent in self.layout.decoder_inputs[node]:
            if parent == self.layout.latent:
                block = z
                z_cols = slice(offset, offset + z.shape[1])
            else:
                block = encode_values(self.profile, parent, _require(values, parent))
            parts.append(block)
            offset += block.shape[1]
        if not parts:
            return np.ones((z.shape[0], 1)), None
        return np.hstack(parts), z_cols

    def route(self, node: str, outs: list[HeadOutput], a: np.ndarray) -> HeadOutput:
        """Per record, the head selected by that record's a."""
        if not self.layout.tar[node]:
            return outs[0]
        params = {}
        for key, head0 in outs[0].params.items():
            pick = (a == 1).reshape((-1,) + (1,) * (head0.ndim - 1))
            params[key] = np.where(pick, outs[1].params[key], head0)
        return HeadOutput(outs[0].spec, outs[0].raw, params)


def node_head(profile: DataProfile, node: str) -> HeadSpec:
    cols = profile.node_columns(node)
    kinds = {c.kind for c in cols}
    if len(kinds) != 1:
        mixed = sorted(k.value for k in kinds)
        raise ContractError(f"Node {node} mixes distribution kinds {mixed}")
    kind = kinds.pop()
    categories = cols[0].categories if kind == DistKind.CATEGORICAL else None
    if kind == DistKind.CATEGORICAL and any(c.categories != categories for c in cols):
        raise ContractError(f"Categorical columns of {node} disagree on the number of classes")
    return HeadSpec(_HEAD_KINDS[kind], len(cols), categories)


def _decoder_width(layout: CevaeLayout, profile: DataProfile, node: str) -> int:
    width = sum(
        layout.latent_dim if p == layout.latent else profile.encoded_width(p)
        for p in layout.decoder_inputs[node]
    )
    return width or 1


def _require(values: Values, node: str) -> np.ndarray:
    try:
        return values[node]
    except KeyError:
        raise ContractError(f"Records are missing node {node!r}") from None


def infer(model: CevaeModel, dataset: Dataset) -> Posterior:
    """Posterior q(z | observed non-outcome nodes) per record."""
    out = model.encoder.predict(model.inference_input(dataset.values))[0]
    return Posterior(out["mean"], out["sd"])
