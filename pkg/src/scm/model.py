import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from src.dataset import ColumnSpec, DataProfile, Dataset
from src.errors import ContractError
from src.graph import CausalGraph, validate_dag
from src.rng import substream
from src.scm.mechanism import Mechanism, Values, as_matrix

logger = logging.getLogger(__name__)

Assignments = Mapping[str, float | np.ndarray]


def default_columns(node: str, width: int) -> tuple[str, ...]:
    base = node.lower()
    return (base,) if width == 1 else tuple(f"{base}{j + 1}" for j in range(width))


@dataclass(frozen=True, eq=False)
class Scm:
    """Ground-truth structural causal model over a role-labeled graph."""

    graph: CausalGraph
    mechanisms: dict[str, Mechanism] = field(default_factory=dict)
    name: str = "scm"

    def __post_init__(self):
        order = validate_dag(self.graph)
        missing = [n for n in order if n not in self.mechanisms]
        if missing:
            raise ContractError(f"No mechanism for nodes {missing} in {self.name}")
        extra = sorted(set(self.mechanisms) - set(order))
        if extra:
            raise ContractError(f"Mechanisms for nodes outside the graph: {extra}")
        for node in order:
            expected = set(self.graph.parents(node))
            declared = set(self.mechanisms[node].parents)
            if declared != expected:
                stray = sorted(declared - expected)
                absent = sorted(expected - declared)
                raise ContractError(
                    f"Mechanism for {node} does not match the graph: "
                    f"reads non-parents {stray}, ignores parents {absent}"
                )

    @property
    def order(self) -> tuple[str, ...]:
        return self.graph.topological_order

    @cached_property
    def profile(self) -> DataProfile:
        columns = []
        for node in self.order:
            mech = self.mechanisms[node]
            role = self.graph.node(node).role
            names = mech.columns or default_columns(node, mech.width)
            columns.extend(
                ColumnSpec(name, node, role, mech.kind, mech.categories) for name in names
            )
        return DataProfile(
            columns=tuple(columns),
            noise_widths={node: self.mechanisms[node].noise_width for node in self.order},
        )

    def sample_noise(self, n: int, rng: np.random.Generator) -> Values:
        return {node: self.mechanisms[node].noise(rng, n) for node in self.order}

    def evaluate(
        self, noise: Values, do: Assignments | None = None, factual: Values | None = None
    ) -> Values:
        """Evaluate all mechanisms in topological order with fixed noise.

        Nodes in ``do`` are clamped. With ``factual`` given, nodes that no clamped
        node can reach keep their factual values.
        """
        do = dict(do or {})
        self.check_assignments(do)
        n = next(iter(noise.values())).shape[0]
        affected = set(do)
        for node in do:
            affected |= self.graph.descendants(node)
        values: Values = {}
        for node in self.order:
            mech = self.mechanisms[node]
            if node in do:
                values[node] = as_matrix(do[node], n, mech.width)
            elif factual is not None and node not in affected:
                values[node] = factual[node]
            else:
                values[node] = mech(values, noise[node])
        return values

    def check_assignments(self, do: Assignments) -> None:
        for key in do:
            if self.graph.has_node(key):
                continue
            if key.lower().startswith("u_"):
                raise ContractError(f"Cannot intervene on exogenous noise {key!r}")
            raise ContractError(f"Cannot intervene on unknown node {key!r} in {self.name}")


def sample_dataset(scm: Scm, n: int, seed: int) -> Dataset:
    """Draw ``n`` records ancestrally; the exogenous noise is kept with the data."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    noise = scm.sample_noise(n, substream(seed, "scm", "sample"))
    values = scm.evaluate(noise)
    logger.debug("Sampled %d records from %s", n, scm.name)
    return Dataset(scm.profile, values, noise)


def intervene_sample(scm: Scm, do: Assignments, n: int, seed: int) -> Dataset:
    """Sample from the post-intervention distribution do(...)."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    scm.check_assignments(do)
    noise = scm.sample_noise(n, substream(seed, "scm", "sample"))
    return Dataset(scm.profile, scm.evaluate(noise, do), noise)


def counterfactual_record(scm: Scm, dataset: Dataset, do: Assignments) -> Dataset:
    """Exact counterfactual of every record: abduction is reading the retained noise."""
    if dataset.noise is None:
        raise ContractError(
            "Counterfactuals need the exogenous noise of each record; "
            "this dataset carries none (only generated data supports exact abduction)"
        )
    factual = {node: dataset.node(node) for node in scm.order}
    values = scm.evaluate(dataset.noise, do, factual=factual)
    return Dataset(dataset.profile, {k: values[k] for k in dataset.values}, dataset.noise)
