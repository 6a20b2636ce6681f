"""Nested path-specific counterfactuals on a known SCM (the brute-force oracle)."""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.dataset import Dataset
from src.errors import ContractError
from src.graph import DirectedPath, PathSet, require_identifiable
from src.scm.mechanism import as_matrix
from src.scm.model import Scm, sample_dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NestedCounterfactual:
    """The sensitive value is ``active`` along paths in ``pi`` and ``base`` elsewhere."""

    pi: PathSet = field(default_factory=frozenset)
    active: float = 1.0
    base: float = 0.0


@dataclass(frozen=True)
class PseEstimate:
    value: float
    stderr: float
    n: int

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "n": self.n}


class CounterfactualWorld:
    """Per-record node values in a (nested) counterfactual world.

    Values depend on the path suffix a node is read along: the sensitive node
    read along ``(A, ..., Y)`` yields the active value when that path is in
    ``pi`` and the base value otherwise. With ``pi=None`` every read of A is
    active, i.e. the world of do(A=active). Nodes that are not descendants of A
    keep their factual values.
    """

    def __init__(
        self,
        scm: Scm,
        factual: Dataset,
        active=None,
        base=None,
        pi: PathSet | None = None,
    ):
        if factual.noise is None:
            raise ContractError("Counterfactual worlds need records that carry their noise")
        self.scm = scm
        self.factual = factual
        self.pi = pi
        graph = scm.graph
        self.sensitive = graph.sensitive
        self.outcome = graph.outcome
        self._downstream = graph.descendants(self.sensitive)
        observed_a = factual.node(self.sensitive)
        # active=None is the factual world itself
        self._identity = active is None
        self._active = observed_a if active is None else as_matrix(active, factual.n, 1)
        self._base = observed_a if base is None else as_matrix(base, factual.n, 1)
        self._memo: dict[tuple[str, tuple[str, ...]], np.ndarray] = {}

    @classmethod
    def identity(cls, scm: Scm, factual: Dataset) -> "CounterfactualWorld":
        return cls(scm, factual)

    def default_suffix(self, name: str) -> tuple[str, ...]:
        """Inputs of a predictor stand in for parents of the outcome."""
        return (name,) if name == self.outcome else (name, self.outcome)

    def node(self, name: str, suffix: tuple[str, ...] | None = None) -> np.ndarray:
        self.scm.graph.node(name)
        if suffix is None:
            suffix = self.default_suffix(name)
        if suffix[0] != name:
            raise ContractError(f"Suffix {suffix} must start at {name}")
        return self._value(name, tuple(suffix))

    def _value(self, name: str, suffix: tuple[str, ...]) -> np.ndarray:
        if self._identity or (name != self.sensitive and name not in self._downstream):
            return self.factual.node(name)
        if self.pi is None:
            suffix = ()
        key = (name, suffix)
        if key in self._memo:
            return self._memo[key]
        if name == self.sensitive:
            if self.pi is None or DirectedPath(suffix) in self.pi:
                out = self._active
            else:
                out = self._base
        else:
            mech = self.scm.mechanisms[name]
            parents = {
                p: self._value(p, (p,) + suffix if self.pi is not None else ())
                for p in mech.parents
            }
            out = mech(parents, self.factual.noise[name])
        self._memo[key] = out
        return out

    def blocked(self, name: str, base_a) -> np.ndarray:
        """``name`` reading A along (A, name, Y) while every other A-descendant
        parent is evaluated under do(A=base_a) on the same noise."""
        mech = self.scm.mechanisms[name]
        under_base = CounterfactualWorld(self.scm, self.factual, active=base_a)
        parents = {}
        for p in mech.parents:
            if p == self.sensitive:
                parents[p] = self.node(p, (p, name, self.outcome))
            elif p in self._downstream:
                parents[p] = under_base.node(p)
            else:
                parents[p] = self.factual.node(p)
        return mech(parents, self.factual.noise[name])

    def records(self) -> Dataset:
        """All nodes, each read along its default suffix."""
        if self._identity:
            return self.factual
        values = {node: self.node(node) for node in self.factual.values}
        return Dataset(self.factual.profile, values, self.factual.noise)


def nested_world(
    scm: Scm, dataset: Dataset, pi: PathSet, active, base
) -> CounterfactualWorld:
    require_identifiable(scm.graph, pi)
    return CounterfactualWorld(scm, dataset, active=active, base=base, pi=pi)


def pse(scm: Scm, nc: NestedCounterfactual, n: int, seed: int) -> PseEstimate:
    """Monte-Carlo path-specific effect E[Y(nested)] - E[Y(a')], noise shared across terms."""
    require_identifiable(scm.graph, nc.pi)
    data = sample_dataset(scm, n, seed)
    nested = CounterfactualWorld(scm, data, active=nc.active, base=nc.base, pi=nc.pi)
    reference = CounterfactualWorld(scm, data, active=nc.base)
    outcome = scm.graph.outcome
    diff = (nested.node(outcome) - reference.node(outcome)).mean(axis=1)
    stderr = float(diff.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    estimate = PseEstimate(float(diff.mean()), stderr, n)
    logger.info(
        "PSE of %s along {%s}: %.6f (se %.6f, n=%d)",
        scm.graph.sensitive, ", ".join(sorted(str(p) for p in nc.pi)),
        estimate.value, estimate.stderr, n,
    )
    return estimate
