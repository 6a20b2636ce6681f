import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import networkx as nx

from src.errors import ContractError, GraphValidationError

logger = logging.getLogger(__name__)

PATH_SEPARATOR = ">"


class Role(str, Enum):
    SENSITIVE = "sensitive"
    LATENT = "latent"
    BASE = "base"
    COVARIATE = "covariate"
    RESOLVING = "resolving"
    OUTCOME = "outcome"
    TREATMENT = "treatment"
    OTHER = "other"


@dataclass(frozen=True)
class Node:
    name: str
    role: Role
    observed: bool = True


@dataclass(frozen=True, order=True)
class DirectedPath:
    """Directed path ``A -> ... -> Y``, written ``A>X>Y``."""

    nodes: tuple[str, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ContractError(f"A path needs at least two nodes, got {self.nodes}")
        if len(set(self.nodes)) != len(self.nodes):
            raise ContractError(f"Path nodes must be unique: {self}")

    @classmethod
    def parse(cls, text: str) -> "DirectedPath":
        return cls(tuple(part.strip() for part in text.split(PATH_SEPARATOR)))

    def edges(self) -> list[tuple[str, str]]:
        return list(zip(self.nodes[:-1], self.nodes[1:]))

    def __str__(self) -> str:
        return PATH_SEPARATOR.join(self.nodes)


PathSet = frozenset[DirectedPath]


def parse_paths(text: str) -> PathSet:
    """Parse ``"A>X>Y,A>R>Y"`` into a path set; the empty string is the empty set."""
    items = [chunk for chunk in (c.strip() for c in text.split(",")) if chunk]
    return frozenset(DirectedPath.parse(chunk) for chunk in items)


@dataclass(frozen=True)
class CausalGraph:
    """Role-labeled DAG. Immutable; derived structures are cached."""

    nodes: tuple[Node, ...]
    edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)
    name: str = "custom"

    def __post_init__(self):
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ContractError(f"Duplicate node names in graph {self.name}")
        known = set(names)
        for src, dst in self.edges:
            if src not in known or dst not in known:
                raise ContractError(f"Edge {src}->{dst} references an unknown node")

    @cached_property
    def nx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(sorted(n.name for n in self.nodes))
        g.add_edges_from(sorted(self.edges))
        return g

    @cached_property
    def _by_name(self) -> dict[str, Node]:
        return {n.name: n for n in self.nodes}

    def node(self, name: str) -> Node:
        try:
            return self._by_name[name]
        except KeyError:
            raise ContractError(f"Unknown node {name!r} in graph {self.name}") from None

    def has_node(self, name: str) -> bool:
        return name in self._by_name

    def parents(self, name: str) -> tuple[str, ...]:
        self.node(name)
        return tuple(sorted(self.nx.predecessors(name)))

    def children(self, name: str) -> tuple[str, ...]:
        self.node(name)
        return tuple(sorted(self.nx.successors(name)))

    def descendants(self, name: str) -> frozenset[str]:
        self.node(name)
        return frozenset(nx.descendants(self.nx, name))

    def by_role(self, role: Role) -> tuple[str, ...]:
        return tuple(sorted(n.name for n in self.nodes if n.role == role))

    def _single(self, role: Role) -> str:
        found = self.by_role(role)
        if len(found) != 1:
            raise ContractError(
                f"Graph {self.name} must have exactly one {role.value} node, found {list(found)}"
            )
        return found[0]

    @property
    def sensitive(self) -> str:
        return self._single(Role.SENSITIVE)

    @property
    def outcome(self) -> str:
        return self._single(Role.OUTCOME)

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(sorted(n.name for n in self.nodes if n.observed))

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        return validate_dag(self)

    def without(self, *names: str) -> "CausalGraph":
        drop = set(names)
        return CausalGraph(
            nodes=tuple(n for n in self.nodes if n.name not in drop),
            edges=frozenset(e for e in self.edges if not drop & set(e)),
            name=self.name,
        )


def validate_dag(graph: CausalGraph) -> tuple[str, ...]:
    """Return a deterministic topological order or raise with the offending cycle."""
    g = graph.nx
    if not nx.is_directed_acyclic_graph(g):
        cycle = tuple(src for src, _ in nx.find_cycle(g))
        logger.error("Graph %s contains a cycle: %s", graph.name, cycle)
        raise GraphValidationError(
            f"Graph {graph.name} is not acyclic; cycle through {', '.join(cycle)}", cycle=cycle
        )
    return tuple(nx.lexicographical_topological_sort(g))


def enumerate_paths(
    graph: CausalGraph, source: str | None = None, target: str | None = None
) -> list[DirectedPath]:
    """All directed paths from ``source`` (default A) to ``target`` (default Y),
    sorted lexicographically by node-name sequence."""
    validate_dag(graph)
    source = source or graph.sensitive
    target = target or graph.outcome
    graph.node(source)
    graph.node(target)
    paths = {tuple(p) for p in nx.all_simple_paths(graph.nx, source, target)}
    return [DirectedPath(p) for p in sorted(paths)]
