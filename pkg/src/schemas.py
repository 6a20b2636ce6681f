"""Pydantic documents for every JSON interchange format, plus JSON file helpers."""

from pathlib import Path
from typing import Any

import orjson
from pydantic import BaseModel, Field

from src.errors import ContractError
from src.graph import BUILTIN_GRAPHS, CausalGraph, Node, Role, builtin

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
REPORT_VERSION = 1


def write_json(path: str | Path, document: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(document, BaseModel):
        document = document.model_dump(mode="json")
    path.write_bytes(orjson.dumps(document, option=JSON_OPTIONS))
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise ContractError(f"File not found: {path}")
    return orjson.loads(path.read_bytes())


# --- Graph Schemas ---


class NodeSchema(BaseModel):
    name: str
    role: Role
    observed: bool = True


class GraphDocument(BaseModel):
    name: str = "custom"
    nodes: list[NodeSchema]
    edges: list[tuple[str, str]] = []

    @classmethod
    def from_graph(cls, graph: CausalGraph) -> "GraphDocument":
        return cls(
            name=graph.name,
            nodes=[NodeSchema(name=n.name, role=n.role, observed=n.observed) for n in graph.nodes],
            edges=sorted(graph.edges),
        )

    def to_graph(self) -> CausalGraph:
        return CausalGraph(
            nodes=tuple(Node(n.name, n.role, n.observed) for n in self.nodes),
            edges=frozenset(tuple(e) for e in self.edges),
            name=self.name,
        )


def load_graph(name_or_path: str) -> CausalGraph:
    """A builtin graph name or the path of a graph JSON document."""
    if name_or_path in BUILTIN_GRAPHS:
        return builtin(name_or_path)
    path = Path(name_or_path)
    if path.suffix != ".json":
        raise ContractError(
            f"Unknown graph {name_or_path!r}: not one of {sorted(BUILTIN_GRAPHS)} nor a .json file"
        )
    return GraphDocument.model_validate(read_json(path)).to_graph()


# --- Report Schemas ---


class MetricReport(BaseModel):
    metric: str
    mode: str | None = None
    value: float
    n: int
    seed: int | None = None
    stderr: float | None = None


class IdentifiabilityReport(BaseModel):
    graph: str
    paths: list[str]
    identifiable: bool
    witness: str | None = None
    conflict: list[str] | None = None


class PseReport(BaseModel):
    graph: str
    paths: list[str]
    active: float
    base: float
    value: float
    stderr: float
    n: int
    seed: int
    closed_form: float | None = None


class SanityResult(BaseModel):
    accuracy_original: float = Field(ge=0.0, le=1.0)
    accuracy_reconstructed: float = Field(ge=0.0, le=1.0)
    drop: float
    passed: bool
    warning: str | None = None


class ScoreSummary(BaseModel):
    mean: float
    std: float
    values: list[float]


class AuditReport(BaseModel):
    version: int = REPORT_VERSION
    model: str
    n: int
    repetitions: int
    seed: int
    seeds: list[int]
    cf_score_mean_abs: ScoreSummary
    cf_score_flip_rate: ScoreSummary
    statistical_parity: ScoreSummary
    sanity: SanityResult | None = None
    summary: str = ""
