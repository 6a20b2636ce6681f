"""Run configuration for the command line: a pydantic document read from TOML or
JSON and written back, fully resolved, next to every run's outputs."""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from src.cevae import TrainConfig
from src.config import settings
from src.errors import ContractError
from src.fairpred import DEFAULT_SWEEP, AuxConfig
from src.graph import DirectedPath
from src.schemas import load_graph, read_json, write_json
from src.scm import (
    AppendixDgpParams,
    Fig2Config,
    Scm,
    appendix_dgp,
    linear_gaussian_scm,
    semi_synthetic_fig2,
)

logger = logging.getLogger(__name__)


class DgpKind(str, Enum):
    APPENDIX = "appendix"
    FIG2 = "fig2-default"
    FIG2_NULL = "fig2-null"
    LINEAR = "linear"


class LinearDgp(BaseModel):
    """Linear SCM over ``graph``; edges are keyed ``"A>X"``, unlisted edges get
    ``default_coefficient``."""

    model_config = ConfigDict(extra="forbid")

    coefficients: dict[str, float] = Field(default_factory=dict)
    default_coefficient: float = 0.5
    intercepts: dict[str, float] = Field(default_factory=dict)
    noise_sd: float = Field(1.0, gt=0)
    p_a: float = Field(0.5, gt=0, lt=1)
    binary_outcome: bool = False


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    graph: str = "fig1a"
    dgp: DgpKind = DgpKind.APPENDIX
    appendix: AppendixDgpParams = Field(default_factory=AppendixDgpParams)
    fig2: Fig2Config = Field(default_factory=Fig2Config)
    linear: LinearDgp = Field(default_factory=LinearDgp)
    n: int = Field(10_000, gt=0)
    seed: int = 0
    train: TrainConfig = Field(default_factory=TrainConfig)
    aux: AuxConfig = Field(default_factory=AuxConfig)
    selections: list[str] = Field(default_factory=lambda: list(DEFAULT_SWEEP))
    base_a: float | None = None
    metrics: list[str] = Field(default_factory=lambda: ["accuracy", "sp", "oracle_cf"])
    repetitions: int = Field(default_factory=lambda: settings.repetitions, gt=0)
    train_fraction: float = Field(default_factory=lambda: settings.train_fraction, gt=0, lt=1)
    jobs: int = Field(default_factory=lambda: settings.jobs, gt=0)
    mc_samples: int = Field(default_factory=lambda: settings.mc_samples, gt=0)
    output_dir: str = Field(default_factory=lambda: settings.output_dir)


def load_config(path: str | Path | None) -> PipelineConfig:
    """TOML or JSON; a resolved-config document is accepted too."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.exists():
        raise ContractError(f"Config file not found: {path}")
    if path.suffix == ".toml":
        with path.open("rb") as f:
            doc = tomllib.load(f)
    elif path.suffix == ".json":
        doc = read_json(path)
    else:
        raise ContractError(f"Config must be .toml or .json, got {path.name}")
    if "pipeline" in doc:
        doc = doc["pipeline"]
    return PipelineConfig.model_validate(doc)


def write_resolved(path: str | Path, command: str, arguments: dict, config: PipelineConfig) -> Path:
    doc = {
        "command": command,
        "arguments": arguments,
        "pipeline": config.model_dump(mode="json"),
    }
    path = write_json(path, doc)
    logger.info("Wrote resolved config to %s", path)
    return path


def build_scm(config: PipelineConfig) -> Scm:
    if config.dgp == DgpKind.APPENDIX:
        return appendix_dgp(config.appendix)
    if config.dgp == DgpKind.FIG2:
        return semi_synthetic_fig2(config.fig2)
    if config.dgp == DgpKind.FIG2_NULL:
        y = config.fig2.y
        y = y.model_copy(update={"coefficients": dict(y.coefficients, T=0.0)})
        return semi_synthetic_fig2(config.fig2.model_copy(update={"y": y}))
    graph = load_graph(config.graph)
    explicit = {}
    for key, value in config.linear.coefficients.items():
        path = DirectedPath.parse(key)
        if len(path.nodes) != 2:
            raise ContractError(f"Coefficient key {key!r} must name a single edge like 'A>X'")
        explicit[path.edges()[0]] = value
    coefficients = {e: explicit.get(e, config.linear.default_coefficient) for e in graph.edges}
    unknown = sorted(e for e in explicit if e not in graph.edges)
    if unknown:
        raise ContractError(f"Coefficients for edges not in {graph.name}: {unknown}")
    return linear_gaussian_scm(
        graph,
        coefficients,
        intercepts=config.linear.intercepts,
        noise_sd=config.linear.noise_sd,
        p_a=config.linear.p_a,
        binary_outcome=config.linear.binary_outcome,
    )
