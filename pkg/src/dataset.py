"""Columnar datasets keyed by graph node, with CSV + JSON-schema persistence."""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import orjson
import pandas as pd
from sklearn.model_selection import train_test_split

from src.errors import ContractError
from src.graph import Role

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY


class DistKind(str, Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    node: str
    role: Role
    kind: DistKind
    categories: int | None = None

    def __post_init__(self):
        if self.kind == DistKind.CATEGORICAL and (self.categories or 0) < 2:
            raise ContractError(f"Categorical column {self.name} needs categories >= 2")

    @property
    def encoded_width(self) -> int:
        """Width when used as a network input (one-hot for categoricals)."""
        return self.categories if self.kind == DistKind.CATEGORICAL else 1


@dataclass(frozen=True)
class DataProfile:
    columns: tuple[ColumnSpec, ...]
    noise_widths: dict[str, int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def nodes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for col in self.columns:
            seen.setdefault(col.node)
        return tuple(seen)

    def node_columns(self, node: str) -> tuple[ColumnSpec, ...]:
        cols = tuple(c for c in self.columns if c.node == node)
        if not cols:
            raise ContractError(f"No columns for node {node!r}; profile has {list(self.nodes)}")
        return cols

    def width(self, node: str) -> int:
        return len(self.node_columns(node))

    def encoded_width(self, node: str) -> int:
        return sum(c.encoded_width for c in self.node_columns(node))

    def role(self, node: str) -> Role:
        return self.node_columns(node)[0].role

    def restrict(self, nodes) -> "DataProfile":
        keep = set(nodes)
        return DataProfile(
            columns=tuple(c for c in self.columns if c.node in keep),
            noise_widths={k: v for k, v in self.noise_widths.items() if k in keep},
        )

    def to_document(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "columns": [
                {
                    "name": c.name,
                    "node": c.node,
                    "role": c.role.value,
                    "kind": c.kind.value,
                    "categories": c.categories,
                }
                for c in self.columns
            ],
            "noise_widths": dict(sorted(self.noise_widths.items())),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "DataProfile":
        if doc.get("version") != SCHEMA_VERSION:
            raise ContractError(f"Unsupported dataset schema version {doc.get('version')}")
        return cls(
            columns=tuple(
                ColumnSpec(
                    name=c["name"],
                    node=c["node"],
                    role=Role(c["role"]),
                    kind=DistKind(c["kind"]),
                    categories=c.get("categories"),
                )
                for c in doc["columns"]
            ),
            noise_widths=dict(doc.get("noise_widths", {})),
        )


def noise_column_names(node: str, width: int) -> list[str]:
    return [f"u_{node}_{j}" for j in range(width)]


@dataclass
class Dataset:
    """Records as per-node float64 matrices of shape (n, width).

    ``noise`` holds the exogenous draws that generated each record when the
    dataset comes from a known structural model; counterfactuals need it.
    """

    profile: DataProfile
    values: dict[str, np.ndarray]
    noise: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        sizes = {v.shape[0] for v in self.values.values()}
        if len(sizes) > 1:
            raise ContractError(f"Node matrices disagree on record count: {sorted(sizes)}")
        for node, arr in self.values.items():
            if arr.ndim != 2 or arr.shape[1] != self.profile.width(node):
                raise ContractError(
                    f"Node {node} has shape {arr.shape}, expected (n, {self.profile.width(node)})"
                )

    @property
    def n(self) -> int:
        return next(iter(self.values.values())).shape[0] if self.values else 0

    @property
    def has_noise(self) -> bool:
        return self.noise is not None

    def has_node(self, node: str) -> bool:
        return node in self.values

    def node(self, node: str) -> np.ndarray:
        try:
            return self.values[node]
        except KeyError:
            raise ContractError(
                f"Dataset is missing node {node!r}; available: {sorted(self.values)}"
            ) from None

    def column(self, name: str) -> np.ndarray:
        for col in self.profile.columns:
            if col.name == name:
                cols = self.profile.node_columns(col.node)
                return self.node(col.node)[:, cols.index(col)]
        raise ContractError(f"Unknown column {name!r}")

    def with_values(self, **nodes: np.ndarray) -> "Dataset":
        values = dict(self.values)
        for node, arr in nodes.items():
            arr = np.asarray(arr, dtype=np.float64)
            values[node] = arr.reshape(self.n, -1) if arr.ndim < 2 else arr
        return replace(self, values=values)

    def take(self, index: np.ndarray) -> "Dataset":
        noise = {k: v[index] for k, v in self.noise.items()} if self.noise is not None else None
        return Dataset(self.profile, {k: v[index] for k, v in self.values.items()}, noise)

    def drop(self, *nodes: str) -> "Dataset":
        keep = [n for n in self.profile.nodes if n not in nodes]
        noise = (
            {k: v for k, v in self.noise.items() if k not in nodes}
            if self.noise is not None
            else None
        )
        return Dataset(
            self.profile.restrict(keep), {k: self.values[k] for k in keep}, noise
        )

    def without_noise(self) -> "Dataset":
        return Dataset(self.profile, dict(self.values), None)

    # --- tabular IO ---

    def to_frame(self, with_noise: bool = False) -> pd.DataFrame:
        data: dict[str, np.ndarray] = {}
        for node in self.profile.nodes:
            for j, col in enumerate(self.profile.node_columns(node)):
                data[col.name] = self.values[node][:, j]
        if with_noise:
            if self.noise is None:
                raise ContractError("Dataset carries no exogenous noise to export")
            for node in sorted(self.noise):
                arr = self.noise[node]
                for j, name in enumerate(noise_column_names(node, arr.shape[1])):
                    data[name] = arr[:, j]
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, profile: DataProfile) -> "Dataset":
        missing = [c.name for c in profile.columns if c.name not in frame.columns]
        if missing:
            raise ContractError(f"Data is missing columns required by the schema: {missing}")
        values = {
            node: frame[[c.name for c in profile.node_columns(node)]].to_numpy(dtype=np.float64)
            for node in profile.nodes
        }
        noise = None
        if profile.noise_widths:
            names = {
                node: noise_column_names(node, w) for node, w in profile.noise_widths.items()
            }
            if all(name in frame.columns for cols in names.values() for name in cols):
                noise = {
                    node: frame[cols].to_numpy(dtype=np.float64) for node, cols in names.items()
                }
        return cls(profile, values, noise)

    def save(self, path: str | Path, with_noise: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(with_noise=with_noise).to_csv(path, index=False)
        profile = self.profile if with_noise else replace(self.profile, noise_widths={})
        schema_path(path).write_bytes(orjson.dumps(profile.to_document(), option=JSON_OPTIONS))
        logger.info("Wrote %d records to %s", self.n, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        path = Path(path)
        sidecar = schema_path(path)
        if not sidecar.exists():
            raise ContractError(f"Schema sidecar not found next to {path} (expected {sidecar})")
        profile = DataProfile.from_document(orjson.loads(sidecar.read_bytes()))
        frame = pd.read_csv(path, float_precision="round_trip")
        return cls.from_frame(frame, profile)


def schema_path(path: Path) -> Path:
    return path.with_name(path.stem + ".schema.json")


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random train/test split; both parts keep their noise."""
    if not 0.0 < train_fraction < 1.0:
        raise ContractError(f"train_fraction must be in (0, 1), got {train_fraction}")
    train_idx, test_idx = train_test_split(
        np.arange(dataset.n), train_size=train_fraction, random_state=seed
    )
    return dataset.take(np.sort(train_idx)), dataset.take(np.sort(test_idx))
