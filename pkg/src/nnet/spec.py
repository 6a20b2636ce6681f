from dataclasses import dataclass, field
from enum import Enum

from src.errors import ContractError

SIGMA_MIN = 0.1


class Activation(str, Enum):
    ELU = "elu"
    RELU = "relu"


class HeadKind(str, Enum):
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class HeadSpec:
    kind: HeadKind
    dim: int
    categories: int | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ContractError(f"Head dim must be >= 1, got {self.dim}")
        if self.kind == HeadKind.CATEGORICAL and (self.categories or 0) < 2:
            raise ContractError("Categorical heads need categories >= 2")

    @property
    def width(self) -> int:
        """Number of raw outputs feeding the distribution transform."""
        if self.kind == HeadKind.GAUSSIAN:
            return 2 * self.dim
        if self.kind == HeadKind.CATEGORICAL:
            return self.dim * self.categories
        return self.dim

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim, "categories": self.categories}

    @classmethod
    def from_dict(cls, doc: dict) -> "HeadSpec":
        return cls(HeadKind(doc["kind"]), int(doc["dim"]), doc.get("categories"))


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...] = (100,)
    hidden_activation: Activation = Activation.ELU
    output_heads: tuple[HeadSpec, ...] = field(default_factory=tuple)
    sigma_min: float = SIGMA_MIN

    def __post_init__(self):
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ContractError(f"All layer dims must be >= 1: {self}")
        if not self.output_heads:
            raise ContractError("An MLP needs at least one output head")

    @property
    def trunk_width(self) -> int:
        return self.hidden_dims[-1] if self.hidden_dims else self.input_dim

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        fan_in = self.input_dim
        for i, width in enumerate(self.hidden_dims):
            shapes[f"hidden_{i:02d}.W"] = (fan_in, width)
            shapes[f"hidden_{i:02d}.b"] = (width,)
            fan_in = width
        for j, head in enumerate(self.output_heads):
            shapes[f"head_{j:02d}.W"] = (fan_in, head.width)
            shapes[f"head_{j:02d}.b"] = (head.width,)
        return shapes

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "hidden_activation": self.hidden_activation.value,
            "output_heads": [h.to_dict() for h in self.output_heads],
            "sigma_min": self.sigma_min,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpSpec":
        return cls(
            input_dim=int(doc["input_dim"]),
            hidden_dims=tuple(int(h) for h in doc["hidden_dims"]),
            hidden_activation=Activation(doc["hidden_activation"]),
            output_heads=tuple(HeadSpec.from_dict(h) for h in doc["output_heads"]),
            sigma_min=float(doc.get("sigma_min", SIGMA_MIN)),
        )
